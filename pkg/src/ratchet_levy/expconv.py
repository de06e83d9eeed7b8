"""Convolutions of exponentials.

For nodes ``a_1, ..., a_n`` the n-fold convolution

    (e^{a_1 .} * ... * e^{a_n .})(x) = int_{0 < u_1 < ... } ...

equals the divided difference of ``a -> exp(a x)`` over the nodes.  Every
closed-form scale-function quantity (running integrals, the M-operator applied
to W and Z, Z(x, theta)) reduces to short sums of such terms.

The partial-fraction formula loses accuracy when two nodes nearly coincide
(gamma -> 0 makes Phi(delta + gamma) -> Phi(delta); delta -> 0 puts Phi(delta)
next to the node 0).  Those points use the divided-difference recursion on
the two extreme nodes, switching to a Taylor series about the node midpoint
once the spread of the nodes times ``x`` is small.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = ["expconv"]

# below this value of (node gap) * |x| partial fractions are abandoned
_SEPARATION = 0.1


def _taylor(nodes: tuple[float, ...], x: float) -> float:
    # e^{c x} sum_k x^(k+n-1)/(k+n-1)! h_k(nodes - c), h_k = complete homogeneous polynomial
    n = len(nodes)
    c = 0.5 * (max(nodes) + min(nodes))
    d = [a - c for a in nodes]
    r = max(abs(v) for v in d)
    h = [1.0] * n  # h_k over the first j + 1 variables
    term = x ** (n - 1) / math.factorial(n - 1)
    total = term
    for k in range(1, 400):
        for j in range(n):
            h[j] = (h[j - 1] if j else 0.0) + d[j] * h[j]
        term *= x / (k + n - 1)
        total += term * h[-1]
        # |h_k| <= C(k + n - 1, n - 1) r^k bounds what is left
        if term * math.comb(k + n - 1, n - 1) * r ** k <= 1e-17 * abs(total):
            break
    return math.exp(c * x) * total


def _divided(nodes: tuple[float, ...], x: float) -> float:
    if len(nodes) == 1:
        return math.exp(nodes[0] * x)
    nodes = tuple(sorted(nodes))
    spread = nodes[-1] - nodes[0]
    if spread * x <= 1.0:
        return _taylor(nodes, x)
    return (_divided(nodes[1:], x) - _divided(nodes[:-1], x)) / spread


def expconv(nodes, x):
    """Evaluate the convolution of ``exp(node * .)`` over ``nodes`` at ``x >= 0``.

    ``x`` may be a scalar or array; negative entries return 0.
    """
    nodes = tuple(float(a) for a in nodes)
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    out = np.zeros_like(xs)
    pos = xs > 0
    n = len(nodes)

    if n == 1:
        out[pos] = np.exp(nodes[0] * xs[pos])
        out[xs == 0] = 1.0
        return float(out[0]) if scalar else out
    # x == 0 gives 0 for n >= 2 (empty integration domain)

    gap = min(abs(p - q) for p, q in itertools.combinations(nodes, 2))
    good = pos & (gap * np.abs(xs) >= _SEPARATION)
    if good.any():
        xg = xs[good]
        acc = np.zeros_like(xg)
        for i, ai in enumerate(nodes):
            den = math.prod(ai - aj for j, aj in enumerate(nodes) if j != i)
            acc += np.exp(ai * xg) / den
        out[good] = acc
    for idx in np.flatnonzero(pos & ~good):
        out[idx] = _divided(nodes, float(xs[idx]))
    return float(out[0]) if scalar else out

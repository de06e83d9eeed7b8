"""Scale functions of a drained spectrally negative Lévy process.

``ScaleKit`` bundles everything the valuation formulas need for one drained
process at discount rate ``delta`` and observation rate ``gamma``:

* ``W^(q)``, ``Z^(q)``, their running integrals, ``Z^(q)(x, theta)`` and its
  x-derivative, for ``q`` in ``{delta, delta + gamma}`` (other rates work too);
* the operator ``M_b f(x) = f(x + b) + gamma int_0^x W^(delta+gamma)(x - y) f(y + b) dy``;
* ``W_b = M_b W^(delta)``, ``Z_b = M_b Z^(delta)`` and the kernels
  ``I_b = W_b / W^(delta)(b) - gamma Wbar^(delta+gamma)``,
  ``J_b = Z_b - gamma Z^(delta)(b) Wbar^(delta+gamma)``.

Backends
--------
``CLOSED_FORM``
    For both shipped models ``1/(psi(theta) - q)`` is rational, so
    ``W^(q)(x) = sum_i c_i exp(r_i x)`` on ``x >= 0``.  Every quantity above is
    then a finite sum of exponential convolutions (see :mod:`.expconv`).  For
    Brownian motion the roots are the usual ``theta_1, theta_2`` and
    ``c = (kappa, -kappa)``.
``INVERSION``
    ``W`` and friends by numerical inversion of their Laplace transforms;
    ``W_b``, ``Z_b`` by adaptive quadrature of the defining convolution.  Slow,
    used to cross-check the closed forms.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from .brownian import brownian_roots
from .errors import BackendUnavailable, InvalidParameter, QuadratureFailure
from .expconv import expconv
from .inversion import invert
from .models import DrainedProcess, ModelKind, phi_root

__all__ = ["Backend", "ScaleKit", "ExpScale", "InvertedScale", "KernelSums"]

QUAD_EPSABS = 1e-10


class Backend(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    INVERSION = "inversion"


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return float(arr) if scalar else arr


class ExpScale:
    """Exponential-sum representation of W^(q) for one process and rate."""

    def __init__(self, process: DrainedProcess, q: float):
        if q < 0:
            raise InvalidParameter("rate must be >= 0")
        self.process = process
        self.q = float(q)
        self.phi = phi_root(process, q)
        self.roots, self.coeffs = self._partial_fractions()

    def _partial_fractions(self):
        p, q = self.process, self.q
        m = p.model
        if m.kind is ModelKind.BROWNIAN and m.sigma > 0:
            r = brownian_roots(p.drift, m.sigma, q)
            return np.array([r.theta_plus, r.theta_minus]), np.array([r.kappa, -r.kappa])
        if not p.has_jumps:
            if p.drift <= 0:
                raise InvalidParameter("pure-drift process needs positive drift")
            return np.array([q / p.drift]), np.array([1.0 / p.drift])
        num, den = p.rational_form(q)
        roots = np.roots(num)
        if np.max(np.abs(roots.imag)) > 1e-9 * max(1.0, np.max(np.abs(roots))):
            raise BackendUnavailable("exponent has complex roots; closed form not implemented")
        roots = np.sort(roots.real)[::-1]
        dnum = np.polyder(num)
        for k in range(len(roots)):
            r = roots[k]
            for _ in range(3):
                d = np.polyval(dnum, r)
                if d == 0:
                    break
                r = r - np.polyval(num, r) / d
            roots[k] = r
        # the largest root is Phi(q); take the bracketed Newton value
        roots[0] = self.phi
        if len(roots) > 1 and np.min(np.abs(np.diff(roots))) < 1e-10 * max(1.0, abs(roots[0])):
            raise BackendUnavailable("repeated roots in the exponent; closed form not implemented")
        coeffs = np.polyval(den, roots) / np.polyval(dnum, roots)
        return roots, coeffs

    # each term: coefficient * expconv((r_i, *extra), x)
    def _sum(self, x, extra=(), prefactor=None):
        x, scalar = _as_array(x)
        out = np.zeros(x.shape)
        pre = self.coeffs if prefactor is None else self.coeffs * prefactor
        for c, r in zip(pre, self.roots):
            out = out + c * expconv((r, *extra), x)
        return out, scalar

    def w(self, x):
        out, scalar = self._sum(x)
        return _ret(np.where(np.asarray(x) >= 0, out, 0.0), scalar)

    def wbar(self, x):
        return _ret(*self._sum(x, (0.0,)))

    def wbarbar(self, x):
        return _ret(*self._sum(x, (0.0, 0.0)))

    def z(self, x):
        out, scalar = self._sum(x, (0.0,))
        return _ret(1.0 + self.q * out, scalar)

    def zbar(self, x):
        xs, scalar = _as_array(x)
        out, _ = self._sum(xs, (0.0, 0.0))
        return _ret(xs + self.q * out, scalar)

    def _theta_sum(self, xs, theta: float, weights):
        # for theta above every root the e^{theta x} parts cancel exactly:
        # sum_i c_i / (r_i - theta) = 1 / (q - psi(theta))
        gap = self.q - float(self.process.psi(theta))
        pre = gap * self.coeffs * weights / (self.roots - theta)
        return np.exp(np.multiply.outer(xs, self.roots)) @ pre

    def _theta_stable(self, xs, theta: float) -> bool:
        # direct form loses about e^{(theta - Phi) x} digits
        return theta > self.phi and (theta - self.phi) * float(np.max(xs, initial=0.0)) > 1.0

    def z_theta(self, x, theta: float):
        xs, scalar = _as_array(x)
        if self._theta_stable(xs, theta) and np.all(xs >= 0):
            return _ret(self._theta_sum(xs, theta, 1.0), scalar)
        gap = self.q - float(self.process.psi(theta))
        out, _ = self._sum(xs, (theta,))
        return _ret(np.exp(theta * xs) + gap * out, scalar)

    def z_theta_prime(self, x, theta: float):
        xs, scalar = _as_array(x)
        if self._theta_stable(xs, theta) and np.all(xs >= 0):
            return _ret(self._theta_sum(xs, theta, self.roots), scalar)
        gap = self.q - float(self.process.psi(theta))
        val = theta * np.asarray(self.z_theta(xs, theta)) + gap * np.asarray(self.w(xs))
        return _ret(val, scalar)


class InvertedScale:
    """Same surface as :class:`ExpScale`, by numerical Laplace inversion."""

    def __init__(self, process: DrainedProcess, q: float, nodes: int = 64):
        if q < 0:
            raise InvalidParameter("rate must be >= 0")
        self.process = process
        self.q = float(q)
        self.phi = phi_root(process, q)
        self.nodes = nodes

    def _F(self, s):
        return 1 / (self.process.psi(s) - self.q)

    def _invert(self, transform, x, shift):
        return invert(transform, x, shift=shift, M=self.nodes)

    def _map(self, x, fn, neg):
        xs, scalar = _as_array(x)
        flat = [neg(v) if v <= 0 else fn(v) for v in np.atleast_1d(xs).ravel()]
        out = np.array(flat).reshape(np.atleast_1d(xs).shape)
        return float(out[0]) if scalar else out

    def w_at_zero(self) -> float:
        return 0.0 if self.process.model.sigma > 0 else 1.0 / self.process.drift

    def w(self, x):
        c = self.phi + 1.0
        return self._map(
            x,
            lambda v: self._invert(self._F, v, c),
            lambda v: self.w_at_zero() if v == 0 else 0.0,
        )

    def wbar(self, x):
        c = self.phi + 1.0
        return self._map(x, lambda v: self._invert(lambda s: self._F(s) / s, v, c), lambda v: 0.0)

    def wbarbar(self, x):
        c = self.phi + 1.0
        return self._map(
            x, lambda v: self._invert(lambda s: self._F(s) / (s * s), v, c), lambda v: 0.0
        )

    def z(self, x):
        c = self.phi + 1.0
        q = self.q
        return self._map(
            x, lambda v: self._invert(lambda s: (1 + q * self._F(s)) / s, v, c), lambda v: 1.0
        )

    def zbar(self, x):
        c = self.phi + 1.0
        q = self.q
        return self._map(
            x, lambda v: self._invert(lambda s: (1 + q * self._F(s)) / (s * s), v, c), lambda v: v
        )

    def z_theta(self, x, theta: float):
        c = max(self.phi, theta) + 1.0
        gap = self.q - float(self.process.psi(theta))
        return self._map(
            x,
            lambda v: self._invert(lambda s: (1 + gap * self._F(s)) / (s - theta), v, c),
            lambda v: math.exp(theta * v),
        )

    def z_theta_prime(self, x, theta: float):
        xs, scalar = _as_array(x)
        gap = self.q - float(self.process.psi(theta))
        val = theta * np.asarray(self.z_theta(xs, theta)) + gap * np.asarray(self.w(xs))
        return _ret(val, scalar)


class ScaleKit:
    """Scale-function toolbox for one drained process, discount rate and observation rate."""

    def __init__(
        self,
        process: DrainedProcess,
        delta: float,
        gamma: float,
        backend: Backend | str = Backend.CLOSED_FORM,
    ):
        if not delta >= 0:
            raise InvalidParameter("delta must be >= 0")
        if not gamma >= 0:
            raise InvalidParameter("gamma must be >= 0")
        self.process = process
        self.delta = float(delta)
        self.gamma = float(gamma)
        self.backend = Backend(backend)
        self._scales: dict[float, ExpScale | InvertedScale] = {}
        # eager root cache for the two rates every formula touches
        self.scale(self.delta)
        self.scale(self.delta + self.gamma)

    def __repr__(self):
        return (
            f"ScaleKit(drift={self.process.drift:g}, delta={self.delta:g}, "
            f"gamma={self.gamma:g}, backend={self.backend.value})"
        )

    def scale(self, rate: float):
        rate = float(rate)
        s = self._scales.get(rate)
        if s is None:
            cls = ExpScale if self.backend is Backend.CLOSED_FORM else InvertedScale
            s = cls(self.process, rate)
            self._scales[rate] = s
        return s

    @property
    def shifted_rate(self) -> float:
        return self.delta + self.gamma

    @cached_property
    def phi_shifted(self) -> float:
        """Phi(delta + gamma) of this kit's process."""
        return self.scale(self.shifted_rate).phi

    @cached_property
    def phi_delta(self) -> float:
        return self.scale(self.delta).phi

    def psi(self, theta):
        return self.process.psi(theta)

    # single-rate functions
    def w(self, rate, x):
        return self.scale(rate).w(x)

    def z(self, rate, x):
        return self.scale(rate).z(x)

    def wbar(self, rate, x):
        return self.scale(rate).wbar(x)

    def wbarbar(self, rate, x):
        return self.scale(rate).wbarbar(x)

    def zbar(self, rate, x):
        return self.scale(rate).zbar(x)

    def z_theta(self, rate, x, theta):
        if theta < 0:
            raise InvalidParameter("theta must be >= 0")
        return self.scale(rate).z_theta(x, theta)

    def z_theta_prime(self, rate, x, theta):
        if theta < 0:
            raise InvalidParameter("theta must be >= 0")
        return self.scale(rate).z_theta_prime(x, theta)

    # M-operator and kernels
    def m_apply(self, b: float, f: Callable[[float], float], x: float) -> float:
        """``M_b f(x)`` by adaptive Gauss-Kronrod quadrature of the convolution."""
        if not b > 0:
            raise InvalidParameter("b must be > 0")
        x = float(x)
        head = float(f(x + b))
        if x <= 0:
            return head
        wq = self.scale(self.shifted_rate)
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(
                    lambda y: float(wq.w(x - y)) * float(f(y + b)),
                    0.0,
                    x,
                    epsabs=QUAD_EPSABS,
                    epsrel=1e-12,
                    limit=200,
                )
            except integrate.IntegrationWarning as exc:
                raise QuadratureFailure(f"M-operator quadrature failed at x={x:g}: {exc}") from exc
        return head + self.gamma * val

    def _conv_terms(self, a: float, x, extra):
        """sum_j sum_i d_j c_i e^{r_i a} expconv((s_j, r_i, *extra), x)."""
        lo, hi = self.scale(self.delta), self.scale(self.shifted_rate)
        xs, scalar = _as_array(x)
        out = np.zeros(xs.shape)
        for d, s in zip(hi.coeffs, hi.roots):
            for c, r in zip(lo.coeffs, lo.roots):
                out = out + d * c * math.exp(r * a) * expconv((s, r, *extra), xs)
        return out

    def _closed(self) -> bool:
        return self.backend is Backend.CLOSED_FORM

    def _vector(self, fn, x):
        xs, scalar = _as_array(x)
        out = np.array([fn(float(v)) for v in np.atleast_1d(xs).ravel()]).reshape(
            np.atleast_1d(xs).shape
        )
        return float(out[0]) if scalar else out

    def w_b(self, b: float, x):
        if not b > 0:
            raise InvalidParameter("b must be > 0")
        lo = self.scale(self.delta)
        if not self._closed():
            return self._vector(lambda v: self.m_apply(b, lo.w, v), x)
        xs, scalar = _as_array(x)
        val = np.asarray(lo.w(xs + b)) + self.gamma * self._conv_terms(b, xs, ())
        return _ret(val, scalar)

    def z_b(self, b: float, x):
        if not b > 0:
            raise InvalidParameter("b must be > 0")
        lo = self.scale(self.delta)
        if not self._closed():
            return self._vector(lambda v: self.m_apply(b, lo.z, v), x)
        xs, scalar = _as_array(x)
        val = (
            np.asarray(lo.z(xs + b))
            + self.gamma * float(lo.z(b)) * np.asarray(self.wbar(self.shifted_rate, xs))
            + self.gamma * self.delta * self._conv_terms(b, xs, (0.0,))
        )
        return _ret(val, scalar)

    def kernel_sums(self, a: float) -> "KernelSums":
        """Closed-form kernels at barrier ``a`` as short exponential sums in ``x >= 0``.

        With ``psi(r) = delta`` for every ``r`` in the low-rate partial
        fractions, ``gamma sum_s d_s / (s - r) = 1`` and the ``e^{r x}`` terms of
        ``M_a`` cancel exactly.  What is left only involves the roots ``s`` of
        ``psi = delta + gamma``, a constant and (for ``Wbarbar``) a linear term.
        """
        if not a > 0:
            raise InvalidParameter("kernel barrier must be > 0")
        if not self._closed():
            raise BackendUnavailable("exponential sums need the closed-form backend")
        lo, hi = self.scale(self.delta), self.scale(self.shifted_rate)
        g, d = self.gamma, self.delta
        r, c = lo.roots, lo.coeffs
        s, ds = hi.roots, hi.coeffs
        era = np.exp(r * a)
        wa = float(lo.w(a))
        za = float(lo.z(a))
        inv = 1.0 / (s[:, None] - r[None, :])
        # Z^(delta) = c0 + sum_r beta_r e^{r y}; sum_r c_r / r = 1 / delta kills c0
        if d > 0:
            c0, beta = 0.0, d * c / r
        else:
            c0, beta = 1.0, np.zeros_like(c)
        i_exp = g * ds * (inv @ (c * era)) / wa - g * ds / s
        j_exp = g * ds * ((c0 - za) / s + inv @ (beta * era))
        sd = float(np.sum(ds / s))
        return KernelSums(
            roots=s,
            i_exp=i_exp,
            i0=float(g * sd),
            j_exp=j_exp,
            j0=float(c0 - (c0 - za) * g * sd),
            w_exp=ds / s**2,
            w0=-float(np.sum(ds / s**2)),
            w1=-sd,
        )

    def i_kernel(self, a: float, x):
        """``I_a(x) = W_a(x) / W^(delta)(a) - gamma Wbar^(delta+gamma)(x)``."""
        if not a > 0:
            raise InvalidParameter("kernel barrier must be > 0")
        lo = self.scale(self.delta)
        wa = float(lo.w(a))
        xs, scalar = _as_array(x)
        if self._closed():
            k = self.kernel_sums(a)
            val = np.where(xs >= 0, k.i(np.maximum(xs, 0.0)), np.asarray(lo.w(xs + a)) / wa)
            return _ret(val, scalar)
        val = np.asarray(self.w_b(a, xs)) / wa - self.gamma * np.asarray(
            self.wbar(self.shifted_rate, xs)
        )
        return _ret(val, scalar)

    def j_kernel(self, a: float, x):
        """``J_a(x) = Z_a(x) - gamma Z^(delta)(a) Wbar^(delta+gamma)(x)``."""
        if not a > 0:
            raise InvalidParameter("kernel barrier must be > 0")
        lo = self.scale(self.delta)
        xs, scalar = _as_array(x)
        if self._closed():
            k = self.kernel_sums(a)
            val = np.where(xs >= 0, k.j(np.maximum(xs, 0.0)), np.asarray(lo.z(xs + a)))
            return _ret(val, scalar)
        val = np.asarray(self.z_b(a, xs)) - self.gamma * float(lo.z(a)) * np.asarray(
            self.wbar(self.shifted_rate, xs)
        )
        return _ret(val, scalar)


@dataclass(frozen=True)
class KernelSums:
    """``I_a``, ``J_a`` and ``Wbarbar^(delta+gamma)`` on ``x >= 0``.

    ``F(x) = poly(x) + sum_k F_exp[k] e^{roots[k] x}`` with ``roots[0]`` the
    unique positive root ``Phi(delta + gamma)``.  ``shift`` evaluates
    ``F(x) e^{-shift}`` without forming the large exponentials.
    """

    roots: np.ndarray
    i_exp: np.ndarray
    i0: float
    j_exp: np.ndarray
    j0: float
    w_exp: np.ndarray
    w0: float
    w1: float

    def _eval(self, coef, poly, x, shift):
        x = np.asarray(x, dtype=float)
        e = np.exp(np.multiply.outer(x, self.roots) - np.asarray(shift)[..., None])
        return e @ coef + poly * np.exp(-np.asarray(shift))

    def i(self, x, shift=0.0):
        return self._eval(self.i_exp, self.i0, x, shift)

    def j(self, x, shift=0.0):
        return self._eval(self.j_exp, self.j0, x, shift)

    def wbb(self, x, shift=0.0):
        return self._eval(self.w_exp, self.w0 + self.w1 * np.asarray(x, dtype=float), x, shift)

"""Laplace transform of the ruin time, E[exp(-delta tau); tau < inf].

Same three-region split as the dividend value.  Ruin only happens through
zero, so in the middle region the transform is built from the kernels of the
periodically-reflected process on [a, b) and the upper constant L(b); the lower
region then uses the two-sided exit identities of the plain process below a.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameter, InvalidStrategy, NumericalError
from .models import LevyModel
from .scale import Backend
from .valuation import (
    Region,
    Strategy,
    _cancel_top,
    _decaying,
    _kit,
    kits,
    middle_pieces,
    upper_kernel_combo,
    z_minus_w,
)

__all__ = ["RuinTransform", "laplace_ruin", "laplace_ruin_ratchet_only"]

# rounding slack tolerated at the ends of [0, 1]
_SLACK = 1e-10


@dataclass(frozen=True)
class RuinTransform:
    value: float
    region: Region


def _unit(v: float) -> float:
    if -_SLACK <= v < 0.0:
        return 0.0
    if 1.0 < v <= 1.0 + _SLACK:
        return 1.0
    if not 0.0 <= v <= 1.0:
        raise NumericalError(f"ruin transform {v!r} outside [0, 1]")
    return v


def _upper(kt, s: Strategy, y: float) -> float:
    K, _, k = upper_kernel_combo(kt, s)
    x = y - s.a
    if k is None:
        return float(kt.j_kernel(s.a, x)) - float(kt.i_kernel(s.a, x)) * K
    coef = _cancel_top(k.j_exp - K * k.i_exp, k.j_exp[0], K * k.i_exp[0], "upper ruin transform")
    return k.j0 - K * k.i0 + float(coef @ _decaying(k.roots, x))


def _middle(kb, s: Strategy, y: float, l_b: float) -> float:
    h, dj, _ = middle_pieces(kb, s, y)
    return dj + h * l_b


def laplace_ruin(model: LevyModel, s: Strategy, delta: float, y: float, backend=Backend.CLOSED_FORM) -> RuinTransform:
    if not delta >= 0:
        raise InvalidParameter("ruin transform requires delta >= 0")
    if not y >= 0:
        raise InvalidParameter("initial surplus must satisfy y >= 0")
    if not s.a > 0:
        raise InvalidStrategy("ruin transform requires a > 0")
    s.bind(model)
    kb, kt = kits(model, s, delta, backend)
    region = s.region(y)
    if region is Region.UPPER:
        return RuinTransform(_unit(_upper(kt, s, y)), region)
    l_b = _upper(kt, s, s.b)
    if region is Region.MIDDLE:
        return RuinTransform(_unit(_middle(kb, s, y, l_b)), region)
    d = delta
    l_a = _middle(kb, s, s.a, l_b)
    hit = float(kb.w(d, y)) / float(kb.w(d, s.a))
    v = float(kb.z(d, y)) - float(kb.z(d, s.a)) * hit + hit * l_a
    return RuinTransform(_unit(v), region)


def laplace_ruin_ratchet_only(
    model: LevyModel, b: float, c1: float, c2: float, delta: float, y: float, backend=Backend.CLOSED_FORM
) -> float:
    """Ruin transform for the single-rise ratcheting strategy without periodic payments."""
    if not (b > 0 and c2 > 0 and c1 >= 0 and delta >= 0 and y >= 0):
        raise InvalidParameter("ratchet-only transform needs b > 0, c2 > 0, c1 >= 0, delta >= 0, y >= 0")
    model.drained(c1 + c2).check_positive_drift()
    backend = Backend(backend)
    kb = _kit(model, c1, delta, 0.0, backend)
    kt = _kit(model, c1 + c2, delta, 0.0, backend)
    d = delta
    # delta / Phi(delta) tends to the mean drift as delta -> 0
    ratio = kt.process.mean_drift if d == 0 else d / kt.phi_delta

    def upper(v):
        return z_minus_w(kt, ratio, v)

    if y >= b:
        return _unit(upper(y))
    hit = float(kb.w(d, y)) / float(kb.w(d, b))
    return _unit(float(kb.z(d, y)) - float(kb.z(d, b)) * hit + hit * upper(b))

"""Expected NPV of dividends under the mixed ratcheting-periodic strategy.

The controlled surplus pays dividends continuously at rate ``c1`` until it
first exceeds ``b``, then at ``c1 + c2`` forever; in addition, at the epochs of
an independent Poisson(``gamma``) clock any surplus above ``a`` is paid out as
a lump.  The value splits by initial surplus ``y``:

* ``y >= b`` (upper): the ratchet is on from the start and the surplus is the
  periodically-reflected ``X~ = Y - (c1 + c2) t``; kernels are taken on ``X~``.
* ``a <= y < b`` (middle): periodically-reflected ``X = Y - c1 t`` until it
  first exceeds ``b``, after which the upper value at ``b`` takes over.
* ``0 <= y < a`` (lower): plain ``X`` until it reaches ``a``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameter, InvalidRegion, InvalidStrategy, NumericalError
from .models import LevyModel
from .scale import Backend, ScaleKit

__all__ = [
    "Strategy",
    "Region",
    "ValuationResult",
    "kits",
    "value",
    "value_upper",
    "value_middle",
    "value_lower",
    "value_periodic_only",
    "value_ratchet_only",
]


class Region(str, enum.Enum):
    LOWER = "Lower"
    MIDDLE = "Middle"
    UPPER = "Upper"


@dataclass(frozen=True)
class Strategy:
    """Barriers ``a <= b``, ratchet rates ``c1 -> c1 + c2`` and decision intensity ``gamma``."""

    a: float
    b: float
    c1: float
    c2: float
    gamma: float

    def __post_init__(self):
        for name in ("a", "b", "c1", "c2", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidStrategy(f"{name} must be finite")
        if not self.a >= 0:
            raise InvalidStrategy("periodic barrier must satisfy a >= 0")
        if not self.b >= self.a:
            raise InvalidStrategy("barriers must satisfy b >= a")
        if not self.c1 >= 0:
            raise InvalidStrategy("initial rate must satisfy c1 >= 0")
        if not self.c2 > 0:
            raise InvalidStrategy("ratchet increment must satisfy c2 > 0")
        if not self.gamma > 0:
            raise InvalidStrategy("decision intensity must satisfy gamma > 0")

    def bind(self, model: LevyModel) -> None:
        """Check that both drained processes keep a positive drift."""
        model.drained(self.c1 + self.c2).check_positive_drift()

    def region(self, y: float) -> Region:
        if y < self.a:
            return Region.LOWER
        if y < self.b:
            return Region.MIDDLE
        return Region.UPPER


@dataclass(frozen=True)
class ValuationResult:
    value: float
    region: Region
    ratchet_part: float
    periodic_part: float
    continuation: float
    kernels: tuple[str, ...] = ()


@lru_cache(maxsize=512)
def _kit(model: LevyModel, drain: float, delta: float, gamma: float, backend: Backend) -> ScaleKit:
    return ScaleKit(model.drained(drain), delta, gamma, backend)


def kits(model: LevyModel, s: Strategy, delta: float, backend=Backend.CLOSED_FORM):
    """``(kit on X, kit on X~)`` for the strategy's two dividend rates."""
    backend = Backend(backend)
    return (
        _kit(model, s.c1, delta, s.gamma, backend),
        _kit(model, s.c1 + s.c2, delta, s.gamma, backend),
    )


def _check(model: LevyModel, s: Strategy, delta: float, y: float) -> None:
    if not delta > 0:
        raise InvalidParameter("valuation requires delta > 0")
    if not y >= 0:
        raise InvalidParameter("initial surplus must satisfy y >= 0")
    if not s.a > 0:
        raise InvalidStrategy("valuation requires a > 0")
    s.bind(model)


def periodic_constants(kit: ScaleKit, a: float) -> tuple[float, float, float, float]:
    """``(W(a), Phi(delta+gamma), Z(a, Phi), Z'(a, Phi))`` on the kit's process."""
    d = kit.delta
    ph = kit.phi_shifted
    return (
        float(kit.w(d, a)),
        ph,
        float(kit.z_theta(d, a, ph)),
        float(kit.z_theta_prime(d, a, ph)),
    )


# The top-root coefficient of a bounded combination cancels exactly; the
# computed one must be rounding noise relative to its two halves.
_CANCEL_TOL = 1e-8


def _cancel_top(coef: np.ndarray, left: float, right: float, what: str, ref: float = 1.0) -> np.ndarray:
    scale = max(abs(left), abs(right), abs(ref))
    if abs(coef[0]) > _CANCEL_TOL * scale:
        raise NumericalError(f"{what}: growing term does not cancel ({coef[0]:.3g} vs {scale:.3g})")
    out = coef.copy()
    out[0] = 0.0
    return out


def upper_kernel_combo(kt: ScaleKit, s: Strategy):
    """``(K, kappa, sums)`` for the upper formulas: ``K = delta W(a) Z(a,Phi)/Z'(a,Phi)``,
    ``kappa = W(a) / (Phi Z'(a,Phi))`` and the kernel sums (None off the closed form)."""
    wa, ph, zp, zpp = periodic_constants(kt, s.a)
    sums = kt.kernel_sums(s.a) if kt.backend is Backend.CLOSED_FORM else None
    return kt.delta * wa * zp / zpp, wa / (ph * zpp), sums


def _upper_parts(kt: ScaleKit, s: Strategy, y: float) -> tuple[float, float]:
    d, g, a = kt.delta, s.gamma, s.a
    x = y - a
    c = s.c1 + s.c2
    K, kappa, k = upper_kernel_combo(kt, s)
    if k is None:
        I = float(kt.i_kernel(a, x))
        J = float(kt.j_kernel(a, x))
        ratchet = c / d * (1.0 - J + I * K)
        periodic = g * (I * kappa - float(kt.wbarbar(d + g, x)))
        return ratchet, periodic
    r_exp = _cancel_top(K * k.i_exp - k.j_exp, K * k.i_exp[0], k.j_exp[0], "upper dividend value")
    ratchet = c / d * (1.0 - k.j0 + K * k.i0 + float(r_exp @ _decaying(k.roots, x)))
    return ratchet, _periodic_upper(k, kappa, g, x)


def _decaying(roots: np.ndarray, x: float) -> np.ndarray:
    # slot 0 (the positive root) is zeroed and may overflow, so skip it
    e = np.zeros_like(roots)
    e[1:] = np.exp(roots[1:] * x)
    return e


def _periodic_upper(k, kappa: float, g: float, x: float) -> float:
    """``gamma (kappa I_a(x) - Wbarbar^(delta+gamma)(x))`` from the kernel sums."""
    p_exp = _cancel_top(kappa * k.i_exp - k.w_exp, kappa * k.i_exp[0], k.w_exp[0], "periodic value")
    return g * (kappa * k.i0 - k.w0 - k.w1 * x + float(p_exp @ _decaying(k.roots, x)))


def _det(k, f_exp, f_poly, x: float, xb: float) -> float:
    """``(F(x) I(xb) - F(xb) I(x)) e^{-Phi xb}`` with the diagonal products cancelled exactly."""
    s = k.roots
    top = s[0] * xb
    px, pb = f_poly(x), f_poly(xb)
    ex = np.exp(s * x - top)
    eb = np.exp(s * xb - top)
    total = (px - pb) * k.i0 * math.exp(-top)
    total += px * float(k.i_exp @ eb) - pb * float(k.i_exp @ ex)
    total += k.i0 * float(f_exp @ (ex - eb))
    # cross terms s != t: f_s i_t (e^{s x + t xb} - e^{s xb + t x})
    n = s.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j:
                total += f_exp[i] * k.i_exp[j] * (
                    math.exp(s[i] * x + s[j] * xb - top) - math.exp(s[i] * xb + s[j] * x - top)
                )
    return total


def middle_pieces(kb: ScaleKit, s: Strategy, y: float) -> tuple[float, float, float]:
    """``(h, D_J, D_W)`` on ``[a, b]``: ``h = I(x)/I(xb)``, ``D_F = F(x) - F(xb) h``."""
    d, g, a = kb.delta, s.gamma, s.a
    x, xb = y - a, s.b - a
    if kb.backend is not Backend.CLOSED_FORM:
        I, Ib = float(kb.i_kernel(a, x)), float(kb.i_kernel(a, xb))
        J, Jb = float(kb.j_kernel(a, x)), float(kb.j_kernel(a, xb))
        W, Wb = float(kb.wbarbar(d + g, x)), float(kb.wbarbar(d + g, xb))
        h = I / Ib
        return h, J - Jb * h, W - Wb * h
    k = kb.kernel_sums(a)
    top = k.roots[0] * xb
    ib = float(k.i(xb, top))
    h = float(k.i(x, top)) / ib
    dj = _det(k, k.j_exp, lambda v: k.j0, x, xb) / ib
    dw = _det(k, k.w_exp, lambda v: k.w0 + k.w1 * v, x, xb) / ib
    return float(h), float(dj), float(dw)


def _middle_parts(kb: ScaleKit, s: Strategy, y: float, v_upper_b: float):
    h, dj, dw = middle_pieces(kb, s, y)
    ratchet = s.c1 / kb.delta * (1.0 - h - dj)
    periodic = -s.gamma * dw
    return ratchet, periodic, h * v_upper_b


def value_upper(model: LevyModel, s: Strategy, delta: float, y: float, backend=Backend.CLOSED_FORM):
    _check(model, s, delta, y)
    if y < s.b:
        raise InvalidRegion(f"upper formula needs y >= b, got y={y:g} < b={s.b:g}")
    _, kt = kits(model, s, delta, backend)
    r, p = _upper_parts(kt, s, y)
    return ValuationResult(r + p, Region.UPPER, r, p, 0.0, ("ratcheted",))


def _v_upper_at_b(kt, s):
    return sum(_upper_parts(kt, s, s.b))


def value_middle(model: LevyModel, s: Strategy, delta: float, y: float, backend=Backend.CLOSED_FORM):
    _check(model, s, delta, y)
    if not s.a <= y < s.b:
        raise InvalidRegion(f"middle formula needs a <= y < b, got y={y:g}")
    kb, kt = kits(model, s, delta, backend)
    r, p, c = _middle_parts(kb, s, y, _v_upper_at_b(kt, s))
    return ValuationResult(r + p + c, Region.MIDDLE, r, p, c, ("base", "ratcheted"))


def middle_at_a(model: LevyModel, s: Strategy, delta: float, backend=Backend.CLOSED_FORM) -> float:
    """Middle-region value at ``y = a``; also defined when ``a == b`` (then it equals the upper value at ``b``)."""
    kb, kt = kits(model, s, delta, backend)
    return sum(_middle_parts(kb, s, s.a, _v_upper_at_b(kt, s)))


def value_lower(model: LevyModel, s: Strategy, delta: float, y: float, backend=Backend.CLOSED_FORM):
    _check(model, s, delta, y)
    if not y < s.a:
        raise InvalidRegion(f"lower formula needs 0 <= y < a, got y={y:g}")
    kb, _ = kits(model, s, delta, backend)
    d = delta
    hit = float(kb.w(d, y)) / float(kb.w(d, s.a))
    r = s.c1 / d * (1.0 - float(kb.z(d, y)) + (float(kb.z(d, s.a)) - 1.0) * hit)
    c = hit * middle_at_a(model, s, delta, backend)
    return ValuationResult(r + c, Region.LOWER, r, 0.0, c, ("base", "ratcheted"))


def value(model: LevyModel, s: Strategy, delta: float, y: float, backend=Backend.CLOSED_FORM):
    _check(model, s, delta, y)
    region = s.region(y)
    if region is Region.UPPER:
        return value_upper(model, s, delta, y, backend)
    if region is Region.MIDDLE:
        return value_middle(model, s, delta, y, backend)
    return value_lower(model, s, delta, y, backend)


def value_periodic_only(
    model: LevyModel, a: float, gamma: float, delta: float, y: float, backend=Backend.CLOSED_FORM
) -> float:
    """Value of the pure periodic barrier strategy at level ``a`` (no continuous dividends).

    Kernels are on the undrained process, so Phi(delta + gamma) is that of ``Y``.
    """
    if not (a > 0 and gamma > 0 and delta > 0 and y >= 0):
        raise InvalidParameter("periodic-only value needs a > 0, gamma > 0, delta > 0, y >= 0")
    model.drained(0.0).check_positive_drift()
    kit = _kit(model, 0.0, delta, gamma, Backend(backend))
    wa, ph, _, zpp = periodic_constants(kit, a)
    kappa = wa / (ph * zpp)
    x = y - a
    if x >= 0 and kit.backend is Backend.CLOSED_FORM:
        return _periodic_upper(kit.kernel_sums(a), kappa, gamma, x)
    return gamma * (float(kit.i_kernel(a, x)) * kappa - float(kit.wbarbar(delta + gamma, x)))


def z_minus_w(kit: ScaleKit, ratio: float, x: float) -> float:
    """``Z^(delta)(x) - ratio W^(delta)(x)`` for ``ratio = delta / Phi(delta)``.

    The ``e^{Phi x}`` parts cancel exactly for that ratio, so on the closed
    form they are dropped instead of subtracted.
    """
    d = kit.delta
    sc = kit.scale(d)
    if kit.backend is not Backend.CLOSED_FORM:
        return float(sc.z(x)) - ratio * float(sc.w(x))
    r, c = sc.roots, sc.coeffs
    if d > 0:
        c0, beta = 0.0, d * c / r
    else:
        c0, beta = 1.0, np.zeros_like(c)
    coef = beta - ratio * c
    if r[0] > 0:
        coef = _cancel_top(coef, beta[0], ratio * c[0], "ratchet-only formula")
        return c0 + float(coef @ _decaying(r, x))
    return c0 + float(coef @ np.exp(r * x))


def value_ratchet_only(
    model: LevyModel, b: float, c1: float, c2: float, delta: float, y: float, backend=Backend.CLOSED_FORM
) -> float:
    """Single-rise ratcheting strategy without periodic payments."""
    if not (b > 0 and c2 > 0 and c1 >= 0 and delta > 0 and y >= 0):
        raise InvalidParameter("ratchet-only value needs b > 0, c2 > 0, c1 >= 0, delta > 0, y >= 0")
    model.drained(c1 + c2).check_positive_drift()
    backend = Backend(backend)
    kb = _kit(model, c1, delta, 0.0, backend)
    kt = _kit(model, c1 + c2, delta, 0.0, backend)
    d = delta
    ratio = d / kt.phi_delta

    def upper(v):
        return (c1 + c2) / d * (1.0 - z_minus_w(kt, ratio, v))

    if y >= b:
        return upper(y)
    hit = float(kb.w(d, y)) / float(kb.w(d, b))
    return upper(b) * hit + c1 / d * (1.0 - float(kb.z(d, y)) + (float(kb.z(d, b)) - 1.0) * hit)

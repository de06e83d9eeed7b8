"""Spectrally negative Lévy surplus models and their Laplace exponents.

Two backends are shipped:

* ``BROWNIAN``: ``Y(t) = y + mu t + sigma B(t)``
* ``COMPOUND_POISSON_EXP``: Brownian part plus downward jumps arriving at rate
  ``lam`` with Exp(``eta``) sizes.

A :class:`DrainedProcess` is ``Y`` minus a constant dividend drain, i.e. the
processes ``X = Y - c1 t`` and ``X~ = Y - (c1 + c2) t`` used by the valuation
formulas.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NoRoot

__all__ = [
    "ModelKind",
    "LevyModel",
    "DrainedProcess",
    "laplace_exponent",
    "phi_root",
]

ROOT_RTOL = 1e-12


class ModelKind(str, enum.Enum):
    BROWNIAN = "brownian"
    COMPOUND_POISSON_EXP = "compound_poisson_exp"


@dataclass(frozen=True)
class LevyModel:
    kind: ModelKind
    mu: float
    sigma: float = 0.0
    lam: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not math.isfinite(self.mu):
            raise InvalidParameter("mu must be finite")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidParameter("sigma must satisfy sigma >= 0")
        if self.kind is ModelKind.BROWNIAN:
            if self.lam != 0:
                raise InvalidParameter("lam must be 0 for the Brownian model")
        else:
            if not self.lam >= 0:
                raise InvalidParameter("lam must satisfy lam >= 0")
            if not self.eta > 0:
                raise InvalidParameter("eta must satisfy eta > 0")

    @classmethod
    def brownian(cls, mu: float, sigma: float) -> "LevyModel":
        return cls(ModelKind.BROWNIAN, mu, sigma)

    @classmethod
    def compound_poisson_exp(cls, mu: float, sigma: float, lam: float, eta: float) -> "LevyModel":
        return cls(ModelKind.COMPOUND_POISSON_EXP, mu, sigma, lam, eta)

    @property
    def mean_drift(self) -> float:
        """E[Y(1)] - Y(0), i.e. psi'(0+)."""
        if self.kind is ModelKind.BROWNIAN:
            return self.mu
        return self.mu - self.lam / self.eta

    def with_sigma(self, sigma: float) -> "LevyModel":
        return LevyModel(self.kind, self.mu, sigma, self.lam, self.eta)

    def drained(self, drain: float) -> "DrainedProcess":
        return DrainedProcess(self, drain)


@dataclass(frozen=True)
class DrainedProcess:
    """``Y(t) - drain * t``."""

    model: LevyModel
    drain: float = 0.0

    def __post_init__(self):
        if not self.drain >= 0:
            raise InvalidParameter("drain must satisfy drain >= 0")

    @property
    def drift(self) -> float:
        """Linear coefficient of the exponent (the paths' drift net of drain)."""
        return self.model.mu - self.drain

    @property
    def mean_drift(self) -> float:
        return self.model.mean_drift - self.drain

    @property
    def has_jumps(self) -> bool:
        return self.model.kind is ModelKind.COMPOUND_POISSON_EXP and self.model.lam > 0

    @property
    def bounded_variation(self) -> bool:
        return self.model.sigma == 0

    def check_positive_drift(self) -> None:
        if not self.mean_drift > 0:
            raise InvalidParameter(
                f"effective drift psi'(0+) - drain = {self.mean_drift:g} must be > 0"
            )

    def psi(self, theta):
        """Laplace exponent; accepts floats, numpy arrays, complex or mpmath numbers."""
        m = self.model
        val = self.drift * theta + 0.5 * m.sigma ** 2 * theta * theta
        if self.has_jumps:
            val = val + m.lam * (m.eta / (m.eta + theta) - 1)
        return val

    def dpsi(self, theta):
        m = self.model
        val = self.drift + m.sigma ** 2 * theta
        if self.has_jumps:
            val = val - m.lam * m.eta / (m.eta + theta) ** 2
        return val

    def rational_form(self, q: float) -> tuple[np.ndarray, np.ndarray]:
        """Polynomials ``(P, Q)`` (highest power first) with psi(theta) - q = P/Q."""
        m = self.model
        quad = np.array([0.5 * m.sigma ** 2, self.drift, -q])
        if not self.has_jumps:
            return np.trim_zeros(quad, "f"), np.array([1.0])
        den = np.array([1.0, m.eta])
        num = np.polysub(np.polymul(quad, den), np.array([m.lam, 0.0]))
        return np.trim_zeros(num, "f"), den


def laplace_exponent(p: DrainedProcess, theta: float) -> float:
    if theta < 0:
        raise InvalidParameter("theta must satisfy theta >= 0")
    return float(p.psi(theta))


def phi_root(p: DrainedProcess, q: float) -> float:
    """Largest nonnegative root of ``psi_p(theta) = q``.

    Bracketing starts at theta = 1 and doubles until psi exceeds q; convexity
    then makes Newton from the right monotone, with bisection as a safeguard.
    """
    if q < 0:
        raise InvalidParameter("q must satisfy q >= 0")
    m = p.model
    if m.sigma == 0 and not p.has_jumps and p.drift == 0:
        raise NoRoot("degenerate exponent: zero drift, zero sigma and no jumps")
    if p.drift <= 0 and m.sigma == 0:
        # psi is nonincreasing on [0, inf) for a pure-jump process with nonpositive drift
        raise NoRoot("exponent never reaches q: nonpositive drift without a Gaussian part")
    slope0 = p.dpsi(0.0)
    if q == 0 and slope0 >= 0:
        return 0.0

    hi = 1.0
    while p.psi(hi) <= q:
        hi *= 2.0
        if hi > 1e300:
            raise NoRoot(f"no root of psi(theta) = {q:g} below 1e300")
    lo = 0.0
    if q == 0:
        # psi dips below zero before its positive root; find a point where psi < 0
        lo = hi
        while p.psi(lo) >= 0:
            lo *= 0.5
            if lo < 1e-300:
                return 0.0

    theta = hi
    tol = ROOT_RTOL * max(1.0, q)
    for _ in range(200):
        f = p.psi(theta) - q
        if abs(f) <= tol:
            return float(theta)
        if f > 0:
            hi = theta
        else:
            lo = theta
        step = f / p.dpsi(theta)
        cand = theta - step
        if not (lo < cand < hi) or not math.isfinite(cand):
            cand = 0.5 * (lo + hi)
        if cand == theta:
            break
        theta = cand
    if abs(p.psi(theta) - q) <= 10 * tol:
        return float(theta)
    raise NoRoot(f"root iteration for psi(theta) = {q:g} did not converge")

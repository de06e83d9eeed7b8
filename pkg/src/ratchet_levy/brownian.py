"""Explicit formulas for Brownian motion with drift.

For ``X(t) = x + m t + sigma B(t)`` the q-scale function is

    W^(q)(x) = kappa (exp(theta_plus x) - exp(theta_minus x)),
    kappa = ((m^2 + 2 sigma^2 q))^(-1/2),

with ``theta_plus/minus`` the roots of ``sigma^2/2 theta^2 + m theta - q``.
The helpers below give the textbook expressions for Z(a, Phi(q + gamma)),
its x-derivative, and the double integral of W; they serve as an independent
route against the generic exponential-sum engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter

__all__ = ["BrownianRoots", "brownian_roots", "z_at_phi", "z_prime_at_phi", "wbarbar"]


@dataclass(frozen=True)
class BrownianRoots:
    theta_plus: float
    theta_minus: float
    kappa: float

    def w(self, x):
        x = np.asarray(x, dtype=float)
        val = self.kappa * (np.exp(self.theta_plus * x) - np.exp(self.theta_minus * x))
        return np.where(x >= 0, val, 0.0)


def brownian_roots(m: float, sigma: float, q: float) -> BrownianRoots:
    if sigma <= 0:
        raise InvalidParameter("sigma must be > 0 for the two-root representation")
    if q < 0:
        raise InvalidParameter("q must be >= 0")
    s2 = sigma * sigma
    disc = math.sqrt(m * m + 2.0 * s2 * q)
    if m > 0:
        # cancellation-free form of (-m + disc) / sigma^2
        plus = 2.0 * q / (m + disc)
        minus = (-m - disc) / s2
    else:
        plus = (-m + disc) / s2
        minus = -2.0 * q / (disc - m) if disc - m > 0 else 0.0
    return BrownianRoots(plus, minus, 1.0 / disc)


def z_at_phi(m: float, sigma: float, delta: float, gamma: float, a: float) -> float:
    """Z^(delta)(a, Phi(delta + gamma)) = -gamma/(th1 - th3) W^(delta)(a) + exp(th2 a)."""
    r = brownian_roots(m, sigma, delta)
    th3 = brownian_roots(m, sigma, delta + gamma).theta_plus
    return -gamma / (r.theta_plus - th3) * float(r.w(a)) + math.exp(r.theta_minus * a)


def z_prime_at_phi(m: float, sigma: float, delta: float, gamma: float, a: float) -> float:
    """x-derivative of Z^(delta)(x, Phi(delta + gamma)) at x = a.

    Equals gamma th1/(th3 - th1) W^(delta)(a) + th3 exp(th2 a).
    """
    r = brownian_roots(m, sigma, delta)
    th3 = brownian_roots(m, sigma, delta + gamma).theta_plus
    return gamma * r.theta_plus / (th3 - r.theta_plus) * float(r.w(a)) + th3 * math.exp(
        r.theta_minus * a
    )


def wbarbar(m: float, sigma: float, q: float, x: float) -> float:
    """Double running integral of W^(q) for q > 0:

    W^(q)(x)/th_plus^2 + m/q^2 (exp(th_minus x) - 1) - x/q.
    """
    if x <= 0:
        return 0.0
    r = brownian_roots(m, sigma, q)
    return (
        float(r.w(x)) / r.theta_plus ** 2
        + m / q ** 2 * math.expm1(r.theta_minus * x)
        - x / q
    )

"""Compiled single-path simulator.

Each path owns a counter-based uniform stream keyed by (seed, pair index), so
results depend only on the path index and never on scheduling.  Between
events the surplus moves as a Brownian motion with constant drift; ruin at 0
and the ratchet at b are detected with the exact Brownian-bridge crossing
probability, so the step size only matters for the drift change at the ratchet
instant and for dividend accrual inside the ruin step.  Steps shrink near an
active barrier and are never shorter than ``dt``.
"""
import math

import numba as nb
import numpy as np

GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740993.0

# trace event kinds
EV_STEP = 0
EV_DECISION = 1
EV_RATCHET = 2
EV_JUMP = 3
EV_RUIN = 4
EV_CENSOR = 5

# columns of the per-path outcome array
COL_TAU = 0
COL_RUINED = 1
COL_RATCHET = 2
COL_PERIODIC = 3
COL_RUIN_DISC = 4
COL_CENSORED = 5
COL_VIOLATIONS = 6
N_COLS = 7


@nb.njit(inline="always", cache=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(inline="always", cache=True)
def _uniform(key, ctr):
    # in (0, 1): never exactly 0, so logs are finite
    return (np.float64(_mix(key + ctr * GOLD) >> _S11) + 1.0) * _INV53


@nb.njit(cache=True)
def path_key(seed, index):
    return _mix(np.uint64(seed) * GOLD + _mix(np.uint64(index)))


@nb.njit(cache=True)
def _accrual(rate, d, t, h):
    if rate == 0.0:
        return 0.0
    if d == 0.0:
        return rate * h
    return rate * math.exp(-d * t) * (-math.expm1(-d * h)) / d


@nb.njit(cache=True)
def _record(trace, n, t, kind, x0, x1):
    if n < trace.shape[0]:
        trace[n, 0] = t
        trace[n, 1] = kind
        trace[n, 2] = x0
        trace[n, 3] = x1
    return n + 1


@nb.njit(cache=True)
def simulate_one(key, sign, y0, mu, sigma, lam, eta, c1, c2, gamma, delta, a, b,
                 dt, h_max, t_max, out, trace):
    """Simulate one path into ``out`` (length N_COLS); returns trace length."""
    ctr = np.uint64(0)
    ntr = 0
    t = 0.0
    x = y0
    rat = y0 >= b
    div_r = 0.0
    div_p = 0.0
    bad = 0
    for k in range(N_COLS):
        out[k] = 0.0
    if y0 <= 0.0 and (sigma > 0.0 or y0 < 0.0):
        # a diffusive path started at 0 leaves through 0 at once
        out[COL_RUINED] = 1.0
        out[COL_RUIN_DISC] = 1.0
        ntr = _record(trace, ntr, 0.0, EV_RUIN, y0, y0)
        return ntr
    inf = math.inf
    next_dec = inf
    if gamma > 0.0:
        next_dec = -math.log(_uniform(key, ctr)) / gamma
        ctr += _ONE
    next_jump = inf
    if lam > 0.0:
        next_jump = -math.log(_uniform(key, ctr)) / lam
        ctr += _ONE
    s2 = sigma * sigma
    while True:
        rate = c1 + c2 if rat else c1
        drift = mu - rate
        # step length
        if sigma > 0.0:
            dist = x if rat else min(x, b - x)
            h = dist / (4.0 * sigma)
            h = h * h
            if h < dt:
                h = dt
            if h > h_max:
                h = h_max
        else:
            h = h_max
            if not rat and drift > 0.0:
                hb = (b - x) / drift
                if hb < h:
                    h = hb
        is_dec = False
        is_jump = False
        if next_dec - t <= h:
            h = next_dec - t
            is_dec = True
        if next_jump - t <= h:
            h = next_jump - t
            is_jump = True
            is_dec = next_dec == next_jump
        censor = False
        if t_max - t <= h:
            h = t_max - t
            censor = True
            is_dec = False
            is_jump = False
        div_r += _accrual(rate, delta, t, h)
        x0 = x
        if sigma > 0.0:
            u1 = _uniform(key, ctr)
            u2 = _uniform(key, ctr + _ONE)
            ctr += np.uint64(2)
            z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
            x1 = x + drift * h + sign * sigma * math.sqrt(h) * z
        else:
            x1 = x + drift * h
        t += h
        ruined = x1 < 0.0
        if not ruined and sigma > 0.0:
            p = math.exp(-2.0 * x * x1 / (s2 * h))
            u = _uniform(key, ctr)
            ctr += _ONE
            ruined = u < p
        if ruined:
            ntr = _record(trace, ntr, t, EV_RUIN, x0, x1)
            out[COL_TAU] = t
            out[COL_RUINED] = 1.0
            out[COL_RUIN_DISC] = math.exp(-delta * t)
            break
        if not rat:
            if x1 >= b:
                rat = True
            elif sigma > 0.0:
                p = math.exp(-2.0 * (b - x) * (b - x1) / (s2 * h))
                u = _uniform(key, ctr)
                ctr += _ONE
                rat = u < p
            if rat:
                ntr = _record(trace, ntr, t, EV_RATCHET, x0, x1)
        x = x1
        ntr = _record(trace, ntr, t, EV_STEP, x0, x)
        if censor:
            ntr = _record(trace, ntr, t, EV_CENSOR, x, x)
            out[COL_TAU] = t
            out[COL_CENSORED] = 1.0
            break
        if is_jump:
            x0 = x
            x -= -math.log(_uniform(key, ctr)) / eta
            ctr += _ONE
            next_jump = t - math.log(_uniform(key, ctr)) / lam
            ctr += _ONE
            ntr = _record(trace, ntr, t, EV_JUMP, x0, x)
            if x < 0.0:
                ntr = _record(trace, ntr, t, EV_RUIN, x0, x)
                out[COL_TAU] = t
                out[COL_RUINED] = 1.0
                out[COL_RUIN_DISC] = math.exp(-delta * t)
                break
        if is_dec:
            x0 = x
            if x > a:
                div_p += (x - a) * math.exp(-delta * t)
                x = a
            if x0 > a and x > a:
                bad += 1
            ntr = _record(trace, ntr, t, EV_DECISION, x0, x)
            next_dec = t - math.log(_uniform(key, ctr)) / gamma
            ctr += _ONE
        if (c1 + c2 if rat else c1) < rate:
            bad += 1
    out[COL_RATCHET] = div_r
    out[COL_PERIODIC] = div_p
    out[COL_VIOLATIONS] = bad
    return ntr


@nb.njit(nogil=True, cache=True)
def run_chunk(seed, start, count, antithetic, y0, mu, sigma, lam, eta, c1, c2,
              gamma, delta, a, b, dt, h_max, t_max, out):
    trace = np.empty((0, 4))
    for j in range(count):
        i = start + j
        if antithetic:
            key = path_key(seed, i // 2)
            sign = -1.0 if i % 2 == 1 else 1.0
        else:
            key = path_key(seed, i)
            sign = 1.0
        simulate_one(key, sign, y0, mu, sigma, lam, eta, c1, c2, gamma, delta, a, b,
                     dt, h_max, t_max, out[j], trace)

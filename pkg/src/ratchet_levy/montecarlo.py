"""Monte Carlo simulation of the controlled surplus.

Independent of the scale-function machinery: paths are generated directly from
the model and the strategy mechanics (continuous dividends at ``c1`` then
``c1 + c2`` after the first passage above ``b``, lump payments down to ``a`` at
Poisson decision epochs, ruin below 0).  Work is split into fixed-size chunks
that run on a thread pool; each path has its own counter-based random stream,
so the output only depends on ``(seed, n_paths, config)``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _mckernel as K
from ._threads import THREADS_ENV, default_workers
from .errors import ConfigError, InvalidParameter, NumericalError
from .models import LevyModel, ModelKind
from .valuation import Strategy

__all__ = [
    "Target",
    "Controls",
    "SimConfig",
    "PathOutcome",
    "McEstimate",
    "SimulationRun",
    "simulate_path",
    "simulate",
    "estimate",
    "default_workers",
]

CHUNK = 2048


class Target(str, enum.Enum):
    DIVIDEND_NPV = "DividendNPV"
    RUIN_LAPLACE = "RuinLaplace"


@dataclass(frozen=True)
class Controls:
    """Strategy parameters without the admissibility rules of :class:`Strategy`.

    ``gamma = 0`` switches the decision clock off and zero rates switch off
    the continuous dividends, which lets the simulator run uncontrolled paths.
    """

    a: float
    b: float
    c1: float
    c2: float
    gamma: float

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0 and self.c1 >= 0 and self.c2 >= 0 and self.gamma >= 0):
            raise InvalidParameter("controls must be nonnegative")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_max: float = 2000.0
    n_paths: int = 100_000
    seed: int = 0
    antithetic: bool = False
    # upper bound on a single diffusion step away from the barriers;
    # None means max(0.25, dt)
    h_max: float | None = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be > 0")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ConfigError("t_max must be > 0")
        if not (isinstance(self.n_paths, (int, np.integer)) and self.n_paths > 0):
            raise ConfigError("n_paths must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.h_max is not None and not self.h_max >= self.dt:
            raise ConfigError("h_max must be >= dt")

    @property
    def step_cap(self) -> float:
        return max(0.25, self.dt) if self.h_max is None else float(self.h_max)

    def check(self, gamma: float) -> None:
        if gamma > 0 and self.dt > 1.0 / (10.0 * gamma):
            raise ConfigError(
                f"dt={self.dt:g} too coarse for gamma={gamma:g}: need dt <= 1/(10 gamma) = {1 / (10 * gamma):g}"
            )


@dataclass(frozen=True)
class PathOutcome:
    ruined: bool
    censored: bool
    tau: float
    disc_ratchet: float
    disc_periodic: float
    disc_ruin_indicator: float

    @property
    def disc_total(self) -> float:
        return self.disc_ratchet + self.disc_periodic


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n: int
    censored_fraction: float
    se_defined: bool = True

    def z_score(self, reference: float) -> float:
        if not self.se_defined or self.std_error == 0:
            return math.nan
        return (self.mean - reference) / self.std_error


def _params(model: LevyModel, s, delta: float, y0: float, cfg: SimConfig):
    if not y0 >= 0:
        raise InvalidParameter("initial surplus must satisfy y0 >= 0")
    if not delta >= 0:
        raise InvalidParameter("delta must be >= 0")
    if isinstance(s, Strategy):
        s.bind(model)
    cfg.check(s.gamma)
    if model.kind is ModelKind.BROWNIAN:
        lam, eta = 0.0, 1.0
    else:
        lam, eta = float(model.lam), float(model.eta)
    return (
        float(y0), float(model.mu), float(model.sigma), lam, eta,
        float(s.c1), float(s.c2), float(s.gamma), float(delta), float(s.a), float(s.b),
        float(cfg.dt), cfg.step_cap, float(cfg.t_max),
    )


def _outcome(row) -> PathOutcome:
    return PathOutcome(
        ruined=bool(row[K.COL_RUINED]),
        censored=bool(row[K.COL_CENSORED]),
        tau=float(row[K.COL_TAU]) if row[K.COL_RUINED] else math.inf,
        disc_ratchet=float(row[K.COL_RATCHET]),
        disc_periodic=float(row[K.COL_PERIODIC]),
        disc_ruin_indicator=float(row[K.COL_RUIN_DISC]),
    )


def simulate_path(model: LevyModel, s, delta: float, y0: float, cfg: SimConfig, path_index: int,
                  trace_capacity: int = 0):
    """One path; with ``trace_capacity > 0`` also returns the event trace.

    Trace rows are ``(t, kind, surplus_before, surplus_after)`` with kinds from
    the ``EV_*`` constants of the kernel module.
    """
    p = _params(model, s, delta, y0, cfg)
    out = np.zeros(K.N_COLS)
    trace = np.zeros((max(int(trace_capacity), 0), 4))
    if cfg.antithetic:
        key = K.path_key(np.uint64(cfg.seed), np.uint64(path_index // 2))
        sign = -1.0 if path_index % 2 else 1.0
    else:
        key = K.path_key(np.uint64(cfg.seed), np.uint64(path_index))
        sign = 1.0
    # numba hands uint64 results back as Python ints; keep the key unsigned
    n = K.simulate_one(np.uint64(key), sign, *p, out, trace)
    if out[K.COL_VIOLATIONS]:
        raise NumericalError("path violated a strategy invariant")
    res = _outcome(out)
    if trace_capacity > 0:
        return res, trace[: min(n, trace.shape[0])]
    return res


@dataclass(frozen=True)
class SimulationRun:
    """Per-path outcomes in path order (columns as in the kernel module)."""

    outcomes: np.ndarray
    antithetic: bool

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    def samples(self, target) -> np.ndarray:
        target = Target(target)
        o = self.outcomes
        if target is Target.DIVIDEND_NPV:
            return o[:, K.COL_RATCHET] + o[:, K.COL_PERIODIC]
        return o[:, K.COL_RUIN_DISC].copy()

    def estimate(self, target) -> McEstimate:
        x = self.samples(target)
        n = x.shape[0]
        cens = float(np.sum(self.outcomes[:, K.COL_CENSORED])) / n
        mean = float(np.sum(x)) / n
        if self.antithetic and n >= 4:
            m = n // 2
            pairs = 0.5 * (x[0:2 * m:2] + x[1:2 * m:2])
            units = pairs if n % 2 == 0 else np.append(pairs, x[-1])
        else:
            units = x
        k = units.shape[0]
        if k < 2:
            return McEstimate(mean, 0.0, n, cens, se_defined=False)
        se = float(np.std(units, ddof=1)) / math.sqrt(k)
        return McEstimate(mean, se, n, cens)


def simulate(model: LevyModel, s, delta: float, y0: float, cfg: SimConfig, workers: int | None = None) -> SimulationRun:
    p = _params(model, s, delta, y0, cfg)
    n = int(cfg.n_paths)
    out = np.zeros((n, K.N_COLS))
    starts = list(range(0, n, CHUNK))
    seed = np.uint64(cfg.seed)

    def work(start):
        count = min(CHUNK, n - start)
        K.run_chunk(seed, start, count, cfg.antithetic, *p, out[start:start + count])

    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if workers == 1 or len(starts) == 1:
        for st in starts:
            work(st)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    if np.any(out[:, K.COL_VIOLATIONS]):
        raise NumericalError("a simulated path violated a strategy invariant")
    return SimulationRun(out, bool(cfg.antithetic))


def estimate(model: LevyModel, s, delta: float, y0: float, cfg: SimConfig, target=Target.DIVIDEND_NPV,
             workers: int | None = None) -> McEstimate:
    return simulate(model, s, delta, y0, cfg, workers).estimate(target)

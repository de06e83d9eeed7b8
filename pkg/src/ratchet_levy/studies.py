"""Parameter sweeps, barrier optimisation and the bundled figure presets.

Every grid point is recomputed from a full parameter record, so rows can be
reproduced one at a time.  Points that violate a model or strategy rule are
kept in the table with an error message instead of being dropped.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._threads import default_workers
from .errors import InvalidParameter, RatchetLevyError
from .models import LevyModel
from .ruin import laplace_ruin
from .valuation import Strategy, value, value_periodic_only

__all__ = [
    "Quantity",
    "Axis",
    "Params",
    "SweepSpec",
    "SweepTable",
    "OptimumReport",
    "SigmaProfile",
    "BTilde",
    "sweep",
    "evaluate",
    "optimize_a",
    "sigma_profile",
    "b_tilde_star",
    "PRESETS",
    "run_preset",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Quantity(str, enum.Enum):
    DIVIDEND_NPV = "DividendNPV"
    RUIN_LAPLACE = "RuinLaplace"


class Axis(str, enum.Enum):
    Y = "y"
    A = "a"
    B = "b"
    C1 = "c1"
    C2 = "c2"
    SIGMA = "sigma"
    GAMMA = "gamma"
    C1C2_GRID = "c1c2_grid"


@dataclass(frozen=True)
class Params:
    """Everything needed to evaluate one point."""

    model: LevyModel
    y: float
    a: float
    b: float
    c1: float
    c2: float
    gamma: float
    delta: float

    @classmethod
    def base(cls, y: float, a: float, b: float, **kw) -> "Params":
        rec = dict(model=LevyModel.brownian(1.0, 2.0), y=y, a=a, b=b, c1=0.0, c2=0.1, gamma=1.0, delta=0.05)
        rec.update(kw)
        return cls(**rec)

    @property
    def strategy(self) -> Strategy:
        return Strategy(self.a, self.b, self.c1, self.c2, self.gamma)

    def set(self, name: str, v: float) -> "Params":
        if name == "sigma":
            return replace(self, model=self.model.with_sigma(v))
        return replace(self, **{name: v})


def evaluate(quantity, p: Params) -> float:
    quantity = Quantity(quantity)
    if quantity is Quantity.DIVIDEND_NPV:
        return value(p.model, p.strategy, p.delta, p.y).value
    return laplace_ruin(p.model, p.strategy, p.delta, p.y).value


def _grid(lo: float, hi: float, n: int, scale: str = "linear") -> np.ndarray:
    if scale == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class SweepSpec:
    quantity: Quantity
    axis: Axis
    range: tuple[float, float, int]
    fixed: Params
    # second range for the (c1, c2) grid; the first range is then c1
    range2: tuple[float, float, int] | None = None
    scale: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "quantity", Quantity(self.quantity))
        object.__setattr__(self, "axis", Axis(self.axis))
        for r in (self.range, self.range2):
            if r is None:
                continue
            lo, hi, n = r
            if not (int(n) == n and n >= 2):
                raise InvalidParameter("sweep range needs n_points >= 2")
            if not hi > lo:
                raise InvalidParameter("sweep range must be strictly increasing (lo < hi)")
        if self.axis is Axis.C1C2_GRID and self.range2 is None:
            raise InvalidParameter("c1c2_grid sweep needs a second range for c2")
        if self.scale not in ("linear", "log"):
            raise InvalidParameter("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.range[0] <= 0:
            raise InvalidParameter("log-spaced sweep needs lo > 0")

    @property
    def columns(self) -> tuple[str, ...]:
        if self.axis is Axis.C1C2_GRID:
            return ("c1", "c2")
        return (self.axis.value,)

    def points(self) -> list[tuple[float, ...]]:
        xs = _grid(*self.range, scale=self.scale)
        if self.axis is Axis.C1C2_GRID:
            ys = _grid(*self.range2)
            return [(float(u), float(v)) for u in xs for v in ys]
        return [(float(u),) for u in xs]

    def params_at(self, point: tuple[float, ...]) -> Params:
        p = self.fixed
        for name, v in zip(self.columns, point):
            p = p.set(name, v)
        return p


@dataclass(frozen=True)
class SweepTable:
    columns: tuple[str, ...]
    quantity: str
    rows: tuple[tuple, ...]  # (*axis values, value, error)
    extra: tuple[str, ...] = ()

    @property
    def values(self) -> np.ndarray:
        k = len(self.columns)
        return np.array([r[k] for r in self.rows], dtype=float)

    def axis(self, name: str | None = None) -> np.ndarray:
        i = 0 if name is None else self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def header(self) -> list[str]:
        return [*self.columns, self.quantity, *self.extra, "error"]

    def to_csv(self, fh=None, prefix: tuple[tuple[str, str], ...] = ()) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([k for k, _ in prefix] + self.header())
        k = len(self.columns)
        for r in self.rows:
            cells = [repr(float(v)) for v in r[:k]]
            cells.append("" if r[k] is None or math.isnan(r[k]) else repr(float(r[k])))
            cells.extend(_cell(v) for v in r[k + 1:-1])
            cells.append(r[-1])
            w.writerow([v for _, v in prefix] + cells)
        return buf.getvalue() if fh is None else ""


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    return repr(float(v))


def _safe(quantity, p: Params) -> tuple[float, str]:
    try:
        return evaluate(quantity, p), ""
    except RatchetLevyError as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _pmap(fn, items, workers=None):
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def sweep(spec: SweepSpec, workers: int | None = None) -> SweepTable:
    pts = spec.points()
    res = _pmap(lambda pt: _safe(spec.quantity, spec.params_at(pt)), pts, workers)
    rows = tuple((*pt, v, err) for pt, (v, err) in zip(pts, res))
    return SweepTable(spec.columns, spec.quantity.value, rows)


@dataclass(frozen=True)
class OptimumReport:
    argmax: float
    max_value: float
    grid: tuple[tuple[float, float], ...]
    refined: bool
    at_right_boundary: bool = False


def _golden_max(f, lo, hi, tol):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def optimize_a(model: LevyModel, y: float, b: float, c1: float, c2: float, gamma: float, delta: float,
               n_grid: int = 64, tol: float = 1e-6, workers: int | None = None) -> OptimumReport:
    """Maximise the value over the periodic barrier ``a`` in ``(0, b]``.

    Grid search followed by golden-section refinement on the bracket around
    the best grid point.  With ``c1 = 0`` and ``c2 = 0`` the pure periodic
    value is optimised instead.
    """
    if not b > 0:
        raise InvalidParameter("optimize_a needs b > 0")
    if c2 == 0 and c1 == 0:
        def f(a):
            return value_periodic_only(model, a, gamma, delta, y)
    else:
        def f(a):
            return value(model, Strategy(a, b, c1, c2, gamma), delta, y).value

    grid = b * np.arange(1, n_grid + 1) / n_grid
    vals = _pmap(f, list(grid), workers)
    k = int(np.argmax(vals))
    lo = grid[k - 1] if k > 0 else 0.5 * grid[0]
    hi = grid[k + 1] if k + 1 < n_grid else b
    cand, fc = _golden_max(f, lo, hi, tol * max(1.0, b))
    pts = [(float(a), float(v)) for a, v in zip(grid, vals)]
    best_a, best_v = pts[k]
    refined = False
    if fc > best_v:
        best_a, best_v, refined = float(cand), float(fc), True
        pts.append((best_a, best_v))
        pts.sort()
    return OptimumReport(best_a, best_v, tuple(pts), refined, best_a == float(b))


@dataclass(frozen=True)
class SigmaProfile:
    sigmas: tuple[float, ...]
    values: tuple[float, ...]
    # one flag per interior grid point (second difference <= 0)
    concave: tuple[bool, ...]
    argmax: float
    interior: bool

    def table(self) -> SweepTable:
        flags = (None, *self.concave, None)
        rows = tuple((s, v, c, "") for s, v, c in zip(self.sigmas, self.values, flags))
        return SweepTable(("sigma",), Quantity.DIVIDEND_NPV.value, rows, ("concave",))


def sigma_profile(model_template: LevyModel, y: float, s: Strategy, delta: float,
                  sigma_range: tuple[float, float, int] = (0.02, 0.8, 40), workers: int | None = None,
                  tol: float = 1e-12) -> SigmaProfile:
    lo, hi, n = sigma_range
    if not (0 < lo < hi and n >= 3):
        raise InvalidParameter("sigma_range must satisfy 0 < lo < hi with at least 3 points")
    sig = np.linspace(lo, hi, int(n))
    vals = np.array(_pmap(lambda v: value(model_template.with_sigma(float(v)), s, delta, y).value, list(sig), workers))
    d2 = vals[2:] - 2 * vals[1:-1] + vals[:-2]
    scale = tol * np.maximum(1.0, np.abs(vals[1:-1]))
    k = int(np.argmax(vals))
    return SigmaProfile(
        tuple(map(float, sig)),
        tuple(map(float, vals)),
        tuple(bool(v <= t) for v, t in zip(d2, scale)),
        float(sig[k]),
        0 < k < len(sig) - 1,
    )


@dataclass(frozen=True)
class BTilde:
    """Finite stand-in for an optimal ratchet barrier that runs off to infinity."""

    b_tilde: float
    asymptote: float
    tolerance: float
    status: str = "right-boundary, nonconvergent"


def b_tilde_star(model: LevyModel, y: float, a: float, c1: float, c2: float, gamma: float, delta: float,
                 tol: float = 0.005, b_far: float = 400.0) -> BTilde:
    """Smallest ``b >= max(a, y)`` whose value is within ``tol`` of the ``b -> inf`` limit."""
    def f(b):
        return value(model, Strategy(a, b, c1, c2, gamma), delta, y).value

    lo = max(a, y)
    # the value in b settles exponentially; double until it stops moving
    b, prev = max(2.0 * lo, 10.0), None
    while True:
        cur = f(b)
        if prev is not None and abs(cur - prev) <= 1e-10 * abs(cur):
            break
        if b >= b_far:
            break
        prev, b = cur, 2.0 * b
    target = (1.0 - tol) * cur
    if f(lo) >= target:
        return BTilde(lo, cur, tol)
    hi = b
    while hi - lo > 1e-6 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return BTilde(hi, cur, tol)


# ---------------------------------------------------------------- presets

@dataclass(frozen=True)
class Panel:
    name: str
    curves: tuple[tuple[str, SweepSpec], ...] = ()
    sigma: tuple[tuple[str, Params, tuple[float, float, int]], ...] = ()
    note: str = field(default="", compare=False)


V = Quantity.DIVIDEND_NPV
L = Quantity.RUIN_LAPLACE
_B = Params.base


def _c1c2(q, y, a, b):
    return SweepSpec(q, Axis.C1C2_GRID, (0.0, 0.3, 16), _B(y, a, b), range2=(0.02, 0.3, 15))


PRESETS: dict[str, tuple[Panel, ...]] = {
    "fig1a": (Panel("y", (("a3_b5", SweepSpec(V, Axis.Y, (0.0, 10.0, 101), _B(0.0, 3.0, 5.0))),)),),
    "fig1b": (Panel("a", (
        ("y8_b5", SweepSpec(V, Axis.A, (5.0 / 64, 5.0, 64), _B(8.0, 1.0, 5.0))),
        ("y2_b5", SweepSpec(V, Axis.A, (5.0 / 64, 5.0, 64), _B(2.0, 1.0, 5.0))),
    )),),
    "fig3": (
        Panel("a", (
            ("y8_a3", SweepSpec(V, Axis.B, (3.0, 40.0, 75), _B(8.0, 3.0, 5.0))),
            ("y5_a3", SweepSpec(V, Axis.B, (3.0, 40.0, 75), _B(5.0, 3.0, 5.0))),
        )),
        Panel("b", (("y2_a3", SweepSpec(V, Axis.B, (3.0, 40.0, 75), _B(2.0, 3.0, 5.0))),)),
    ),
    "fig4": (
        Panel("a", (("y5_a3_b4", _c1c2(V, 5.0, 3.0, 4.0)),)),
        Panel("b", (("y5_a3_b24", _c1c2(V, 5.0, 3.0, 24.0)),)),
        Panel("c", (("y2_a3_b24", _c1c2(V, 2.0, 3.0, 24.0)),)),
    ),
    "fig5": (
        Panel("a", (
            ("y8_a3_b4", SweepSpec(V, Axis.SIGMA, (0.02, 100.0, 60), _B(8.0, 3.0, 4.0), scale="log")),
            ("y5_a3_b24", SweepSpec(V, Axis.SIGMA, (0.02, 100.0, 60), _B(5.0, 3.0, 24.0), scale="log")),
            ("y2_a3_b24", SweepSpec(V, Axis.SIGMA, (0.02, 100.0, 60), _B(2.0, 3.0, 24.0), scale="log")),
        )),
        Panel("b", sigma=(("y8_a3_b4", _B(8.0, 3.0, 4.0), (0.02, 0.8, 40)),)),
        Panel("c", sigma=(("y5_a3_b24", _B(5.0, 3.0, 24.0), (0.02, 0.8, 40)),)),
        Panel("d", sigma=(("y2_a3_b24", _B(2.0, 3.0, 24.0), (0.02, 0.8, 40)),)),
    ),
    "fig6a": (Panel("gamma", (("y8_a3_b4", SweepSpec(L, Axis.GAMMA, (0.1, 5.0, 50), _B(8.0, 3.0, 4.0))),)),),
    "fig6b": (Panel("a", (
        ("y8_b5", SweepSpec(L, Axis.A, (5.0 / 64, 5.0, 64), _B(8.0, 1.0, 5.0))),
        ("y2_b5", SweepSpec(L, Axis.A, (5.0 / 64, 5.0, 64), _B(2.0, 1.0, 5.0))),
    )),),
    "fig6c": (Panel("b", (("y10_a3", SweepSpec(L, Axis.B, (3.0, 40.0, 75), _B(10.0, 3.0, 5.0))),)),),
    "fig6d": (Panel("c1c2", (("y5_a3_b4", _c1c2(L, 5.0, 3.0, 4.0)),)),),
}


@dataclass(frozen=True)
class PanelResult:
    preset: str
    panel: str
    curves: tuple[tuple[str, SweepTable], ...]
    profiles: tuple[tuple[str, SigmaProfile], ...] = ()

    def tables(self):
        yield from self.curves
        for name, prof in self.profiles:
            yield name, prof.table()

    def to_csv(self) -> str:
        buf = io.StringIO()
        first = True
        for name, tab in self.tables():
            text = tab.to_csv(prefix=(("curve", name),))
            if not first:
                # one header per file: drop repeated headers of later curves
                text = text.split("\n", 1)[1]
            buf.write(text)
            first = False
        return buf.getvalue()


def run_preset(name: str, workers: int | None = None) -> tuple[PanelResult, ...]:
    try:
        panels = PRESETS[name]
    except KeyError:
        raise InvalidParameter(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
    out = []
    for panel in panels:
        curves = tuple((label, sweep(spec, workers)) for label, spec in panel.curves)
        profiles = tuple(
            (label, sigma_profile(p.model, p.y, p.strategy, p.delta, rng, workers)) for label, p, rng in panel.sigma
        )
        out.append(PanelResult(name, panel.name, curves, profiles))
    return tuple(out)

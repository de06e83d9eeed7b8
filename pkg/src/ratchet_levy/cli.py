"""Command-line front end.

    ratchet-levy value    [--config PATH] [--y Y] [--a A] ...
    ratchet-levy laplace  ...
    ratchet-levy simulate ... [--seed S] [--paths N] [--dt DT] [--tmax T]
    ratchet-levy sweep    [--preset NAME] [--out PATH]
    ratchet-levy optimize [--what a|b]

Exit codes: 0 success, 2 configuration or validation failure, 3 numerical
failure.  The fully resolved configuration is echoed to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from .config import load
from .errors import InvalidParameter, NumericalError, RatchetLevyError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _num(v: float) -> str:
    return repr(float(v))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ratchet-levy", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    for name in ("y", "a", "b", "c1", "c2", "gamma", "delta", "mu", "sigma"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--out", metavar="PATH")
    sub.add_parser("value", parents=[common], help="expected discounted dividends")
    sub.add_parser("laplace", parents=[common], help="Laplace transform of the ruin time")
    sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--paths", type=int)
    sim.add_argument("--dt", type=float)
    sim.add_argument("--tmax", type=float)
    sim.add_argument("--target", choices=["DividendNPV", "RuinLaplace"])
    sim.add_argument("--workers", type=int, help="worker threads (default: RATCHET_LEVY_THREADS or CPU count)")
    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep or figure preset to CSV")
    sw.add_argument("--preset", metavar="NAME")
    opt = sub.add_parser("optimize", parents=[common], help="optimal periodic barrier a, or finite ratchet barrier b")
    opt.add_argument("--what", choices=["a", "b"])
    return p


def _overrides(ns) -> dict:
    keys = ("y", "a", "b", "c1", "c2", "gamma", "delta", "mu", "sigma", "seed", "paths", "dt", "tmax",
            "target", "preset")
    return {k: getattr(ns, k, None) for k in keys}


def _write_csv(path: str | None, header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path is None:
        out.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def cmd_value(cfg, ns, out):
    from .valuation import value

    model, s, y, d = cfg.model(), cfg.strategy(), cfg.y(), cfg.delta()
    r = value(model, s, d, y)
    line = f"value={_num(r.value)} region={r.region.value} ratchet={_num(r.ratchet_part)} periodic={_num(r.periodic_part)}"
    if r.region.value != "Upper":
        line += f" continuation={_num(r.continuation)}"
    out.write(line + "\n")
    if ns.out:
        _write_csv(ns.out, ["y", "region", "value", "ratchet", "periodic", "continuation"],
                   [[_num(y), r.region.value, _num(r.value), _num(r.ratchet_part), _num(r.periodic_part),
                     _num(r.continuation)]], out)


def cmd_laplace(cfg, ns, out):
    from .ruin import laplace_ruin

    model, s, y, d = cfg.model(), cfg.strategy(), cfg.y(), cfg.delta(allow_zero=True)
    r = laplace_ruin(model, s, d, y)
    out.write(f"value={_num(r.value)} region={r.region.value}\n")
    if ns.out:
        _write_csv(ns.out, ["y", "region", "value"], [[_num(y), r.region.value, _num(r.value)]], out)


def cmd_simulate(cfg, ns, out):
    from . import _mckernel as K
    from .montecarlo import SimConfig, Target, simulate

    model, s, y = cfg.model(), cfg.strategy(), cfg.y()
    target = Target(cfg.get("simulation", "target"))
    d = cfg.delta(allow_zero=target is Target.RUIN_LAPLACE)
    sim = cfg.tree["simulation"]
    try:
        sc = SimConfig(dt=float(sim["dt"]), t_max=float(sim["t_max"]), n_paths=int(sim["n_paths"]),
                       seed=int(sim["seed"]), antithetic=bool(sim["antithetic"]))
        sc.check(s.gamma)
    except InvalidParameter as exc:
        key = "dt" if "dt" in str(exc) else "n_paths" if "n_paths" in str(exc) else "t_max" if "t_max" in str(exc) else "seed"
        raise cfg.error(("simulation", key), f"{exc} (simulation config invariant)") from None
    run = simulate(model, s, d, y, sc, workers=ns.workers)
    est = run.estimate(target)
    reference = math.nan
    try:
        if target is Target.DIVIDEND_NPV:
            from .valuation import value

            reference = value(model, s, d, y).value
        else:
            from .ruin import laplace_ruin

            reference = laplace_ruin(model, s, d, y).value
    except RatchetLevyError:
        pass
    out.write(f"target={target.value}\n")
    out.write(f"mean={_num(est.mean)}\n")
    out.write(f"std_error={_num(est.std_error)}{'' if est.se_defined else ' (undefined, n=1)'}\n")
    out.write(f"n={est.n}\n")
    out.write(f"censored_fraction={_num(est.censored_fraction)}\n")
    if math.isfinite(reference):
        out.write(f"closed_form={_num(reference)}\n")
        z = est.z_score(reference)
        out.write(f"z={_num(z) if math.isfinite(z) else 'nan'}\n")
    if ns.out:
        o = run.outcomes
        rows = (
            [i, int(r[K.COL_RUINED]), int(r[K.COL_CENSORED]), _num(r[K.COL_TAU]) if r[K.COL_RUINED] else "inf",
             _num(r[K.COL_RATCHET]), _num(r[K.COL_PERIODIC]), _num(r[K.COL_RUIN_DISC])]
            for i, r in enumerate(o)
        )
        _write_csv(ns.out, ["path", "ruined", "censored", "tau", "disc_ratchet", "disc_periodic",
                            "disc_ruin_indicator"], rows, out)


def cmd_sweep(cfg, ns, out):
    from .studies import PRESETS, Params, SweepSpec, run_preset, sweep

    block = cfg.tree["sweep"]
    preset = block["preset"]
    if preset is not None:
        if preset not in PRESETS:
            raise cfg.error(("sweep", "preset"), f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        results = run_preset(preset)
        if ns.out:
            os.makedirs(ns.out, exist_ok=True)
        for pr in results:
            text = pr.to_csv()
            if ns.out:
                path = os.path.join(ns.out, f"{preset}_{pr.panel}.csv")
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                out.write(f"wrote {path}\n")
            else:
                out.write(f"# {preset}_{pr.panel}\n{text}")
        return
    s = cfg.tree["strategy"]
    fixed = Params(cfg.model(), float(cfg.tree["y"]), float(s["a"]), float(s["b"]), float(s["c1"]),
                   float(s["c2"]), float(s["gamma"]), float(cfg.tree["delta"]))
    try:
        rng = block["range"]
        rng2 = block["range2"]
        spec = SweepSpec(block["quantity"], block["axis"], (float(rng[0]), float(rng[1]), int(rng[2])), fixed,
                         None if rng2 is None else (float(rng2[0]), float(rng2[1]), int(rng2[2])), block["scale"])
    except (InvalidParameter, ValueError) as exc:
        raise cfg.error(("sweep",), str(exc)) from None
    table = sweep(spec)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="") as fh:
            table.to_csv(fh)
    else:
        out.write(table.to_csv())


def cmd_optimize(cfg, ns, out):
    from .studies import b_tilde_star, optimize_a

    what = ns.what or cfg.get("optimize", "what")
    if what not in ("a", "b"):
        raise cfg.error(("optimize", "what"), "what must be 'a' or 'b'")
    model, y, d = cfg.model(), cfg.y(), cfg.delta()
    if what == "a":
        st = cfg.strategy()
        rep = optimize_a(model, y, st.b, st.c1, st.c2, st.gamma, d, n_grid=int(cfg.get("optimize", "grid")))
        out.write(f"argmax_a={_num(rep.argmax)} max_value={_num(rep.max_value)} refined={str(rep.refined).lower()} "
                  f"right_boundary={str(rep.at_right_boundary).lower()}\n")
        if ns.out:
            _write_csv(ns.out, ["a", "DividendNPV"], [[_num(a), _num(v)] for a, v in rep.grid], out)
    else:
        st = cfg.strategy()
        rep = b_tilde_star(model, y, st.a, st.c1, st.c2, st.gamma, d, tol=float(cfg.get("optimize", "tolerance")))
        out.write(f"b_tilde={_num(rep.b_tilde)} asymptote={_num(rep.asymptote)} tolerance={_num(rep.tolerance)} "
                  f"status={rep.status.replace(' ', '_')}\n")


COMMANDS = {
    "value": cmd_value,
    "laplace": cmd_laplace,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    ns = _parser().parse_args(argv)
    try:
        cfg = load(ns.config, _overrides(ns))
        err.write(f"# config {cfg.resolved_json()}\n")
        COMMANDS[ns.command](cfg, ns, out)
    except InvalidParameter as exc:
        err.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        err.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except RatchetLevyError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

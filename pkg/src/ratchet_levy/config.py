"""Run configuration: JSON file with nested blocks plus command-line overrides.

Parsing happens first, then every model and strategy rule is re-checked.
Errors name the file line of the offending key when it came from the file and
the flag when it came from the command line.
"""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass

from .errors import ConfigError, RatchetLevyError
from .models import LevyModel, ModelKind
from .valuation import Strategy

DEFAULTS = {
    "model": {"kind": "brownian", "mu": 1.0, "sigma": 2.0, "lambda": 0.0, "eta": 1.0},
    "strategy": {"a": 3.0, "b": 5.0, "c1": 0.0, "c2": 0.1, "gamma": 1.0},
    "delta": 0.05,
    "y": 8.0,
    "simulation": {
        "dt": 1e-3,
        "t_max": 2000.0,
        "n_paths": 100000,
        "seed": 0,
        "antithetic": False,
        "target": "DividendNPV",
    },
    "sweep": {"preset": None, "quantity": "DividendNPV", "axis": "y", "range": [0.0, 10.0, 101],
              "range2": None, "scale": "linear"},
    "optimize": {"what": "a", "grid": 64, "tolerance": 0.005},
}

# flag name -> path in the config tree
FLAG_PATHS = {
    "y": ("y",),
    "a": ("strategy", "a"),
    "b": ("strategy", "b"),
    "c1": ("strategy", "c1"),
    "c2": ("strategy", "c2"),
    "gamma": ("strategy", "gamma"),
    "delta": ("delta",),
    "mu": ("model", "mu"),
    "sigma": ("model", "sigma"),
    "seed": ("simulation", "seed"),
    "paths": ("simulation", "n_paths"),
    "dt": ("simulation", "dt"),
    "tmax": ("simulation", "t_max"),
    "target": ("simulation", "target"),
    "preset": ("sweep", "preset"),
}

_INTS = {("simulation", "n_paths"), ("simulation", "seed"), ("optimize", "grid")}
_BOOLS = {("simulation", "antithetic")}
_STRS = {
    ("model", "kind"), ("simulation", "target"), ("sweep", "preset"), ("sweep", "quantity"),
    ("sweep", "axis"), ("sweep", "scale"), ("optimize", "what"),
}
_LISTS = {("sweep", "range"), ("sweep", "range2")}
_NULLABLE = {("sweep", "preset"), ("sweep", "range2")}


class Source:
    """Where each resolved value came from, for error messages."""

    def __init__(self, text: str | None, path: str | None):
        self.text = text
        self.path = path
        self.flags: set[tuple[str, ...]] = set()

    def line_of(self, keys: tuple[str, ...]) -> int | None:
        if self.text is None:
            return None
        pos = 0
        for k in keys:
            m = re.compile(r'"%s"\s*:' % re.escape(k)).search(self.text, pos)
            if m is None:
                return None
            pos = m.end()
        return self.text.count("\n", 0, pos) + 1

    def where(self, keys: tuple[str, ...]) -> str:
        dotted = ".".join(keys)
        if keys in self.flags:
            flag = next((f for f, p in FLAG_PATHS.items() if p == keys), dotted)
            return f"--{flag}"
        line = self.line_of(keys)
        if line is not None:
            return f"{self.path}:{line}: {dotted}"
        return dotted

    def error(self, keys: tuple[str, ...], msg: str) -> ConfigError:
        return ConfigError(f"{self.where(keys)}: {msg}")


def _merge(base: dict, over: dict, src: Source, prefix=()):
    for k, v in over.items():
        keys = prefix + (k,)
        if k not in base:
            raise src.error(keys, f"unknown key {'.'.join(keys)!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise src.error(keys, "expected an object")
            _merge(base[k], v, src, keys)
        else:
            base[k] = v


def _check_types(tree: dict, src: Source, prefix=()):
    for k, v in tree.items():
        keys = prefix + (k,)
        if isinstance(v, dict):
            _check_types(v, src, keys)
            continue
        if v is None and keys in _NULLABLE:
            continue
        if keys in _BOOLS:
            if not isinstance(v, bool):
                raise src.error(keys, "expected true or false")
        elif keys in _STRS:
            if not isinstance(v, str):
                raise src.error(keys, "expected a string")
        elif keys in _LISTS:
            if not (isinstance(v, list) and len(v) == 3 and all(_is_num(x) for x in v)):
                raise src.error(keys, "expected [lo, hi, n_points]")
        elif keys in _INTS:
            if not (isinstance(v, int) and not isinstance(v, bool)):
                raise src.error(keys, "expected an integer")
        elif not _is_num(v):
            raise src.error(keys, "expected a number")
        elif not math.isfinite(v):
            raise src.error(keys, "must be finite")


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


@dataclass
class RunConfig:
    tree: dict
    source: Source

    def get(self, *keys):
        node = self.tree
        for k in keys:
            node = node[k]
        return node

    def error(self, keys, msg) -> ConfigError:
        return self.source.error(tuple(keys), msg)

    def model(self) -> LevyModel:
        m = self.tree["model"]
        try:
            kind = ModelKind(m["kind"])
        except ValueError:
            raise self.error(("model", "kind"), f"kind must be one of {[k.value for k in ModelKind]}") from None
        try:
            if kind is ModelKind.BROWNIAN:
                return LevyModel.brownian(float(m["mu"]), float(m["sigma"]))
            return LevyModel.compound_poisson_exp(float(m["mu"]), float(m["sigma"]), float(m["lambda"]), float(m["eta"]))
        except RatchetLevyError as exc:
            raise self.error(("model",), str(exc)) from None

    def strategy(self) -> Strategy:
        s = self.tree["strategy"]
        checks = [
            ("a", s["a"] > 0, "a must satisfy a > 0"),
            ("b", s["b"] >= s["a"], "barriers must satisfy b ≥ a"),
            ("c1", s["c1"] >= 0, "c1 must satisfy c1 ≥ 0"),
            ("c2", s["c2"] > 0, "c2 must satisfy c2 > 0"),
            ("gamma", s["gamma"] > 0, "gamma must satisfy gamma > 0"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise self.error(("strategy", key), msg)
        st = Strategy(float(s["a"]), float(s["b"]), float(s["c1"]), float(s["c2"]), float(s["gamma"]))
        try:
            st.bind(self.model())
        except RatchetLevyError as exc:
            raise self.error(("strategy", "c2"), f"{exc} (need drift - c1 - c2 > 0)") from None
        return st

    def y(self) -> float:
        y = self.tree["y"]
        if not y >= 0:
            raise self.error(("y",), "initial surplus must satisfy y ≥ 0")
        return float(y)

    def delta(self, allow_zero: bool = False) -> float:
        d = self.tree["delta"]
        if allow_zero:
            if not d >= 0:
                raise self.error(("delta",), "discount rate must satisfy delta ≥ 0")
        elif not d > 0:
            raise self.error(("delta",), "discount rate must satisfy delta > 0 (the value divides by delta)")
        return float(d)

    def resolved_json(self) -> str:
        return json.dumps(self.tree, sort_keys=True, separators=(",", ":"))


def load(path: str | None, overrides: dict[str, object]) -> RunConfig:
    """Read ``path`` (may be None), apply flag ``overrides`` and type-check the result."""
    tree = copy.deepcopy(DEFAULTS)
    text = None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}:1: top level must be an object")
    src = Source(text, path)
    if path is not None:
        _merge(tree, raw, src)
    for flag, v in overrides.items():
        if v is None:
            continue
        keys = FLAG_PATHS[flag]
        node = tree
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = v
        src.flags.add(keys)
    _check_types(tree, src)
    return RunConfig(tree, src)

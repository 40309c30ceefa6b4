"""Run configuration: a TOML file plus command-line overrides.

Example::

    seed = 7
    alpha = 0.05
    out_dir = "out"

    [input]
    paths = ["sans2_2005.csv"]
    delimiter = ";"
    [input.columns]
    date = "reg_date"
    entry_time = "t_in"

    [gof]
    bins = 10

    [solver]
    tol = 1e-8

    [analyze]
    routes = ["NINTA-OPOKA"]

    [[simulate.streams]]
    generator = "nhpp"
    route = "NINTA-OPOKA"
    days = 365
    hourly_rates = [0.5, 0.5, ...]

Values given on the command line win over the file; the output directory can
also come from ``AIRSTAT_OUT_DIR``.
"""
from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .distfit import SolverConfig
from .errors import ConfigError
from .records import RouteKey, Schema

OUT_DIR_ENV = "AIRSTAT_OUT_DIR"
DEFAULT_OUT_DIR = "airstat-out"

_TOP_KEYS = {"seed", "alpha", "out_dir", "input", "gof", "solver", "segment", "analyze", "simulate"}


@dataclass(frozen=True)
class AnalysisConfig:
    inputs: tuple[Path, ...] = ()
    schema: Schema = field(default_factory=Schema)
    alpha: float = 0.05
    gof_bins: int = 10
    min_expected: float = 5.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    out_dir: Path = Path(DEFAULT_OUT_DIR)
    routes: tuple[RouteKey, ...] = ()  # empty: every route in the data
    min_intervals: int = 50
    merge_adjacent: bool = True
    streams: tuple[dict, ...] = ()  # generator specs for ``simulate``

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.gof_bins < 3:
            raise ConfigError(f"GOF bin count must be at least 3, got {self.gof_bins}")
        if self.min_expected <= 0:
            raise ConfigError("min_expected must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.min_intervals < 2:
            raise ConfigError("min_intervals must be at least 2")

    def to_dict(self) -> dict:
        """Settings that affect results (recorded in reports)."""
        return {
            "alpha": self.alpha,
            "gof_bins": self.gof_bins,
            "min_expected": self.min_expected,
            "seed": self.seed,
            "min_intervals": self.min_intervals,
            "merge_adjacent": self.merge_adjacent,
            "solver": {f.name: getattr(self.solver, f.name) for f in fields(self.solver)},
        }


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _check_keys(sec: dict, allowed: set[str], where: str) -> None:
    extra = set(sec) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def _solver(sec: dict) -> SolverConfig:
    names = {f.name for f in fields(SolverConfig)}
    _check_keys(sec, names, "[solver]")
    kw: dict[str, Any] = {}
    for k, v in sec.items():
        kw[k] = tuple(float(x) for x in v) if isinstance(v, list) else v
    try:
        return SolverConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad [solver] settings: {exc}") from None


def from_mapping(doc: dict, base_dir: Path | None = None) -> AnalysisConfig:
    """Build a config from a parsed TOML document.

    Relative input paths are resolved against ``base_dir`` (the directory of
    the config file).
    """
    _check_keys(doc, _TOP_KEYS, "config")
    base_dir = base_dir or Path(".")
    kw: dict[str, Any] = {}
    for k in ("seed", "alpha"):
        if k in doc:
            kw[k] = doc[k]
    if "out_dir" in doc:
        kw["out_dir"] = base_dir / doc["out_dir"]

    inp = _section(doc, "input")
    _check_keys(inp, {"paths", "delimiter", "columns"}, "[input]")
    paths = inp.get("paths", [])
    if isinstance(paths, str):
        paths = [paths]
    kw["inputs"] = tuple(base_dir / p for p in paths)
    cols = inp.get("columns", {})
    if not isinstance(cols, dict):
        raise ConfigError("[input.columns] must be a table")
    kw["schema"] = Schema(columns=dict(cols), delimiter=inp.get("delimiter"))

    gof = _section(doc, "gof")
    _check_keys(gof, {"bins", "min_expected"}, "[gof]")
    if "bins" in gof:
        kw["gof_bins"] = gof["bins"]
    if "min_expected" in gof:
        kw["min_expected"] = float(gof["min_expected"])

    kw["solver"] = _solver(_section(doc, "solver"))

    seg = _section(doc, "segment")
    _check_keys(seg, {"merge_adjacent"}, "[segment]")
    if "merge_adjacent" in seg:
        kw["merge_adjacent"] = bool(seg["merge_adjacent"])

    ana = _section(doc, "analyze")
    _check_keys(ana, {"routes", "min_intervals"}, "[analyze]")
    if "routes" in ana:
        kw["routes"] = tuple(RouteKey.parse(r) for r in ana["routes"])
    if "min_intervals" in ana:
        kw["min_intervals"] = ana["min_intervals"]

    sim = _section(doc, "simulate")
    _check_keys(sim, {"streams"}, "[simulate]")
    streams = sim.get("streams", [])
    if not isinstance(streams, list) or not all(isinstance(s, dict) for s in streams):
        raise ConfigError("[[simulate.streams]] must be an array of tables")
    kw["streams"] = tuple(streams)
    try:
        return AnalysisConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from None


def load_config(path: str | os.PathLike | None) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return from_mapping(doc, path.parent)


def resolve(path: str | os.PathLike | None = None, *, env: dict | None = None,
            **overrides: Any) -> AnalysisConfig:
    """File settings, then ``AIRSTAT_OUT_DIR``, then explicit overrides.

    Overrides equal to ``None`` are ignored.
    """
    cfg = load_config(path)
    env = os.environ if env is None else env
    if env.get(OUT_DIR_ENV):
        cfg = replace(cfg, out_dir=Path(env[OUT_DIR_ENV]))
    given = {k: v for k, v in overrides.items() if v is not None}
    if "out_dir" in given:
        given["out_dir"] = Path(given["out_dir"])
    if "inputs" in given:
        given["inputs"] = tuple(Path(p) for p in given["inputs"])
    if "routes" in given:
        given["routes"] = tuple(RouteKey.parse(r) if isinstance(r, str) else RouteKey(*r)
                                for r in given["routes"])
    return replace(cfg, **given) if given else cfg

"""``airstat`` command line.

Exit status: 0 success, 1 usage or config error, 2 data error (including
unreadable input), 3 internal error.
"""
from __future__ import annotations

import argparse
import io
import sys
import traceback
from datetime import datetime
from pathlib import Path
from typing import Sequence

from . import __version__
from .config import AnalysisConfig, resolve
from .errors import ConfigError, DataError
from .intervals import extract_intervals, hourly_window
from .profile import KINDS, build_profile, change_points, segment_stationary
from .records import FlightRecord, RouteKey, group_by_route, parse_records, write_canonical
from .report import (
    analyze_period,
    dump_json,
    period_id,
    route_records,
    segment_route,
    write_gof_bins,
    write_histogram,
)
from .rng import derive_key
from .distfit import MixtureParams
from .streamgen import (
    IntensityProfile,
    gen_homogeneous_poisson,
    gen_mixture_renewal,
    gen_nhpp,
    merge_streams,
    write_truth,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_START = "2005-01-01T00:00"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write(path: Path, writer, *args) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(*args, fh)
    return path


def _safe(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def _load(cfg: AnalysisConfig) -> tuple[list[FlightRecord], list[tuple[Path, dict]]]:
    if not cfg.inputs:
        raise ConfigError("no input files (give them as arguments or in [input] paths)")
    records: list[FlightRecord] = []
    reports = []
    for path in cfg.inputs:
        recs, rep = parse_records(path, cfg.schema)
        records.extend(recs)
        reports.append((path, rep.to_dict()))
    records.sort(key=lambda r: r.entry_time)
    return records, reports


def _check_routes(records: Sequence[FlightRecord], routes: Sequence[RouteKey]) -> None:
    known = set(group_by_route(records))
    missing = [r for r in routes if r not in known]
    if missing:
        listing = ", ".join(sorted(str(r) for r in known)) or "(no routes)"
        raise ConfigError(
            f"unknown route(s) {', '.join(map(str, missing))}; routes in the data: {listing}"
        )


def _routes(records: Sequence[FlightRecord], cfg: AnalysisConfig) -> list[RouteKey]:
    if cfg.routes:
        _check_routes(records, cfg.routes)
        return list(cfg.routes)
    return sorted(group_by_route(records), key=str)


# -- commands -----------------------------------------------------------------


def cmd_ingest(cfg: AnalysisConfig, args) -> int:
    records, reports = _load(cfg)
    out = _write(cfg.out_dir / "records.csv", write_canonical, records)
    doc = {
        "accepted": sum(r["accepted"] for _, r in reports),
        "rejected": sum(r["rejected"] for _, r in reports),
        "inputs": [{"file": p.name, **r} for p, r in reports],
    }
    _write(cfg.out_dir / "ingest_report.json", dump_json, doc)
    print(f"{doc['accepted']} records accepted, {doc['rejected']} rejected -> {out}")
    return EXIT_OK


def cmd_profile(cfg: AnalysisConfig, args) -> int:
    records, _ = _load(cfg)
    route = RouteKey.parse(args.route) if args.route else None
    if route is not None:
        _check_routes(records, [route])
    prof = build_profile(args.kind, records, route)
    name = f"profile_{args.kind}" + (f"_{_safe(str(route))}" if route else "") + ".csv"
    out = _write(cfg.out_dir / name, prof.write_csv)
    print(f"{len(prof)} {args.kind} bins -> {out}")
    return EXIT_OK


def cmd_segment(cfg: AnalysisConfig, args) -> int:
    records, _ = _load(cfg)
    if args.kind == "weekday":
        raise ConfigError("weekday profiles are diagnostic only and are not segmented")
    targets: list[tuple[str, RouteKey | None]]
    if cfg.routes:
        _check_routes(records, cfg.routes)
        targets = [(str(r), r) for r in cfg.routes]
    else:
        targets = [("ALL", None)]
    result = {}
    for label, route in targets:
        prof = build_profile(args.kind, records, route)
        periods = segment_stationary(prof, cfg.alpha, cfg.min_expected, cfg.merge_adjacent)
        result[label] = {
            "periods": [p.to_dict() for p in periods],
            "change_points": change_points(periods),
        }
    doc = {"kind": args.kind, "alpha": cfg.alpha, "segments": result}
    out = _write(cfg.out_dir / f"segments_{args.kind}.json", dump_json, doc)
    for label, r in result.items():
        print(f"{label}: {len(r['periods'])} period(s), change points {r['change_points']}")
    print(f"-> {out}")
    return EXIT_OK


def _parse_window(text: str):
    try:
        a, b = text.split("-")
        return hourly_window(int(a), int(b))
    except ValueError:
        raise ConfigError(f"window must look like H0-H1 (hours 0..23), got {text!r}") from None


def cmd_intervals(cfg: AnalysisConfig, args) -> int:
    records, _ = _load(cfg)
    for route in _routes(records, cfg):
        if args.window:
            periods = [_parse_window(args.window)]
        else:
            _, periods = segment_route(records, route, cfg)
        for period in periods:
            sample = extract_intervals(records, route, period)
            stem = cfg.out_dir / "intervals" / f"{_safe(str(route))}_{period_id(period)}"
            _write(stem.with_suffix(".csv"), sample.write_csv)
            _write(stem.with_suffix(".json"), sample.write_sidecar)
            print(f"{route} {period_id(period)}: {len(sample)} intervals -> {stem}.csv")
    return EXIT_OK


def cmd_analyze(cfg: AnalysisConfig, args) -> int:
    records, _ = _load(cfg)
    index = {"config": cfg.to_dict(), "inputs": [p.name for p in cfg.inputs], "routes": []}
    for route in _routes(records, cfg):
        recs = route_records(records, route)
        prof, periods = segment_route(recs, route, cfg)
        rname = _safe(str(route))
        _write(cfg.out_dir / "plots" / f"{rname}_profile_hourly.csv", prof.write_csv)
        entry = {"route": str(route), "n_records": len(recs),
                 "change_points": change_points(periods), "reports": []}
        for period in periods:
            res = analyze_period(recs, route, period, cfg)
            pid = f"{rname}_{period_id(period)}"
            doc = res.to_dict(cfg.alpha)
            doc["config"] = cfg.to_dict()
            if res.exp_fit is not None:
                doc["plots"] = {"histogram": f"plots/{pid}_hist.csv", "gof_bins": f"plots/{pid}_gof.csv"}
                _write(cfg.out_dir / "plots" / f"{pid}_hist.csv", write_histogram, res)
                _write(cfg.out_dir / "plots" / f"{pid}_gof.csv", write_gof_bins, res)
            _write(cfg.out_dir / "reports" / f"{pid}.json", dump_json, doc)
            entry["reports"].append({
                "period": period_id(period),
                "status": res.status,
                "file": f"reports/{pid}.json",
                "exponential_accepted": doc["decision"]["exponential_accepted"],
                "mixture_fitted": doc["decision"]["mixture_fitted"],
            })
            verdict = res.reason if res.status == "skipped" else (
                "exponential accepted" if doc["decision"]["exponential_accepted"]
                else "exponential rejected, mixture fitted" if res.mix_fit else "exponential rejected")
            print(f"{route} {period_id(period)}: {res.status}: {verdict}")
        index["routes"].append(entry)
    out = _write(cfg.out_dir / "index.json", dump_json, index)
    print(f"-> {out}")
    return EXIT_OK


_STREAM_KEYS = {
    "poisson": {"rate", "duration_hours", "days"},
    "nhpp": {"hourly_rates", "rate", "monthly_multipliers", "days"},
    "mixture": {"p", "lambda", "mu", "sigma", "n"},
}


def _stream(spec: dict, seed: int):
    spec = dict(spec)
    gen = spec.pop("generator", None)
    if gen not in _STREAM_KEYS:
        raise ConfigError(f"generator must be one of {sorted(_STREAM_KEYS)}, got {gen!r}")
    if "route" not in spec:
        raise ConfigError("stream spec needs a route")
    route = RouteKey.parse(str(spec.pop("route")))
    try:
        start = datetime.fromisoformat(str(spec.pop("start", DEFAULT_START)))
    except ValueError as exc:
        raise ConfigError(f"bad start time: {exc}") from None
    extra = set(spec) - _STREAM_KEYS[gen]
    if extra:
        raise ConfigError(f"unknown key(s) for {gen} stream: {', '.join(sorted(extra))}")
    try:
        if gen == "poisson":
            hours = float(spec.get("duration_hours", 24.0 * float(spec.get("days", 0))))
            return gen_homogeneous_poisson(float(spec["rate"]), start, hours, route, seed)
        if gen == "nhpp":
            rates = spec.get("hourly_rates")
            if rates is None:
                rates = [float(spec["rate"])] * 24
            prof = IntensityProfile(tuple(rates), spec.get("monthly_multipliers"))
            return gen_nhpp(prof, start, int(spec.get("days", 0)), route, seed)
        params = MixtureParams(float(spec["p"]), float(spec["lambda"]),
                               float(spec["mu"]), float(spec["sigma"]))
        return gen_mixture_renewal(params, int(spec["n"]), start, route, seed)
    except KeyError as exc:
        raise ConfigError(f"{gen} stream is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad {gen} stream parameter: {exc}") from None


def cmd_simulate(cfg: AnalysisConfig, args) -> int:
    specs = list(cfg.streams)
    if args.generator:
        spec = {"generator": args.generator, "route": args.route or "A-B"}
        for key in ("start", "rate", "days", "duration_hours", "p", "lambda", "mu", "sigma", "n"):
            val = getattr(args, key.replace("lambda", "lam"))
            if val is not None:
                spec[key] = val
        if args.hourly_rates:
            spec["hourly_rates"] = [float(v) for v in args.hourly_rates.split(",")]
        specs = [spec]
    if not specs:
        raise ConfigError("nothing to simulate: give --generator or [[simulate.streams]]")
    streams = [_stream(s, derive_key(cfg.seed, "simulate", str(i))) for i, s in enumerate(specs)]
    records = merge_streams(streams)
    out = _write(cfg.out_dir / "stream.csv", write_canonical, records)
    _write(cfg.out_dir / "truth.json", lambda fh: write_truth(streams, fh, {"seed": cfg.seed}))
    print(f"{len(records)} records from {len(streams)} stream(s) -> {out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="TOML config file")
    p.add_argument("--seed", type=int, default=d, help="top-level random seed")
    p.add_argument("--alpha", type=float, default=d, help="significance level (default 0.05)")
    p.add_argument("--out-dir", default=d, help="output directory (env: AIRSTAT_OUT_DIR)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="airstat", description="Air-route traffic statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    inputs = _Parser(add_help=False)
    inputs.add_argument("inputs", nargs="*", help="input files (override [input] paths)")
    routes = _Parser(add_help=False)
    routes.add_argument("--route", action="append", dest="routes",
                        help="ENTRY-EXIT route, repeatable (default: all routes)")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("ingest", parents=[common, inputs], help="parse and canonicalize records")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("profile", parents=[common, inputs], help="monthly/hourly/weekday profile CSV")
    p.add_argument("--kind", choices=KINDS, default="hourly")
    p.add_argument("--route", help="restrict to one ENTRY-EXIT route")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("segment", parents=[common, inputs, routes], help="stationary periods")
    p.add_argument("--kind", choices=KINDS, default="hourly")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("intervals", parents=[common, inputs, routes], help="in-window intervals")
    p.add_argument("--window", help="clock window H0-H1 (default: segmented periods)")
    p.set_defaults(func=cmd_intervals)

    p = sub.add_parser("analyze", parents=[common, inputs, routes], help="full fit reports")
    p.add_argument("--gof-bins", type=int, help="chi-square bin count (default 10)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic stream")
    p.add_argument("--generator", choices=sorted(_STREAM_KEYS))
    p.add_argument("--route")
    p.add_argument("--start", help=f"ISO start time (default {DEFAULT_START})")
    p.add_argument("--rate", type=float, help="flights per hour (poisson, flat nhpp)")
    p.add_argument("--hourly-rates", help="24 comma-separated hourly rates (nhpp)")
    p.add_argument("--days", type=float)
    p.add_argument("--duration-hours", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_simulate)
    return parser


def _config(args) -> AnalysisConfig:
    over = {
        "seed": getattr(args, "seed", None),
        "alpha": getattr(args, "alpha", None),
        "out_dir": getattr(args, "out_dir", None),
        "inputs": getattr(args, "inputs", None) or None,
        "routes": getattr(args, "routes", None),
        "gof_bins": getattr(args, "gof_bins", None),
    }
    return resolve(getattr(args, "config", None), **over)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        return args.func(cfg, args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        print("try 'airstat --help'", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"airstat: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"airstat: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except io.UnsupportedOperation:
        traceback.print_exc()
        return EXIT_INTERNAL
    except OSError as exc:
        name = exc.filename or ""
        print(f"airstat: cannot access {name}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001 - last-resort handler maps to the internal-error code
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Inter-arrival intervals per route inside a stationary clock window.

Each day's window is handled on its own. The open spans from the window start
to the first arrival and from the last arrival to the window end are not
intervals: they are dropped from fitting and kept only as censoring
metadata. Minute-resolution ties give zero intervals, which are dropped and
counted.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import IO, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError
from .profile import StationaryPeriod
from .records import FlightRecord, RouteKey, route_key

_EPOCH_DATE = date(1970, 1, 1)


@dataclass(frozen=True)
class WindowStat:
    day: date  # date the window opens on
    n_arrivals: int
    lead: float  # window start -> first arrival, minutes
    trail: float  # last arrival -> window end, minutes
    interval_sum: float
    n_zero: int


@dataclass
class IntervalSample:
    route: RouteKey
    period: StationaryPeriod
    intervals: np.ndarray  # minutes, all > 0
    n_zero_dropped: int
    n_boundary_dropped: int
    window_minutes: int
    resolution: float = 0.0  # clock tick of the source times; 0 for exact times
    boundary_spans: list[tuple[float, float]] | None = None
    windows: list[WindowStat] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.intervals.size)

    def metadata(self) -> dict:
        return {
            "route": str(self.route),
            "period": self.period.to_dict(),
            "n_intervals": len(self),
            "n_zero_dropped": self.n_zero_dropped,
            "n_boundary_dropped": self.n_boundary_dropped,
            "n_windows": len(self.windows),
            "window_minutes": self.window_minutes,
            "resolution": self.resolution,
            "boundary_spans": [list(s) for s in self.boundary_spans] if self.boundary_spans is not None else None,
        }

    def write_csv(self, out: IO[str]) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["interval_minutes"])
        for v in self.intervals.tolist():
            w.writerow([repr(v)])

    def write_sidecar(self, out: IO[str]) -> None:
        json.dump(self.metadata(), out, indent=2, sort_keys=True)
        out.write("\n")


def _minutes(records: Sequence[FlightRecord]) -> np.ndarray:
    stamps = np.array([r.entry_time for r in records], dtype="datetime64[m]")
    return np.sort(stamps.astype(np.int64)).astype(np.float64)


def intervals_from_minutes(times: np.ndarray, route: RouteKey, period: StationaryPeriod,
                           keep_boundary: bool = True, resolution: float = 0.0) -> IntervalSample:
    """Interval extraction on sorted arrival times in minutes since the epoch.

    Times may be whole minutes (parsed records, ``resolution=1``) or exact
    (generator truth, ``resolution=0``).
    """
    if period.kind != "hourly":
        raise ConfigError(f"intervals need an hourly (clock-window) period, got {period.kind!r}")
    start = period.start_bin * 60
    length = period.n_hours * 60
    diffs, diff_occ, occ, lead, trail = kernels.window_intervals(times, start, length)

    zero = diffs == 0
    pos = np.searchsorted(occ, diff_occ)
    n_int = np.bincount(pos, minlength=occ.size)
    sums = np.bincount(pos, weights=diffs, minlength=occ.size)
    zeros = np.bincount(pos[zero], minlength=occ.size)
    windows = [
        WindowStat(
            day=_EPOCH_DATE + timedelta(days=int(w)),
            n_arrivals=int(k) + 1,
            lead=float(a),
            trail=float(b),
            interval_sum=float(s),
            n_zero=int(z),
        )
        for w, k, a, b, s, z in zip(occ.tolist(), n_int.tolist(), lead.tolist(), trail.tolist(),
                                    sums.tolist(), zeros.tolist())
    ]
    return IntervalSample(
        route=RouteKey(*route),
        period=period,
        intervals=diffs[~zero],
        n_zero_dropped=int(zero.sum()),
        n_boundary_dropped=2 * int(occ.size),
        window_minutes=length,
        resolution=float(resolution),
        boundary_spans=list(zip(lead.tolist(), trail.tolist())) if keep_boundary else None,
        windows=windows,
    )


def extract_intervals(records: Sequence[FlightRecord], route: RouteKey, period: StationaryPeriod,
                      keep_boundary: bool = True) -> IntervalSample:
    """Intervals between consecutive entries on ``route`` inside the daily
    clock window of ``period`` (minute resolution)."""
    route = RouteKey(*route)
    times = _minutes([r for r in records if route_key(r) == route])
    return intervals_from_minutes(times, route, period, keep_boundary, resolution=1.0)


def hourly_window(start_hour: int, end_hour: int) -> StationaryPeriod:
    """A bare clock window start_hour..end_hour (inclusive) as a period."""
    if not (0 <= start_hour < 24 and 0 <= end_hour < 24):
        raise ConfigError("hours must be in 0..23")
    return StationaryPeriod("hourly", start_hour, end_hour, 0.0, 0, 1.0, 0.0)

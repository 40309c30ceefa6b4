"""Traffic intensity profiles and stationary-period segmentation.

Flight counts are binned by calendar month, hour of day or weekday, each bin
carrying its exposure (observed hours). A run of adjacent bins is treated as
stationary when a chi-square test cannot tell its counts apart from counts
proportional to exposure.
"""
from __future__ import annotations

import calendar
import csv
import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import IO, Iterable, Sequence

from .chisq import chi2_sf
from .errors import ConfigError, DataError, ExpectedCountError
from .records import FlightRecord, RouteKey, route_key

MONTH_LABELS = tuple(calendar.month_abbr[1:])
WEEKDAY_LABELS = tuple(calendar.day_abbr)
KINDS = ("monthly", "hourly", "weekday")


@dataclass(frozen=True)
class Bin:
    label: str
    count: int
    exposure: float  # hours

    @property
    def rate(self) -> float:
        return self.count / self.exposure if self.exposure > 0 else 0.0


@dataclass(frozen=True)
class BinProfile:
    kind: str
    bins: tuple[Bin, ...]

    def __len__(self) -> int:
        return len(self.bins)

    @property
    def counts(self) -> list[int]:
        return [b.count for b in self.bins]

    @property
    def exposures(self) -> list[float]:
        return [b.exposure for b in self.bins]

    def write_csv(self, out: IO[str]) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["label", "count", "exposure", "rate"])
        for b in self.bins:
            w.writerow([b.label, b.count, _fmt(b.exposure), _fmt(b.rate)])


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True)
class HomogeneityResult:
    statistic: float
    dof: int
    p_value: float
    homogeneous: bool


@dataclass(frozen=True)
class StationaryPeriod:
    """Adjacent bins start_bin..end_bin (inclusive).

    For hourly periods ``start_bin > end_bin`` means the period wraps past
    midnight.
    """

    kind: str
    start_bin: int
    end_bin: int
    intensity: float  # flights per hour
    n_events: int
    p_value: float
    exposure: float

    def bins(self, n_bins: int) -> list[int]:
        if self.start_bin <= self.end_bin:
            return list(range(self.start_bin, self.end_bin + 1))
        return list(range(self.start_bin, n_bins)) + list(range(0, self.end_bin + 1))

    @property
    def n_hours(self) -> int:
        """Clock-window length in hours (hourly periods)."""
        return (self.end_bin - self.start_bin) % 24 + 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "start": self.start_bin,
            "end": self.end_bin,
            "intensity": self.intensity,
            "n_events": self.n_events,
            "p_value": self.p_value,
        }


def _date_span(records: Sequence[FlightRecord]) -> tuple[date, date] | None:
    if not records:
        return None
    days = [r.entry_time.date() for r in records]
    return min(days), max(days)


def monthly_profile(records: Sequence[FlightRecord]) -> BinProfile:
    """Counts per calendar month; exposure is the hours of each month in the
    whole months spanned by the data."""
    span = _date_span(records)
    if span is None:
        return BinProfile("monthly", ())
    (y0, m0), (y1, m1) = (span[0].year, span[0].month), (span[1].year, span[1].month)
    exposure = [0.0] * 12
    order: list[int] = []
    y, m = y0, m0
    while (y, m) <= (y1, m1):
        exposure[m - 1] += 24.0 * calendar.monthrange(y, m)[1]
        if m - 1 not in order:
            order.append(m - 1)
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    if len(order) == 12:
        order = list(range(12))
    counts = [0] * 12
    for r in records:
        counts[r.entry_time.month - 1] += 1
    return BinProfile("monthly", tuple(Bin(MONTH_LABELS[i], counts[i], exposure[i]) for i in order))


def hourly_profile(records: Sequence[FlightRecord], route: RouteKey | None = None) -> BinProfile:
    """Counts per hour of day. Each observed day adds one hour of exposure to
    every bin; the observed days are those spanned by all ``records``, so a
    route filter does not shrink the exposure."""
    span = _date_span(records)
    days = (span[1] - span[0]).days + 1 if span else 0
    counts = [0] * 24
    for r in records:
        if route is None or route_key(r) == route:
            counts[r.entry_time.hour] += 1
    return BinProfile("hourly", tuple(Bin(f"{h:02d}", counts[h], float(days)) for h in range(24)))


def weekday_profile(records: Sequence[FlightRecord]) -> BinProfile:
    span = _date_span(records)
    exposure = [0.0] * 7
    if span:
        n_days = (span[1] - span[0]).days + 1
        full, rest = divmod(n_days, 7)
        for i in range(7):
            exposure[i] = 24.0 * full
        for k in range(rest):
            exposure[(span[0] + timedelta(days=k)).weekday()] += 24.0
    counts = [0] * 7
    for r in records:
        counts[r.entry_time.weekday()] += 1
    return BinProfile("weekday", tuple(Bin(WEEKDAY_LABELS[i], counts[i], exposure[i]) for i in range(7)))


def build_profile(kind: str, records: Sequence[FlightRecord], route: RouteKey | None = None) -> BinProfile:
    if kind == "hourly":
        return hourly_profile(records, route)
    if route is not None:
        records = [r for r in records if route_key(r) == route]
    if kind == "monthly":
        return monthly_profile(records)
    if kind == "weekday":
        return weekday_profile(records)
    raise ConfigError(f"unknown profile kind {kind!r}; expected one of {KINDS}")


def homogeneity_test(bins: Sequence[tuple[float, float]], alpha: float = 0.05,
                     min_expected: float = 5.0) -> HomogeneityResult:
    """Chi-square test that counts are proportional to exposures.

    ``bins`` holds (count, exposure) pairs. Raises ``ExpectedCountError``
    listing the offending bins when an expected count is below
    ``min_expected``; use :func:`pool_bins` first.
    """
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    if len(bins) < 2:
        raise DataError("homogeneity test needs at least 2 bins")
    counts = [float(c) for c, _ in bins]
    expos = [float(e) for _, e in bins]
    if any(e <= 0 for e in expos):
        raise DataError("all exposures must be positive")
    total = sum(counts)
    if total < 1:
        raise DataError("homogeneity test needs at least one event")
    t_exp = sum(expos)
    expected = [total * e / t_exp for e in expos]
    bad = [i for i, e in enumerate(expected) if e < min_expected]
    if bad:
        raise ExpectedCountError(bad, expected, min_expected)
    stat = sum((o - e) ** 2 / e for o, e in zip(counts, expected))
    dof = len(bins) - 1
    p = chi2_sf(stat, dof)
    return HomogeneityResult(stat, dof, p, p >= alpha)


def pool_bins(bins: Sequence[tuple[float, float]], min_expected: float = 5.0) -> list[tuple[float, float]]:
    """Merge runs of adjacent bins until every group's expected count reaches
    ``min_expected``; a short tail is folded into the last group."""
    total = sum(c for c, _ in bins)
    t_exp = sum(e for _, e in bins)
    if total <= 0 or t_exp <= 0:
        return [(total, t_exp)]
    need = min_expected * t_exp / total  # exposure giving the minimum expected count
    groups: list[list[float]] = []
    cur_c = cur_e = 0.0
    for c, e in bins:
        cur_c += c
        cur_e += e
        if cur_e >= need * (1 - 1e-12):
            groups.append([cur_c, cur_e])
            cur_c = cur_e = 0.0
    if cur_e > 0 or cur_c > 0:
        if groups:
            groups[-1][0] += cur_c
            groups[-1][1] += cur_e
        else:
            groups.append([cur_c, cur_e])
    return [(c, e) for c, e in groups]


def period_test(bins: Sequence[tuple[float, float]], alpha: float, min_expected: float) -> float:
    """p-value of the pooled homogeneity test; 1.0 when pooling leaves a
    single group (too little data to detect any difference)."""
    if sum(c for c, _ in bins) < 1:
        return 1.0
    pooled = pool_bins(bins, min_expected)
    if len(pooled) < 2:
        return 1.0
    return homogeneity_test(pooled, alpha, min_expected).p_value


def _make_period(profile: BinProfile, idx: list[int], alpha: float, min_expected: float) -> StationaryPeriod:
    sel = [(profile.bins[i].count, profile.bins[i].exposure) for i in idx]
    n = int(sum(c for c, _ in sel))
    expo = float(sum(e for _, e in sel))
    return StationaryPeriod(
        kind=profile.kind,
        start_bin=idx[0],
        end_bin=idx[-1],
        intensity=n / expo if expo > 0 else 0.0,
        n_events=n,
        p_value=period_test(sel, alpha, min_expected),
        exposure=expo,
    )


def segment_stationary(profile: BinProfile, alpha: float = 0.05, min_expected: float = 5.0,
                       merge_adjacent: bool = True) -> list[StationaryPeriod]:
    """Split a profile into runs of bins with homogeneous rate.

    Greedy left to right: a run absorbs the next bin while the pooled
    chi-square test over the run still accepts at ``alpha``. Hourly profiles
    are circular, so the last and first runs are then merged if their union
    accepts. With ``merge_adjacent`` a final pass repeatedly joins the
    adjacent pair whose union has the largest accepting p-value.
    """
    if profile.kind == "weekday":
        raise ConfigError("weekday profiles are diagnostic only and are not segmented")
    if not 0 < alpha < 1:
        raise ConfigError("alpha must be in (0, 1)")
    nb = len(profile)
    if nb == 0:
        raise DataError("cannot segment an empty profile")
    pairs = [(b.count, b.exposure) for b in profile.bins]

    def accepts(idx: list[int]) -> bool:
        return period_test([pairs[i] for i in idx], alpha, min_expected) >= alpha

    groups: list[list[int]] = [[0]]
    for i in range(1, nb):
        if accepts(groups[-1] + [i]):
            groups[-1].append(i)
        else:
            groups.append([i])

    circular = profile.kind == "hourly"
    if circular and len(groups) > 1 and accepts(groups[-1] + groups[0]):
        groups = groups[1:-1] + [groups[-1] + groups[0]]

    if merge_adjacent:
        while len(groups) > 1:
            best = None
            m = len(groups)
            n_pairs = m if (circular and m > 2) else m - 1
            for j in range(n_pairs):
                k = (j + 1) % m
                p = period_test([pairs[i] for i in groups[j] + groups[k]], alpha, min_expected)
                if p >= alpha and (best is None or p > best[0]):
                    best = (p, j, k)
            if best is None:
                break
            _, j, k = best
            joined = groups[j] + groups[k]
            groups = [g for t, g in enumerate(groups) if t not in (j, k)]
            groups.insert(min(j, len(groups)), joined)

    return [_make_period(profile, g, alpha, min_expected) for g in groups]


def change_points(periods: Iterable[StationaryPeriod]) -> list[int]:
    """Bins at which a new period starts (sorted)."""
    ps = list(periods)
    if len(ps) < 2:
        return []
    return sorted(p.start_bin for p in ps)

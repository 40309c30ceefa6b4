"""Seeded synthetic arrival streams used as ground truth for the estimators.

All randomness comes from :mod:`airstat.rng` keyed by (seed, generator,
route, purpose), so a stream is a pure function of its arguments. Exact event
times are kept on the stream; minute truncation happens only when records
are materialized.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from typing import IO, Sequence

import numpy as np

from . import kernels
from .distfit import MixtureParams
from .errors import ConfigError
from .records import FlightRecord, RouteKey, write_canonical
from .rng import ALGORITHM, derive_key

_EPOCH = np.datetime64("1970-01-01T00:00", "m")


@dataclass(frozen=True)
class IntensityProfile:
    """Hour-of-day arrival rates (flights/hour), optionally scaled per month."""

    hourly_rates: tuple[float, ...]
    monthly_multipliers: tuple[float, ...] | None = None

    def __post_init__(self):
        rates = tuple(float(r) for r in self.hourly_rates)
        if len(rates) != 24:
            raise ConfigError(f"need 24 hourly rates, got {len(rates)}")
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ConfigError("hourly rates must be finite and non-negative")
        object.__setattr__(self, "hourly_rates", rates)
        if self.monthly_multipliers is not None:
            mult = tuple(float(m) for m in self.monthly_multipliers)
            if len(mult) != 12 or any(not math.isfinite(m) or m < 0 for m in mult):
                raise ConfigError("need 12 finite non-negative monthly multipliers")
            object.__setattr__(self, "monthly_multipliers", mult)

    @classmethod
    def flat(cls, rate: float) -> "IntensityProfile":
        return cls((rate,) * 24)

    @classmethod
    def two_level(cls, high: float, low: float, start_hour: int, end_hour: int) -> "IntensityProfile":
        """``high`` for hours start..end inclusive, ``low`` elsewhere."""
        return cls(tuple(high if start_hour <= h <= end_hour else low for h in range(24)))

    @property
    def multipliers(self) -> tuple[float, ...]:
        return self.monthly_multipliers or (1.0,) * 12

    @property
    def peak(self) -> float:
        return max(self.hourly_rates) * max(self.multipliers)

    def to_dict(self) -> dict:
        return {"hourly_rates": list(self.hourly_rates),
                "monthly_multipliers": list(self.monthly_multipliers) if self.monthly_multipliers else None}


@dataclass
class GeneratedStream:
    """Synthetic arrivals on one route.

    ``times`` are exact event times in minutes after ``start``; ``gaps`` holds
    the exact inter-arrival draws for renewal streams.
    """

    route: RouteKey
    start: datetime
    times: np.ndarray
    truth: dict
    seed: int
    gaps: np.ndarray | None = None
    code_prefix: str = "SIM"

    @cached_property
    def records(self) -> list[FlightRecord]:
        return materialize(self.route, self.start, self.times, self.code_prefix)

    def __len__(self) -> int:
        return int(self.times.size)

    def epoch_minutes(self) -> np.ndarray:
        """Exact event times as minutes since 1970-01-01T00:00."""
        base = float((_minute_start(self.start) - _EPOCH).astype(np.int64))
        return base + self.times

    def sidecar(self) -> dict:
        return {"algorithm": ALGORITHM, "seed": self.seed, "route": str(self.route),
                "start": self.start.isoformat(timespec="minutes"), "n_events": len(self),
                **self.truth}


def _minute_start(start: datetime) -> np.datetime64:
    return np.datetime64(start.replace(second=0, microsecond=0, tzinfo=None), "m")


def materialize(route: RouteKey, start: datetime, times: np.ndarray,
                code_prefix: str = "SIM") -> list[FlightRecord]:
    stamps = (_minute_start(start) + np.floor(times).astype(np.int64)).astype(datetime)
    return [
        FlightRecord(
            registration_date=ts.date(),
            entry_point=route.entry_point,
            exit_point=route.exit_point,
            entry_time=ts,
            flight_code=f"{code_prefix}{i:07d}",
        )
        for i, ts in enumerate(stamps.tolist())
    ]


def _poisson_times(key: int, rate: float, horizon: float) -> np.ndarray:
    """Event times in [0, horizon) of a rate-``rate`` Poisson process."""
    if rate <= 0 or horizon <= 0:
        return np.empty(0)
    chunks = []
    t0, drawn = 0.0, 0
    expected = rate * horizon
    chunk = int(expected + 6.0 * math.sqrt(expected) + 16)
    while True:
        gaps = kernels.exponentials(key, drawn, chunk, rate)
        t = t0 + np.cumsum(gaps)
        drawn += chunk
        if t[-1] >= horizon:
            chunks.append(t[t < horizon])
            break
        chunks.append(t)
        t0 = float(t[-1])
        chunk = max(chunk // 4, 64)
    return np.concatenate(chunks)


def gen_homogeneous_poisson(rate: float, start: datetime, duration: float,
                            route: RouteKey, seed: int) -> GeneratedStream:
    """Poisson arrivals at ``rate`` per hour over ``duration`` hours."""
    if rate <= 0 or not math.isfinite(rate):
        raise ConfigError("rate must be positive")
    if duration < 0:
        raise ConfigError("duration must be non-negative")
    key = derive_key(seed, "poisson", str(route))
    hours = _poisson_times(key, rate, duration)
    truth = {"generator": "homogeneous_poisson", "rate_per_hour": rate, "duration_hours": duration}
    return GeneratedStream(RouteKey(*route), start, hours * 60.0, truth, seed)


def gen_nhpp(profile: IntensityProfile, start: datetime, days: int,
             route: RouteKey, seed: int) -> GeneratedStream:
    """Nonhomogeneous Poisson arrivals by thinning a peak-rate stream."""
    if days < 0:
        raise ConfigError("days must be non-negative")
    truth = {"generator": "nhpp", "days": days, **profile.to_dict()}
    lam_max = profile.peak
    route = RouteKey(*route)
    if lam_max == 0 or days == 0:
        return GeneratedStream(route, start, np.empty(0), truth, seed)
    kc = derive_key(seed, "nhpp", str(route), "candidates")
    ka = derive_key(seed, "nhpp", str(route), "accept")
    cand = _poisson_times(kc, lam_max, 24.0 * days) * 60.0
    abs_min = (_minute_start(start) - _EPOCH).astype(np.int64) + np.floor(cand).astype(np.int64)
    hours = (abs_min // 60) % 24
    months = (abs_min.astype("datetime64[m]").astype("datetime64[M]").astype(np.int64)) % 12
    u = kernels.uniforms(ka, 0, cand.size)
    keep = kernels.thinning_mask(hours, months, u, np.asarray(profile.hourly_rates),
                                 np.asarray(profile.multipliers), lam_max)
    return GeneratedStream(route, start, cand[keep], truth, seed)


def gen_mixture_renewal(params: MixtureParams, n: int, start: datetime,
                        route: RouteKey, seed: int) -> GeneratedStream:
    """Renewal stream whose gaps (minutes) follow the exponential + normal mix.

    The normal draws are resampled until positive.
    """
    if n < 0:
        raise ConfigError("n must be non-negative")
    if params.p < 1 and params.mu <= -5.0 * params.sigma:
        raise ConfigError("normal component has almost no positive mass")
    route = RouteKey(*route)
    keys = [derive_key(seed, "mixture", str(route), part) for part in ("choice", "exp", "norm")]
    gaps = kernels.mixture_gaps(*keys, n, params.p, params.lam, params.mu, params.sigma)
    truth = {"generator": "mixture_renewal", "n": n, **params.to_dict()}
    return GeneratedStream(route, start, np.cumsum(gaps), truth, seed, gaps=gaps)


def merge_streams(streams: Sequence[GeneratedStream]) -> list[FlightRecord]:
    """Records of several streams in global entry-time order (stable)."""
    recs = [r for s in streams for r in s.records]
    recs.sort(key=lambda r: r.entry_time)
    return recs


def write_stream_csv(records: Sequence[FlightRecord], out: IO[str]) -> None:
    write_canonical(records, out)


def write_truth(streams: Sequence[GeneratedStream], out: IO[str], extra: dict | None = None) -> None:
    doc = {"algorithm": ALGORITHM, "streams": [s.sidecar() for s in streams]}
    if extra:
        doc.update(extra)
    json.dump(doc, out, indent=2, sort_keys=True)
    out.write("\n")

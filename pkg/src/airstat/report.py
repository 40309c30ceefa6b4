"""Per-(route, period) analysis and report serialization.

A report runs: hourly profile -> stationary periods -> in-window intervals ->
exponential fit + chi-square GOF, and only when the exponential is rejected at
alpha, the method-of-moments mixture fit and its own GOF.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO, Any, Sequence

import numpy as np

from .config import AnalysisConfig
from .distfit import (
    ExponentialFit,
    GofResult,
    MixtureFit,
    MixtureParams,
    chi_square_gof,
    fit_exponential,
    fit_mixture_mom,
    mixture_cdf,
    rounded_cdf,
)
from .errors import InsufficientDataError
from .intervals import IntervalSample, extract_intervals
from .profile import BinProfile, StationaryPeriod, hourly_profile, segment_stationary
from .records import FlightRecord, RouteKey

MAX_HIST_BINS = 100


def clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return clean(obj.item())
    return obj


def dump_json(doc: Any, out: IO[str]) -> None:
    json.dump(clean(doc), out, indent=2, sort_keys=True, allow_nan=False)
    out.write("\n")


def period_id(period: StationaryPeriod) -> str:
    prefix = "h" if period.kind == "hourly" else "m"
    return f"{prefix}{period.start_bin:02d}-{period.end_bin:02d}"


def fit_json(model: str, params: dict, n: int, gof: GofResult | None,
             residual_norm: float | None = None) -> dict:
    return {
        "model": model,
        "params": params,
        "n": n,
        "residual_norm": residual_norm,
        "loglik": None,
        "gof": gof.to_dict() if gof is not None else None,
    }


@dataclass
class PeriodAnalysis:
    route: RouteKey
    period: StationaryPeriod
    sample: IntervalSample | None
    status: str  # "fitted" or "skipped"
    reason: str | None = None
    exp_fit: ExponentialFit | None = None
    exp_gof: GofResult | None = None
    mix_fit: MixtureFit | None = None
    mix_params: MixtureParams | None = None  # root reported (see analyze_period)
    mix_residual: float | None = None
    mix_gof: GofResult | None = None
    root_gofs: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self, alpha: float) -> dict:
        fits = []
        decision: dict[str, Any] = {"alpha": alpha, "exponential_accepted": None,
                                    "mixture_fitted": False, "mixture_accepted": None}
        if self.exp_fit is not None:
            fits.append(fit_json("exponential", {"lambda": self.exp_fit.lam}, self.exp_fit.n,
                                 self.exp_gof))
            if self.exp_gof is not None:
                decision["exponential_accepted"] = self.exp_gof.p_value >= alpha
        mixture = None
        if self.mix_fit is not None:
            fits.append(fit_json("exp_normal_mixture", self.mix_params.to_dict(),
                                 len(self.sample), self.mix_gof, self.mix_residual))
            decision["mixture_fitted"] = True
            if self.mix_gof is not None:
                decision["mixture_accepted"] = self.mix_gof.p_value >= alpha
            mixture = {
                "converged": self.mix_fit.converged,
                "starts_tried": self.mix_fit.starts_tried,
                "degenerate": self.mix_fit.degenerate,
                "empirical_moments": list(self.mix_fit.empirical_moments),
                "min_residual_root": self.mix_fit.params.to_dict(),
                "roots": self.root_gofs,
                "notes": list(self.mix_fit.notes),
            }
        meta = self.sample.metadata() if self.sample is not None else None
        if meta is not None:
            meta.pop("boundary_spans", None)
            meta.pop("period", None)
            meta.pop("route", None)
        return {
            "route": str(self.route),
            "period": self.period.to_dict(),
            "status": self.status,
            "reason": self.reason,
            "intervals": meta,
            "fits": fits,
            "decision": decision,
            "mixture_diagnostics": mixture,
            "notes": list(self.notes),
        }


def route_records(records: Sequence[FlightRecord], route: RouteKey) -> list[FlightRecord]:
    return [r for r in records if (r.entry_point, r.exit_point) == route]


def segment_route(records: Sequence[FlightRecord], route: RouteKey,
                  cfg: AnalysisConfig) -> tuple[BinProfile, list[StationaryPeriod]]:
    prof = hourly_profile(records, route)
    periods = segment_stationary(prof, cfg.alpha, cfg.min_expected, cfg.merge_adjacent)
    return prof, periods


def analyze_period(records: Sequence[FlightRecord], route: RouteKey, period: StationaryPeriod,
                   cfg: AnalysisConfig) -> PeriodAnalysis:
    sample = extract_intervals(records, route, period, keep_boundary=False)
    out = PeriodAnalysis(route, period, sample, status="fitted")
    if len(sample) < cfg.min_intervals:
        out.status = "skipped"
        out.reason = f"{len(sample)} intervals, need at least {cfg.min_intervals}"
        return out
    out.exp_fit = fit_exponential(sample)
    try:
        out.exp_gof = chi_square_gof(sample, out.exp_fit, cfg.gof_bins, cfg.min_expected)
    except InsufficientDataError as exc:
        out.status = "skipped"
        out.reason = f"exponential GOF not possible: {exc}"
        return out
    if out.exp_gof.p_value >= cfg.alpha:
        out.notes.append("exponential accepted; mixture step not run")
        return out
    try:
        out.mix_fit = fit_mixture_mom(sample, cfg.solver)
    except InsufficientDataError as exc:
        out.notes.append(f"mixture step skipped: {exc}")
        return out
    # every root within tolerance matches the moments equally well; report
    # the one the chi-square test favours, the minimal-residual one on ties
    roots = out.mix_fit.roots or [(out.mix_fit.params, out.mix_fit.residual_norm)]
    best = None
    for params, resid in roots:
        try:
            gof = chi_square_gof(sample, params, cfg.gof_bins, cfg.min_expected)
        except InsufficientDataError as exc:
            out.root_gofs.append({"params": params.to_dict(), "residual_norm": resid, "gof": None})
            out.notes.append(f"mixture GOF not possible: {exc}")
            continue
        out.root_gofs.append({"params": params.to_dict(), "residual_norm": resid, "gof": gof.to_dict()})
        if best is None or gof.p_value > best[2].p_value:
            best = (params, resid, gof)
    if best is None:
        out.mix_params, out.mix_residual = roots[0]
    else:
        out.mix_params, out.mix_residual, out.mix_gof = best
    if len(roots) > 1:
        out.notes.append(f"{len(roots)} moment roots; reported the one with the largest GOF p-value")
    return out


def histogram_rows(analysis: PeriodAnalysis) -> list[list[str]]:
    """Equal-width histogram of the intervals with expected counts per model.

    Columns: lower, upper, observed, expected_exponential, expected_mixture.
    Bins are half-open [lower, upper). For clock-rounded samples the edges sit
    on whole ticks and expectations come from the rounded model conditioned
    on positive intervals.
    """
    x = analysis.sample.intervals
    if x.size == 0:
        return []
    r = analysis.sample.resolution
    top = float(x.max())
    width = float(np.diff(np.histogram_bin_edges(x, bins="fd")[:2])[0]) if x.size > 1 else top
    if r > 0:
        step = max(1, round(max(width, top / MAX_HIST_BINS) / r)) * r
        edges = np.arange(r, top + step + r / 2, step)
    else:
        nb = int(min(MAX_HIST_BINS, max(5, math.ceil(top / width)))) if width > 0 else 5
        edges = np.linspace(0.0, top, nb + 1)
        edges[-1] = np.nextafter(top, np.inf)  # keep the maximum inside the last bin
    nb = edges.size - 1
    observed, _ = np.histogram(x, bins=edges)
    n = x.size

    def expected(model) -> list[str]:
        if r > 0:
            h = np.asarray(rounded_cdf(edges, model, r))
            probs = np.diff(h) / (1.0 - h[0])
        else:
            probs = np.diff(np.asarray(mixture_cdf(edges, _as_mixture(model))))
        return [repr(float(v)) for v in n * probs]

    exp_cols = expected(analysis.exp_fit) if analysis.exp_fit is not None else [""] * nb
    mix_cols = expected(analysis.mix_params) if analysis.mix_params is not None else [""] * nb
    return [
        [repr(float(edges[i])), repr(float(edges[i + 1])), str(int(observed[i])), exp_cols[i], mix_cols[i]]
        for i in range(nb)
    ]


def _as_mixture(model) -> MixtureParams:
    if isinstance(model, ExponentialFit):
        return MixtureParams(1.0, model.lam, 0.0, 1.0)
    return model


def write_histogram(analysis: PeriodAnalysis, out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["lower", "upper", "observed", "expected_exponential", "expected_mixture"])
    w.writerows(histogram_rows(analysis))


def write_gof_bins(analysis: PeriodAnalysis, out: IO[str]) -> None:
    """The chi-square bins actually tested, one row per (model, bin)."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["model", "lower", "upper", "observed", "expected"])
    for name, gof in (("exponential", analysis.exp_gof), ("exp_normal_mixture", analysis.mix_gof)):
        if gof is None:
            continue
        for lo, hi, ob, ex in gof.bins:
            w.writerow([name, repr(lo), repr(hi), ob, repr(ex)])

"""Interval distribution fitting.

Exponential fit, chi-square goodness of fit, and the exponential + normal
mixture

    f(x) = p * lam * exp(-lam * x) * [x >= 0]
         + (1 - p) * exp(-(x - mu)**2 / (2 sigma**2)) / (sqrt(2 pi) sigma)

estimated by the method of moments: the first four raw moments of the model
are equated to the sample's and the 4x4 system is solved numerically as a
least-squares problem over the constrained parameter domain.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from . import kernels
from .chisq import chi2_sf
from .errors import ConfigError, DataError, InsufficientDataError
from .simplex import nelder_mead

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MixtureParams:
    """Mixture parameters; ``p`` weights the exponential component.

    ``p`` may sit on the closed interval so the pure components can be
    expressed; fitted values always lie strictly inside.
    """

    p: float
    lam: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ConfigError(f"p must be in [0, 1], got {self.p}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ConfigError("mu must be finite")

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda": self.lam, "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class ExponentialFit:
    lam: float
    n: int
    mean: float

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "n": self.n, "mean": self.mean}


@dataclass
class GofResult:
    statistic: float
    dof: int
    p_value: float
    bins: list[tuple[float, float, int, float]]

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "dof": self.dof, "p_value": self.p_value}


@dataclass
class MixtureFit:
    params: MixtureParams
    residual_norm: float
    empirical_moments: tuple[float, float, float, float]
    converged: bool
    starts_tried: int
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)
    # distinct roots within tolerance, best residual first (includes ``params``)
    roots: list[tuple[MixtureParams, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "roots": [{"params": r.to_dict(), "residual_norm": f} for r, f in self.roots],
            "residual_norm": self.residual_norm,
            "empirical_moments": list(self.empirical_moments),
            "converged": self.converged,
            "starts_tried": self.starts_tried,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 2000
    min_n: int = 50
    p_grid: tuple[float, ...] = (0.2, 0.5, 0.8)
    lam_factors: tuple[float, ...] = (1.0, 4.0)  # times 1 / m1
    mu_factors: tuple[float, ...] = (1.0, 2.0)  # times m1
    sigma_fractions: tuple[float, ...] = (0.1, 0.5)  # times sample std
    degenerate_p: float = 1e-3

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1 or self.min_n < 4:
            raise ConfigError("solver settings out of range")


def _as_array(sample) -> np.ndarray:
    x = getattr(sample, "intervals", sample)
    return np.asarray(x, dtype=np.float64)


def empirical_raw_moments(sample, order: int) -> float:
    """Sample raw moment (1/n) * sum(x**order) for order 1..4."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"order must be 1..4, got {order}")
    x = _as_array(sample)
    if x.size == 0:
        raise InsufficientDataError("raw moment", 1, 0)
    return kernels.raw_moments(x)[order - 1]


def raw_moments(sample) -> tuple[float, float, float, float]:
    x = _as_array(sample)
    if x.size == 0:
        raise InsufficientDataError("raw moments", 1, 0)
    return tuple(kernels.raw_moments(x))


def _resolution(sample, resolution: float | None) -> tuple[float, int]:
    """Clock resolution of the sample and the zero intervals dropped from it."""
    r = float(getattr(sample, "resolution", 0.0) if resolution is None else resolution)
    if r < 0 or not math.isfinite(r):
        raise ConfigError("resolution must be a finite non-negative number")
    n_zero = int(getattr(sample, "n_zero_dropped", 0)) if r > 0 else 0
    return r, n_zero


def fit_exponential(sample, resolution: float | None = None) -> ExponentialFit:
    """Rate estimate 1 / mean interval.

    For clock-rounded intervals (``resolution`` > 0, taken from the sample
    when not given) the zero intervals dropped during extraction are counted
    back: differences of floored times have the same mean as the true gaps
    only when the zeros are included.
    """
    x = _as_array(sample)
    if x.size < 2:
        raise InsufficientDataError("exponential fit (positive intervals)", 2, int(x.size))
    if np.any(x <= 0):
        raise DataError("exponential fit requires positive intervals")
    _, n_zero = _resolution(sample, resolution)
    mean = float(x.sum()) / (x.size + n_zero)
    return ExponentialFit(lam=1.0 / mean, n=int(x.size), mean=mean)


def mixture_density(x, params: MixtureParams):
    xa = np.asarray(x, dtype=np.float64)
    p, lam, mu, s = params.p, params.lam, params.mu, params.sigma
    expo = np.where(xa >= 0, lam * np.exp(-lam * np.maximum(xa, 0.0)), 0.0)
    norm = np.exp(-0.5 * ((xa - mu) / s) ** 2) / (SQRT_2PI * s)
    out = p * expo + (1.0 - p) * norm
    return float(out) if out.ndim == 0 else out


def mixture_cdf(x, params: MixtureParams):
    xa = np.asarray(x, dtype=np.float64)
    expo = np.where(xa > 0, -np.expm1(-params.lam * np.maximum(xa, 0.0)), 0.0)
    out = params.p * expo + (1.0 - params.p) * ndtr((xa - params.mu) / params.sigma)
    return float(out) if out.ndim == 0 else out


def mixture_theoretical_moments(params: MixtureParams) -> tuple[float, float, float, float]:
    """First four raw moments of the exponential + normal mixture."""
    return _moments(params.p, params.lam, params.mu, params.sigma)


def _moments(p, lam, mu, s):
    q = 1.0 - p
    s2 = s * s
    mu2 = mu * mu
    return (
        p * (1.0 / lam) + q * mu,
        p * (2.0 / lam**2) + q * (s2 + mu2),
        p * (6.0 / lam**3) + q * (3.0 * mu * s2 + mu * mu2),
        p * (24.0 / lam**4) + q * (3.0 * s2 * s2 + 6.0 * mu2 * s2 + mu2 * mu2),
    )


def _rounded_moments(p, lam, mu, s, r):
    """Raw moments of gaps observed between times floored to ticks of ``r``.

    Given a true gap g the observed gap is r*floor(g/r) or one tick more,
    with mean g: its moments are those of the piecewise-linear interpolant of
    x**k. For the exponential this is exact (a geometric law on ticks); for
    the normal the uniform-phase corrections are used, accurate once sigma is
    about a tick or more. Zero gaps are included.
    """
    if r <= 0:
        return _moments(p, lam, mu, s)
    a = lam * r
    w = -math.expm1(-a)  # 1 - q
    qq = 1.0 - w
    base = w * w / a
    polys = (1.0, 1.0 + qq, 1.0 + 4.0 * qq + qq * qq, 1.0 + 11.0 * qq + 11.0 * qq * qq + qq**3)
    expo = [base * r ** (k + 1) * polys[k] / w ** (k + 2) for k in range(4)]
    _, g2, g3, g4 = _moments(0.0, 1.0, mu, s)
    r2 = r * r
    norm = (mu, g2 + r2 / 6.0, g3 + r2 * mu / 2.0, g4 + r2 * g2 + r2 * r2 / 15.0)
    q = 1.0 - p
    return tuple(p * e + q * n for e, n in zip(expo, norm))


def _unpack(z):
    # logistic for p, exp for lam and sigma; clipping keeps exp() finite
    a, b, mu, c = z
    p = 1.0 / (1.0 + math.exp(-max(min(a, 700.0), -700.0)))
    return p, math.exp(max(min(b, 700.0), -700.0)), mu, math.exp(max(min(c, 700.0), -700.0))


def _pack(p, lam, mu, s):
    return np.array([math.log(p / (1.0 - p)), math.log(lam), mu, math.log(s)])


def moment_residual(params: MixtureParams, target: Sequence[float]) -> float:
    """Sum over orders of squared relative moment mismatch."""
    model = mixture_theoretical_moments(params)
    return float(sum(((m - t) / t) ** 2 for m, t in zip(model, target)))


def _start_grid(m1: float, sd: float, config: SolverConfig):
    for p, lf, mf, sf in itertools.product(
        config.p_grid, config.lam_factors, config.mu_factors, config.sigma_fractions
    ):
        yield p, lf / m1, mf * m1, max(sf * sd, 1e-6 * m1)


def solve_moment_system(moments: Sequence[float], config: SolverConfig | None = None,
                        sd: float | None = None, resolution: float = 0.0) -> MixtureFit:
    """Find mixture parameters whose raw moments match ``moments`` (orders 1..4).

    Runs a Nelder-Mead search from every point of a fixed start grid (in
    units of the first moment) and keeps the smallest residual. The best
    candidate is returned even if it misses ``config.tol``; check
    ``converged``. With ``resolution`` > 0 the moments are those of
    clock-rounded gaps (zeros included) and are matched against the rounded
    model.
    """
    config = config or SolverConfig()
    emp = tuple(float(v) for v in moments)
    if len(emp) != 4 or not all(math.isfinite(v) and v > 0 for v in emp):
        raise DataError(f"need four positive finite raw moments, got {emp}")
    m1 = emp[0]
    if sd is None:
        sd = math.sqrt(max(emp[1] - m1 * m1, 0.0))
    sd = sd or m1
    # work in units of m1; the relative residual is scale-free
    t1, t2, t3, t4 = (m / m1 ** (v + 1) for v, m in enumerate(emp))
    r_s = resolution / m1

    def objective(z):
        a1, a2, a3, a4 = _rounded_moments(*_unpack(z), r_s)
        return (((a1 - t1) / t1) ** 2 + ((a2 - t2) / t2) ** 2
                + ((a3 - t3) / t3) ** 2 + ((a4 - t4) / t4) ** 2)

    best = None
    tried = 0
    finals = []
    for p0, lam0, mu0, s0 in _start_grid(m1, sd, config):
        tried += 1
        z0 = _pack(p0, lam0 * m1, mu0 / m1, s0 / m1)
        res = nelder_mead(objective, z0, step=0.5, max_iter=config.max_iter)
        # restart from the best vertex; guards against a collapsed simplex
        res2 = nelder_mead(objective, res.x, step=0.05, max_iter=config.max_iter)
        if res2.fun <= res.fun:
            res = res2
        if not math.isfinite(res.fun):
            continue
        finals.append(res)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise DataError(f"mixture fit: no start produced a finite residual ({tried} tried)")

    def to_params(z) -> MixtureParams:
        p, lam_s, mu_s, s_s = _unpack(z)
        p = min(max(p, 1e-15), 1.0 - 1e-15)
        return MixtureParams(p=p, lam=lam_s / m1, mu=float(mu_s) * m1, sigma=s_s * m1)

    params = to_params(best.x)
    p = params.p
    roots: list[tuple[MixtureParams, float]] = []
    for res in sorted((r for r in finals if r.fun <= config.tol), key=lambda r: r.fun):
        cand = to_params(res.x)
        if not any(_same_root(cand, other) for other, _ in roots):
            roots.append((cand, float(res.fun)))
    fit = MixtureFit(
        params=params,
        residual_norm=float(best.fun),
        empirical_moments=emp,
        converged=bool(best.fun <= config.tol),
        starts_tried=tried,
        roots=roots,
    )
    if len(roots) > 1:
        fit.notes.append(f"{len(roots)} distinct roots within tolerance; moments cannot tell them apart")
    if not fit.converged:
        fit.notes.append(f"residual {best.fun:.3g} above tolerance {config.tol:g}")
    if p >= 1.0 - config.degenerate_p or p <= config.degenerate_p:
        fit.degenerate = True
        fit.notes.append("degenerate: mixing weight at the boundary")
    return fit


def _same_root(a: MixtureParams, b: MixtureParams, rtol: float = 1e-3) -> bool:
    scale = max(abs(a.mu), a.sigma, 1.0 / a.lam)
    return (abs(a.p - b.p) <= rtol
            and abs(a.lam - b.lam) <= rtol * max(a.lam, b.lam)
            and abs(a.mu - b.mu) <= rtol * scale
            and abs(a.sigma - b.sigma) <= rtol * scale)


def single_component_adequacy(sample, resolution: float = 0.0) -> dict[str, float]:
    """Largest |z| of the sample moments against each one-component model.

    The exponential uses lam = 1/m1, the normal uses the sample mean and
    variance; z is the moment mismatch over its standard error. For
    clock-rounded samples (zeros included) both models are rounded too.
    """
    x = _as_array(sample)
    r = resolution
    n = x.size
    powers = [x ** v for v in range(1, 5)]
    emp = [float(pw.mean()) for pw in powers]
    se = [float(pw.std()) / math.sqrt(n) for pw in powers]
    m1 = emp[0]
    var = max(emp[1] - m1 * m1 - r * r / 6.0, 1e-300)
    candidates = {
        "exponential": _rounded_moments(1.0, 1.0 / m1, 0.0, 1.0, r),
        "normal": _rounded_moments(0.0, 1.0, m1, math.sqrt(var), r),
    }
    out = {}
    for name, model in candidates.items():
        zs = [abs(m - e) / s if s > 0 else (0.0 if m == e else math.inf)
              for m, e, s in zip(model, emp, se)]
        out[name] = max(zs)
    return out


def fit_mixture_mom(sample, config: SolverConfig | None = None,
                    resolution: float | None = None) -> MixtureFit:
    """Method-of-moments fit of the exponential + normal mixture to a sample.

    Besides the boundary check on ``p``, the fit is flagged degenerate when a
    single exponential or single normal already reproduces all four sample
    moments within 3 standard errors.

    Clock-rounded samples (``resolution`` > 0, taken from the sample when not
    given) get their dropped zero intervals back and are matched against the
    moments of the rounded model.
    """
    config = config or SolverConfig()
    x = _as_array(sample)
    if x.size < config.min_n:
        raise InsufficientDataError("mixture fit (positive intervals)", config.min_n, int(x.size))
    if np.any(x <= 0):
        raise DataError("mixture fit requires positive intervals")
    r, n_zero = _resolution(sample, resolution)
    if n_zero:
        x = np.concatenate((x, np.zeros(n_zero)))
    emp = kernels.raw_moments(x)
    fit = solve_moment_system(emp, config, sd=float(x.std()), resolution=r)
    if r > 0:
        fit.notes.append(f"moments of gaps rounded to {r:g}, {n_zero} zero gaps included")
    if not fit.degenerate:
        adequacy = single_component_adequacy(x, resolution=r)
        ok = [name for name, z in adequacy.items() if z <= 3.0]
        if ok:
            fit.degenerate = True
            fit.notes.append(f"degenerate: single-component adequate ({', '.join(ok)})")
    return fit


# -- goodness of fit ---------------------------------------------------------


def _model_quantile(model):
    """Return (fitted parameter count, quantile function) for a model."""
    if isinstance(model, ExponentialFit):
        lam = model.lam
    elif isinstance(model, MixtureParams):
        return 4, _mixture_quantile(model)
    elif isinstance(model, (int, float)):
        lam = float(model)
    else:
        raise ConfigError(f"unsupported model {model!r}")
    if lam <= 0:
        raise ConfigError("exponential rate must be positive")
    return 1, lambda q: -math.log1p(-q) / lam


def _mixture_quantile(params: MixtureParams):
    lo = min(0.0, params.mu - 40.0 * params.sigma)
    hi = max(params.mu + 40.0 * params.sigma, 60.0 / params.lam)

    def quant(q):
        return brentq(lambda v: mixture_cdf(v, params) - q, lo, hi, xtol=1e-12, rtol=1e-14)

    return quant


def _merge_small(lower, upper, expected, observed, minimum):
    lower, upper = list(lower), list(upper)
    expected, observed = list(expected), list(observed)
    while len(expected) > 1 and min(expected) < minimum:
        i = int(np.argmin(expected))
        if i == 0:
            j = 1
        elif i == len(expected) - 1:
            j = i - 1
        else:
            j = i - 1 if expected[i - 1] <= expected[i + 1] else i + 1
        a, b = min(i, j), max(i, j)
        upper[a] = upper[b]
        expected[a] += expected[b]
        observed[a] += observed[b]
        del lower[b], upper[b], expected[b], observed[b]
    return lower, upper, expected, observed


def _psi(z):
    # antiderivative of the standard normal cdf
    return z * ndtr(z) + np.exp(-0.5 * z * z) / SQRT_2PI


def rounded_cdf(x, model, resolution: float):
    """CDF of ``G + resolution * U`` with G ~ model and U ~ Uniform(0, 1).

    A gap G between times floored to multiples of ``resolution`` is observed
    as D with P(D <= k * resolution) = rounded_cdf((k + 1) * resolution),
    assuming the earlier time's position inside its clock tick is uniform.
    """
    r = resolution
    xa = np.asarray(x, dtype=np.float64)
    if isinstance(model, MixtureParams):
        p, lam, mu, sg = model.p, model.lam, model.mu, model.sigma
    else:
        p, lam, mu, sg = 1.0, _model_rate(model), 0.0, 1.0
    xp = np.maximum(xa, 0.0)
    head = (xp + np.expm1(-lam * xp) / lam) / r
    tail = 1.0 - math.expm1(lam * r) / (lam * r) * np.exp(-lam * np.maximum(xa, r))
    expo = np.where(xa >= r, tail, head)
    out = p * expo
    if p < 1.0:
        out = out + (1.0 - p) * (sg / r) * (_psi((xa - mu) / sg) - _psi((xa - r - mu) / sg))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _model_rate(model) -> float:
    lam = model.lam if isinstance(model, ExponentialFit) else float(model)
    if lam <= 0:
        raise ConfigError("exponential rate must be positive")
    return lam


def _grouped_gof(x: np.ndarray, model, k: int, r: float, n_bins: int,
                 min_expected: float) -> GofResult:
    """Chi-square test for clock-rounded positive intervals.

    Cells are whole ticks (D = j * r, j >= 1); the model is the rounded
    distribution conditioned on D > 0. Bin edges are the equal-probability
    quantiles snapped to whole ticks.
    """
    ticks = np.rint(x / r)
    if np.any(np.abs(x / r - ticks) > 1e-6) or np.any(ticks < 1):
        raise DataError(f"intervals are not positive multiples of the resolution {r:g}")
    n = x.size

    def H(tick):
        return rounded_cdf(tick * r, model, r)

    h1 = H(1.0)
    mass = 1.0 - h1
    if mass <= 0:
        raise DataError("model puts no mass on positive rounded intervals")
    edges = [1]
    for i in range(1, n_bins):
        target = h1 + mass * i / n_bins
        hi = 2.0
        while H(hi) < target:
            hi *= 2.0
        t = brentq(lambda v: H(v) - target, 1.0, hi, xtol=1e-10)
        e = max(int(round(t)), edges[-1] + 1)
        edges.append(e)
    cdf = [H(e) for e in edges] + [1.0]
    expected = n * np.diff(cdf) / mass
    idx = np.searchsorted(np.asarray(edges[1:], dtype=float), ticks, side="right")
    observed = np.bincount(idx, minlength=len(edges))
    upper = [float(e * r) for e in edges[1:]] + [math.inf]
    lower, upper, exp_m, obs_m = _merge_small(
        [float(e * r) for e in edges], upper, expected, observed, min_expected
    )
    return _pearson(lower, upper, exp_m, obs_m, k)


def _pearson(lower, upper, exp_m, obs_m, k: int) -> GofResult:
    nb = len(exp_m)
    dof = nb - 1 - k
    if nb < 3 or dof < 1:
        raise InsufficientDataError("sample too small for GOF (bins after merging)", max(3, k + 2), nb)
    e = np.array(exp_m, dtype=float)
    o = np.array(obs_m, dtype=float)
    stat = float(np.sum((o - e) ** 2 / e))
    bins = [(float(lo), float(hi), int(ob), float(ex))
            for lo, hi, ob, ex in zip(lower, upper, obs_m, exp_m)]
    return GofResult(statistic=stat, dof=dof, p_value=chi2_sf(stat, dof), bins=bins)


def chi_square_gof(sample, model, n_bins: int = 10, min_expected: float = 5.0,
                   min_n: int = 30, resolution: float | None = None) -> GofResult:
    """Pearson chi-square test of ``sample`` against a fitted model.

    ``model`` is an ``ExponentialFit`` (or a bare rate) or ``MixtureParams``.
    Bin edges are equal-probability quantiles of the model; bins with expected
    count below ``min_expected`` are merged into their smaller neighbour.

    With ``resolution`` > 0 (taken from the sample when not given) the
    intervals are treated as differences of clock-floored times and tested
    against the correspondingly rounded model on whole-tick bins.
    """
    if n_bins < 3:
        raise ConfigError("GOF needs at least 3 bins")
    x = _as_array(sample)
    n = int(x.size)
    if n < min_n:
        raise InsufficientDataError("chi-square GOF sample", min_n, n)
    k, quant = _model_quantile(model)
    r, _ = _resolution(sample, resolution)
    if r > 0:
        return _grouped_gof(x, model, k, r, n_bins, min_expected)
    inner = [quant(i / n_bins) for i in range(1, n_bins)]
    # the normal component puts (tiny) mass below zero
    lower_support = -math.inf if isinstance(model, MixtureParams) else 0.0
    edges = np.array([lower_support] + inner + [math.inf])
    # equal-probability edges: every bin expects exactly n / n_bins
    expected = np.full(n_bins, n / n_bins)
    idx = np.searchsorted(edges[1:-1], x, side="right")
    observed = np.bincount(idx, minlength=n_bins)
    lower, upper, exp_m, obs_m = _merge_small(
        edges[:-1], edges[1:], expected, observed, min_expected
    )
    return _pearson(lower, upper, exp_m, obs_m, k)

"""Pure numpy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is missing or when
``AIRSTAT_PURE_PYTHON=1`` is set. Each function mirrors the compiled one
argument for argument; random words are bit-identical between the two,
derived floats agree up to libm rounding.
"""
from __future__ import annotations

import numpy as np

from .rng import GOLDEN, MASK64

_GOLDEN = np.uint64(GOLDEN)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_PI = 2.0 * np.pi
MINUTES_PER_DAY = 1440


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def words_at(key: int, counters: np.ndarray) -> np.ndarray:
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(np.uint64(key & MASK64) + (counters + np.uint64(1)) * _GOLDEN)


def uniforms_at(key: int, counters: np.ndarray) -> np.ndarray:
    w = words_at(key, counters)
    return ((w >> _S11).astype(np.float64) + 0.5) * 2.0**-53


def uniforms(key: int, start: int, n: int) -> np.ndarray:
    return uniforms_at(key, np.arange(start, start + n, dtype=np.uint64))


def exponentials(key: int, start: int, n: int, rate: float) -> np.ndarray:
    return -np.log(uniforms(key, start, n)) / rate


def _box_muller(key: int, idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.uint64)
    u1 = uniforms_at(key, idx * np.uint64(2))
    u2 = uniforms_at(key, idx * np.uint64(2) + np.uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def normals(key: int, start: int, n: int, mu: float, sigma: float) -> np.ndarray:
    return mu + sigma * _box_muller(key, np.arange(start, start + n, dtype=np.uint64))


def mixture_gaps(k_choice: int, k_exp: int, k_norm: int, n: int, p: float,
                 lam: float, mu: float, sigma: float,
                 max_attempts: int = 10000) -> np.ndarray:
    idx = np.arange(n, dtype=np.uint64)
    out = np.empty(n, dtype=np.float64)
    is_exp = uniforms_at(k_choice, idx) < p
    out[is_exp] = -np.log(uniforms_at(k_exp, idx[is_exp])) / lam
    pending = idx[~is_exp]
    attempt = 0
    while pending.size:
        if attempt >= max_attempts:
            raise RuntimeError("normal component rejection did not terminate")
        akey = int(words_at(k_norm, np.array([attempt], dtype=np.uint64))[0])
        x = mu + sigma * _box_muller(akey, pending)
        ok = x > 0.0
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
        attempt += 1
    return out


def raw_moments(x: np.ndarray) -> tuple[float, float, float, float]:
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    x2 = x * x
    return (float(x.sum() / n), float(x2.sum() / n),
            float((x2 * x).sum() / n), float((x2 * x2).sum() / n))


def thinning_mask(hours: np.ndarray, months: np.ndarray, u: np.ndarray,
                  rates: np.ndarray, multipliers: np.ndarray,
                  lam_max: float) -> np.ndarray:
    lam = np.asarray(rates)[hours] * np.asarray(multipliers)[months]
    return u * lam_max < lam


def window_intervals(times: np.ndarray, start_minute: float, length: float):
    """Split sorted minute timestamps into daily clock-window occurrences.

    ``times`` are minutes since the epoch (float; exact or whole minutes).
    Returns ``(intervals, interval_occ, occ, lead, trail)``: consecutive
    differences inside each occurrence (zeros kept), the occurrence id (day
    number of the window opening) of each difference, the ids of occurrences
    holding at least one arrival and their leading/trailing open spans.
    """
    times = np.asarray(times, dtype=np.float64)
    d = times - start_minute
    w = np.floor(d / MINUTES_PER_DAY).astype(np.int64)
    pos = d - w.astype(np.float64) * MINUTES_PER_DAY
    inside = pos < length
    w = w[inside]
    pos = pos[inside]
    if w.size == 0:
        empty_f = np.empty(0, dtype=np.float64)
        empty_i = np.empty(0, dtype=np.int64)
        return empty_f, empty_i, empty_i, empty_f, empty_f
    same = w[1:] == w[:-1]
    intervals = (pos[1:] - pos[:-1])[same]
    interval_occ = w[1:][same]
    first = np.concatenate(([True], ~same))
    last = np.concatenate((~same, [True]))
    return intervals, interval_occ, w[first], pos[first].copy(), length - pos[last]

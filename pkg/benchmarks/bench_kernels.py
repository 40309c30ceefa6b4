"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

Both backends are imported directly, so the ``AIRSTAT_PURE_PYTHON`` setting
does not matter here. The last column is the largest relative difference
between the two outputs (libm and numpy transcendentals differ in the last
bits, and summation order differs).
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from airstat import _pykernels
from airstat.rng import derive_key

try:
    from airstat import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(n: int):
    k = derive_key(1, "bench")
    k2, k3 = derive_key(2, "bench"), derive_key(3, "bench")
    x = _pykernels.exponentials(k, 0, n, 0.5)
    times = np.sort(_pykernels.uniforms(k2, 0, n)) * 365 * 1440
    hours = (_pykernels.uniforms(k3, 0, n) * 24).astype(np.int64)
    months = hours % 12
    u = _pykernels.uniforms(k, 0, n)
    rates = np.linspace(0.5, 5.0, 24)
    mult = np.ones(12)
    return {
        "uniforms": lambda m: m.uniforms(k, 0, n),
        "exponentials": lambda m: m.exponentials(k, 0, n, 0.5),
        "normals": lambda m: m.normals(k, 0, n, 20.0, 3.0),
        "mixture_gaps": lambda m: m.mixture_gaps(k, k2, k3, n, 0.4, 0.5, 20.0, 3.0),
        "raw_moments": lambda m: m.raw_moments(x),
        "thinning_mask": lambda m: m.thinning_mask(hours, months, u, rates, mult, 5.0),
        "window_intervals": lambda m: m.window_intervals(times, 14 * 60.0, 240.0),
    }


def rel_diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(rel_diff(x, y) for x, y in zip(a, b))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"n = {args.n:,}, best of {args.repeat}")
    print(f"{'kernel':<18}{'python ms':>11}{'compiled ms':>13}{'speedup':>9}  max rel diff")
    for name, fn in cases(args.n).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<18}{t_py:11.2f}{'-':>13}{'-':>9}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        d = rel_diff(fn(_ckernels), fn(_pykernels))
        print(f"{name:<18}{t_py:11.2f}{t_c:13.2f}{t_py / t_c:8.1f}x  {d:.1e}")


if __name__ == "__main__":
    main()

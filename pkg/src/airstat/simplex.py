"""Nelder-Mead simplex minimization (unconstrained; constrain by reparameterizing)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_iter: int
    n_eval: int
    converged: bool


def _safe(f: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    try:
        v = float(f(x))
    except (OverflowError, ZeroDivisionError, ValueError):
        return math.inf
    return v if math.isfinite(v) else math.inf


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    step: float | Sequence[float] = 0.1,
    max_iter: int = 2000,
    xatol: float = 1e-10,
    fatol: float = 1e-22,
    ftarget: float = -math.inf,
) -> SimplexResult:
    """Minimize ``f`` from ``x0`` with the classic reflect/expand/contract/shrink moves.

    Stops when the simplex has collapsed in both ``x`` (``xatol``) and ``f``
    (``fatol``), when the best value drops to ``ftarget`` or after
    ``max_iter`` iterations. Non-finite or failing evaluations count as +inf.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    steps = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        sim[i + 1] = x0
        sim[i + 1, i] += steps[i] if steps[i] != 0 else 0.05
    fs = np.array([_safe(f, v) for v in sim])
    n_eval = n + 1

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if fs[0] <= ftarget:
            converged = True
            break
        if (np.max(np.abs(sim[1:] - sim[0])) <= xatol
                and np.max(np.abs(fs[1:] - fs[0])) <= fatol):
            converged = True
            break

        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = _safe(f, xr)
        n_eval += 1
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = _safe(f, xe)
            n_eval += 1
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
        fc = _safe(f, xc)
        n_eval += 1
        if fc < min(fr, fs[-1]):
            sim[-1], fs[-1] = xc, fc
            continue
        # shrink toward the best vertex
        for i in range(1, n + 1):
            sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
            fs[i] = _safe(f, sim[i])
        n_eval += n

    best = int(np.argmin(fs))
    return SimplexResult(sim[best].copy(), float(fs[best]), it, n_eval, converged)

"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when it is
not built or when ``AIRSTAT_PURE_PYTHON`` is set to a non-empty value other
than ``0``.
"""
from __future__ import annotations

import os

from . import _pykernels

_force_py = os.environ.get("AIRSTAT_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

uniforms = _impl.uniforms
exponentials = _impl.exponentials
normals = _impl.normals
mixture_gaps = _impl.mixture_gaps
raw_moments = _impl.raw_moments
thinning_mask = _impl.thinning_mask
window_intervals = _impl.window_intervals

__all__ = [
    "BACKEND",
    "uniforms",
    "exponentials",
    "normals",
    "mixture_gaps",
    "raw_moments",
    "thinning_mask",
    "window_intervals",
]

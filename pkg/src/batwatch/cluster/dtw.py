"""Dynamic-time-warping distance with pluggable kernels.

The squared-difference local cost and the {down, right, diagonal} move
set make this the DTW analogue of squared Euclidean distance; the
result is the accumulated cost of the optimal path, not normalized by
path length.  The compiled kernel is preferred; set
BATWATCH_DTW_BACKEND=python|cython to force one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from . import _dtw_py

try:
    from . import _dtw_cy
except ImportError:  # extension not built; NumPy kernel serves
    _dtw_cy = None


def _select_backend():
    forced = os.environ.get("BATWATCH_DTW_BACKEND", "")
    if forced == "python":
        return _dtw_py
    if forced == "cython":
        if _dtw_cy is None:
            raise ConfigError("BATWATCH_DTW_BACKEND=cython but the extension is not built")
        return _dtw_cy
    if forced:
        raise ConfigError(f"unknown DTW backend {forced!r}")
    return _dtw_cy if _dtw_cy is not None else _dtw_py


_BACKEND = _select_backend()


def dtw_backend_name() -> str:
    """Name of the kernel selected at import time."""
    return _BACKEND.BACKEND_NAME


@dataclass
class DtwConfig:
    """band is a Sakoe-Chiba radius on |i - j|; None runs the full matrix."""

    band: int | None = None

    def __post_init__(self):
        if self.band is not None and self.band < 1:
            raise ConfigError(f"band must be at least 1, got {self.band}")


def dtw(a, b, config: DtwConfig | None = None) -> float:
    """DTW distance between two nonempty 1-D sequences."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ShapeError("dtw needs two nonempty 1-D sequences")
    band = -1
    if config is not None and config.band is not None:
        band = config.band
        if band < abs(a.size - b.size):
            raise ConfigError(
                f"band {band} cannot connect sequences of lengths {a.size} and {b.size}"
            )
    return _BACKEND.accumulated_cost(a, b, band)

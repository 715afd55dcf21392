"""Periodic central-difference stencils on raw ``(nx, ny, nz)`` arrays."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

type FloatArray = NDArray[np.float64]


def central_difference(values: FloatArray, axis: int, h: float) -> FloatArray:
    """Second-order first derivative along ``axis`` with wrap-around neighbours."""
    return np.asarray((np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * h))


def second_difference(values: FloatArray, axis: int, h: float) -> FloatArray:
    """Three-point second derivative along ``axis``."""
    return np.asarray((np.roll(values, -1, axis=axis) - 2.0 * values + np.roll(values, 1, axis=axis)) / (h * h))


def curl_arrays(
    u: FloatArray,
    v: FloatArray,
    w: FloatArray,
    spacing: tuple[float, float, float],
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Curl of ``(u, v, w)`` component arrays."""
    hx, hy, hz = spacing
    return (
        central_difference(w, 1, hy) - central_difference(v, 2, hz),
        central_difference(u, 2, hz) - central_difference(w, 0, hx),
        central_difference(v, 0, hx) - central_difference(u, 1, hy),
    )

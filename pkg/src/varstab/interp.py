"""Cubic Hermite interpolation and grid differentiation helpers."""

from __future__ import annotations

import numpy as np


def locate(grid: np.ndarray, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interval index, local coordinate t in [0, 1] and interval width for ``x``."""
    x = np.asarray(x, dtype=float)
    i = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, len(grid) - 2)
    h = grid[i + 1] - grid[i]
    return i, (x - grid[i]) / h, h


def hermite(grid: np.ndarray, y: np.ndarray, dy: np.ndarray, x) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative of the C^1 cubic Hermite interpolant.

    ``y`` and ``dy`` have the grid along axis 0; any trailing shape is carried.
    """
    i, t, h = locate(grid, x)
    extra = (slice(None),) + (None,) * (y.ndim - 1)
    t = t[extra] if np.ndim(t) else t
    h = h[extra] if np.ndim(h) else h
    y0, y1, d0, d1 = y[i], y[i + 1], dy[i] * h, dy[i + 1] * h
    t2, t3 = t * t, t * t * t
    val = ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0
           + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1)
    der = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * d0
           + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * d1) / h
    return val, der


def grid_derivative(grid: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Derivative along axis 0 by central differences.

    Uniform grids use the five-point stencil in the interior; otherwise
    second-order nonuniform differences.
    """
    y = np.asarray(y, dtype=float)
    steps = np.diff(grid)
    if len(grid) < 7 or np.ptp(steps) > 1e-9 * steps.mean():
        return np.gradient(y, grid, axis=0, edge_order=2)
    h = steps.mean()
    out = np.gradient(y, h, axis=0, edge_order=2)
    out[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    # fourth-order skewed stencils next to the ends
    out[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    out[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return out

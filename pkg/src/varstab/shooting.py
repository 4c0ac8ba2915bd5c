"""Fixed-step RK4 integration of the Euler equation, batched over initial data."""

from __future__ import annotations

import numpy as np

from . import small
from .errors import LegendreError, NumericalError
from .lagrangians import FIRST_STEP, Lagrangian
from .problem import ExtremalPath

NEWTON_ITER = 60


def f_px(lag: Lagrangian, x, u, p) -> np.ndarray:
    """Explicit x-derivative of f_p (central differences when non-autonomous)."""
    if lag.autonomous:
        return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(p)))
    x = np.asarray(x, dtype=float)
    dx = FIRST_STEP * (1.0 + np.abs(x))
    return (lag.f_p(x + dx, u, p) - lag.f_p(x - dx, u, p)) / (2 * dx)[..., None]


def acceleration(lag: Lagrangian, x, u, p) -> np.ndarray:
    """u'' from d/dx f_p = f_u, i.e. f_pp u'' = f_u - f_px - f_pu u'."""
    P = lag.f_pp(x, u, p)
    P = 0.5 * (P + np.swapaxes(P, -1, -2))
    if np.any(small.sym_eig_range(P)[0] <= 0):
        raise LegendreError("f_pp lost positive definiteness along the shot")
    rhs = lag.f_u(x, u, p) - f_px(lag, x, u, p) - np.einsum("...ij,...j->...i", lag.f_pu(x, u, p), p)
    return np.einsum("...ij,...j->...i", small.inv(P), rhs)


def rk4(lag: Lagrangian, grid: np.ndarray, u0, p0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate from ``grid[0]`` through every node (grid may decrease).

    ``u0``, ``p0`` have shape ``batch + (N,)``; the result arrays have the grid
    as their leading axis.
    """
    u = np.array(u0, dtype=float)
    p = np.array(p0, dtype=float)
    us, ps, accs = [u], [p], [acceleration(lag, grid[0], u, p)]
    for x0, x1 in zip(grid[:-1], grid[1:]):
        h = x1 - x0
        k1u, k1p = p, accs[-1]
        k2u = p + 0.5 * h * k1p
        k2p = acceleration(lag, x0 + 0.5 * h, u + 0.5 * h * k1u, k2u)
        k3u = p + 0.5 * h * k2p
        k3p = acceleration(lag, x0 + 0.5 * h, u + 0.5 * h * k2u, k3u)
        k4u = p + h * k3p
        k4p = acceleration(lag, x1, u + h * k3u, k4u)
        u = u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(p))):
            raise NumericalError("shot left the finite range", float(x1))
        us.append(u)
        ps.append(p)
        accs.append(acceleration(lag, x1, u, p))
    return np.array(us), np.array(ps), np.array(accs)


def natural_slope(lag: Lagrangian, x: float, u, seed, tol: float = 1e-13) -> np.ndarray:
    """Solve f_p(x, u, w) = 0 for w by damped Newton, batched."""
    u = np.asarray(u, dtype=float)
    w = np.array(np.broadcast_to(seed, u.shape), dtype=float)
    res = lag.f_p(x, u, w)
    for _ in range(NEWTON_ITER):
        if np.max(np.abs(res)) <= tol * (1.0 + np.max(np.abs(w))):
            return w
        P = lag.f_pp(x, u, w)
        step = np.einsum("...ij,...j->...i", small.inv(P), res)
        lam = np.ones(u.shape[:-1])
        norm0 = np.linalg.norm(res, axis=-1)
        for _ in range(30):
            trial = w - lam[..., None] * step
            r_trial = lag.f_p(x, u, trial)
            worse = np.linalg.norm(r_trial, axis=-1) > norm0
            if not np.any(worse):
                break
            lam = np.where(worse, 0.5 * lam, lam)
        w, res = trial, r_trial
    if np.max(np.abs(res)) > 1e-9 * (1.0 + np.max(np.abs(w))):
        raise NumericalError("Newton iteration for the natural slope did not converge", float(x))
    return w


def as_path(grid: np.ndarray, u: np.ndarray, p: np.ndarray, acc: np.ndarray) -> ExtremalPath:
    """ExtremalPath from a single (unbatched) shot on an increasing grid."""
    if grid[0] > grid[-1]:
        grid, u, p, acc = grid[::-1], u[::-1], p[::-1], acc[::-1]
    return ExtremalPath(grid, u, p, acc)

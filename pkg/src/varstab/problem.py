"""Variational problems, candidate paths and the checks a candidate must pass."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ConfigurationError, NumericalError
from .interp import grid_derivative, hermite
from .lagrangians import Lagrangian
from .small import sym_eig_range

DEFAULT_NODES = 2001


def to_mask(indices: Iterable[int] | int, dim: int) -> int:
    """Bitmask over components 1..N (bit k-1 set for component k)."""
    if isinstance(indices, (int, np.integer)):
        mask = int(indices)
        if mask < 0 or mask >= 1 << dim:
            raise ConfigurationError(f"index mask {mask} out of range for N={dim}")
        return mask
    mask = 0
    for k in indices:
        k = int(k)
        if not 1 <= k <= dim:
            raise ConfigurationError(f"index {k} outside 1..{dim}")
        mask |= 1 << (k - 1)
    return mask


def mask_members(mask: int, dim: int) -> tuple[int, ...]:
    """Zero-based component positions contained in ``mask``."""
    return tuple(k for k in range(dim) if mask >> k & 1)


@dataclass(frozen=True)
class Problem:
    """Functional of ``lagrangian`` over [a, b] with pinned components at each end.

    ``dirichlet_a`` / ``dirichlet_b`` accept 1-based component indices (or a
    ready bitmask) and are stored as bitmasks.
    """

    lagrangian: Lagrangian
    a: float = 0.0
    b: float = 1.0
    dirichlet_a: int = 0
    dirichlet_b: int = 0

    def __post_init__(self):
        if not self.a < self.b:
            raise ConfigurationError(f"interval requires a < b, got [{self.a}, {self.b}]")
        n = self.lagrangian.dim
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "dirichlet_a", to_mask(self.dirichlet_a, n))
        object.__setattr__(self, "dirichlet_b", to_mask(self.dirichlet_b, n))

    @property
    def dim(self) -> int:
        return self.lagrangian.dim

    def pinned(self, end: str) -> tuple[int, ...]:
        """Zero-based Dirichlet components at ``end`` ('a' or 'b')."""
        return mask_members(self.dirichlet_a if end == "a" else self.dirichlet_b, self.dim)

    def free(self, end: str) -> tuple[int, ...]:
        """Zero-based natural (unpinned) components at ``end``."""
        mask = self.dirichlet_a if end == "a" else self.dirichlet_b
        return mask_members(~mask & ((1 << self.dim) - 1), self.dim)


@dataclass(frozen=True)
class ExtremalPath:
    """Grid samples of a C^1 candidate with values and slopes (and optionally u'')."""

    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    second: np.ndarray | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        derivs = np.asarray(self.derivatives, dtype=float)
        if values.ndim == 1:
            values, derivs = values[:, None], derivs.reshape(-1, 1)
        if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise ConfigurationError("path grid must be strictly increasing with at least 2 nodes")
        if values.shape != derivs.shape or values.shape[0] != len(grid):
            raise ConfigurationError("path values and derivatives must match the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivatives", derivs)
        if self.second is not None:
            second = np.asarray(self.second, dtype=float).reshape(values.shape)
            object.__setattr__(self, "second", second)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def a(self) -> float:
        return float(self.grid[0])

    @property
    def b(self) -> float:
        return float(self.grid[-1])

    def __call__(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Interpolated (u, u') at ``x``; u' uses (u', u'') Hermite data when available."""
        u, du = hermite(self.grid, self.values, self.derivatives, x)
        if self.second is not None:
            du, _ = hermite(self.grid, self.derivatives, self.second, x)
        return u, du

    @classmethod
    def from_functions(cls, u: Callable, du: Callable, a: float, b: float,
                       nodes: int = DEFAULT_NODES, d2u: Callable | None = None) -> "ExtremalPath":
        """Sample vectorized callables ``u``, ``du`` (and ``d2u``) on a uniform grid."""
        x = np.linspace(a, b, nodes)

        def sample(fn):
            out = np.asarray(fn(x), dtype=float)
            return out.T if out.ndim == 2 and out.shape[0] != nodes else out

        return cls(x, sample(u), sample(du), None if d2u is None else sample(d2u))

    @classmethod
    def constant(cls, value, a: float = 0.0, b: float = 1.0,
                 nodes: int = DEFAULT_NODES) -> "ExtremalPath":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        x = np.linspace(a, b, nodes)
        vals = np.broadcast_to(value, (nodes, value.size)).copy()
        zero = np.zeros_like(vals)
        return cls(x, vals, zero, zero.copy())


@dataclass(frozen=True)
class Coefficients:
    """Lagrangian value and derivative blocks along a path."""

    x: np.ndarray
    f: np.ndarray
    f_p: np.ndarray
    f_u: np.ndarray
    f_pp: np.ndarray
    f_pu: np.ndarray
    f_uu: np.ndarray


def _check_finite(x: np.ndarray, *arrays: np.ndarray) -> None:
    xs = np.atleast_1d(x).reshape(-1)
    for arr in arrays:
        bad = ~np.isfinite(arr)
        if bad.any():
            per_point = bad.reshape(xs.size, -1).any(axis=1)
            where = float(xs[np.flatnonzero(per_point)[0]])
            raise NumericalError(f"non-finite Lagrangian derivative at x={where:.10g}", where)


def _sample_along(problem: Problem, x, u, p) -> Coefficients:
    lag = problem.lagrangian
    f_pp = lag.f_pp(x, u, p)
    f_pp = 0.5 * (f_pp + np.swapaxes(f_pp, -1, -2))
    c = Coefficients(x, lag.value(x, u, p), lag.f_p(x, u, p), lag.f_u(x, u, p),
                     f_pp, lag.f_pu(x, u, p), lag.f_uu(x, u, p))
    _check_finite(np.asarray(x), c.f, c.f_p, c.f_u, c.f_pp, c.f_pu, c.f_uu)
    return c


def eval_coeffs(problem: Problem, path: ExtremalPath, x) -> Coefficients:
    """Coefficient bundle at ``x`` (scalar or array) along ``path``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < problem.a - 1e-12) or np.any(x > problem.b + 1e-12):
        raise ConfigurationError("evaluation point outside [a, b]")
    u, p = path(x)
    return _sample_along(problem, x, u, p)


def node_coeffs(problem: Problem, path: ExtremalPath) -> Coefficients:
    """Coefficients at the path nodes, using the stored samples directly."""
    return _sample_along(problem, path.grid, path.values, path.derivatives)


@dataclass(frozen=True)
class ExtremalReport:
    euler_residual: float
    natural_residual: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class LegendreReport:
    c0: float
    satisfied: bool
    x_min: float = float("nan")


def check_extremal(problem: Problem, path: ExtremalPath, tol: float = 1e-8,
                   coeffs: Coefficients | None = None) -> ExtremalReport:
    """Euler-equation and natural-boundary residuals on the path grid."""
    c = node_coeffs(problem, path) if coeffs is None else coeffs
    dfp = grid_derivative(path.grid, c.f_p)
    euler = float(np.max(np.abs(dfp[1:-1] - c.f_u[1:-1]))) if len(path.grid) > 2 else 0.0
    natural = 0.0
    for end, row in (("a", 0), ("b", -1)):
        free = problem.free(end)
        if free:
            natural = max(natural, float(np.max(np.abs(c.f_p[row, list(free)]))))
    return ExtremalReport(euler, natural, tol, euler <= tol and natural <= tol)


def check_legendre(problem: Problem, path: ExtremalPath,
                   coeffs: Coefficients | None = None) -> LegendreReport:
    """Smallest eigenvalue of f_pp over the grid nodes."""
    c = node_coeffs(problem, path) if coeffs is None else coeffs
    eig = sym_eig_range(c.f_pp)[0]
    k = int(np.argmin(eig))
    return LegendreReport(float(eig[k]), bool(eig[k] > 0), float(path.grid[k]))


def dubois_reymond_residual(problem: Problem, path: ExtremalPath) -> float:
    """Defect in d/dx(f - u'.f_p) = f_x along the path."""
    c = node_coeffs(problem, path)
    v = c.f - np.einsum("...i,...i->...", path.derivatives, c.f_p)
    if problem.lagrangian.autonomous:
        return float(np.max(np.abs(v - v.mean())))
    f_x = problem.lagrangian.f_x(path.grid, path.values, path.derivatives)
    return float(np.max(np.abs(grid_derivative(path.grid, v) - f_x)))

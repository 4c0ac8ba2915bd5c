"""Finite-element check of the sign of the second variation.

The quadratic form is discretized with continuous piecewise-linear elements,
coefficients sampled at element midpoints.  Unknowns are interleaved node by
node, so both matrices are banded with half bandwidth ``2N - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import ConfigurationError, LegendreError
from .jacobi import GridFunction
from .problem import ExtremalPath, Problem, eval_coeffs

DENSE_LIMIT = 400
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class DiscreteForm:
    """Sparse matrices of the form and of the reference norm on [a, y].

    ``keep`` lists the unknowns left free by the constraint pattern.
    """

    nodes: np.ndarray
    dim: int
    psi: sparse.csr_matrix
    norm: sparse.csr_matrix
    keep: np.ndarray

    def restricted(self):
        k = self.keep
        return self.psi[k][:, k], self.norm[k][:, k]

    def grid_function(self, vector: np.ndarray) -> GridFunction:
        """Piecewise-linear function for a vector of kept unknowns."""
        full = np.zeros(len(self.nodes) * self.dim)
        full[self.keep] = vector
        vals = full.reshape(-1, self.dim)
        slopes = np.diff(vals, axis=0) / np.diff(self.nodes)[:, None]
        # every interior node becomes a kink carrying both element slopes
        nodes = np.repeat(self.nodes, 2)[1:-1]
        values = np.repeat(vals, 2, axis=0)[1:-1]
        return GridFunction(nodes, values, np.repeat(slopes, 2, axis=0))


def _element_blocks(P, Q, R, ell):
    """4 element blocks (N x N each) of the form and of the stiffness norm."""
    il = (1.0 / ell)[:, None, None]
    stiff = P * il
    # cross term 2 h'.Q h with h' constant and h linear
    c = 0.5 * Q
    mass = R * (ell / 6.0)[:, None, None]
    form = {
        (0, 0): stiff - c - np.swapaxes(c, 1, 2) + 2 * mass,
        (1, 1): stiff + c + np.swapaxes(c, 1, 2) + 2 * mass,
        (0, 1): -stiff - c + np.swapaxes(c, 1, 2) + mass,
    }
    form[(1, 0)] = np.swapaxes(form[(0, 1)], 1, 2)
    norm = {(0, 0): stiff, (1, 1): stiff, (0, 1): -stiff, (1, 0): -stiff}
    return form, norm


def _assemble(blocks, n_el: int, dim: int) -> sparse.csr_matrix:
    rows, cols, data = [], [], []
    el = np.arange(n_el)
    ii, jj = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    for (p, q), B in blocks.items():
        r = ((el + p) * dim)[:, None, None] + ii
        c = ((el + q) * dim)[:, None, None] + jj
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(B.ravel())
    size = (n_el + 1) * dim
    M = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(size, size)).tocsr()
    return 0.5 * (M + M.T)


def discretize(problem: Problem, path: ExtremalPath, y: float | None = None, n: int = 800,
               pin_right: str = "all", l2_weight: float = 0.0) -> DiscreteForm:
    """Assemble the form on [a, y] with ``n`` elements.

    ``pin_right='all'`` imposes h(y) = 0 (the truncated space used for
    ``lambda1``); ``'problem'`` pins only the Dirichlet components at b.
    ``l2_weight`` adds that multiple of the L2 mass to the norm so that it
    stays definite when no component is pinned.
    """
    y = problem.b if y is None else float(y)
    if not problem.a < y <= problem.b + 1e-12:
        raise ConfigurationError(f"y must lie in (a, b], got {y}")
    if n < 2:
        raise ConfigurationError("mesh needs at least 2 elements")
    x = np.linspace(problem.a, min(y, problem.b), n + 1)
    ell = np.diff(x)
    coef = eval_coeffs(problem, path, 0.5 * (x[:-1] + x[1:]))
    if np.min(np.linalg.eigvalsh(coef.f_pp)) <= 0:
        raise LegendreError("f_pp is not positive definite on the mesh; the norm is indefinite")
    dim = problem.dim
    form, norm = _element_blocks(coef.f_pp, coef.f_pu, coef.f_uu, ell)
    if l2_weight:
        eye = np.eye(dim) * l2_weight
        m = ell[:, None, None] / 6.0 * eye
        for key, w in (((0, 0), 2), ((1, 1), 2), ((0, 1), 1), ((1, 0), 1)):
            norm[key] = norm[key] + w * m
    psi = _assemble(form, n, dim)
    nrm = _assemble(norm, n, dim)
    fixed = [k for k in problem.pinned("a")]
    last = n * dim
    right = range(dim) if pin_right == "all" else problem.pinned("b")
    fixed += [last + k for k in right]
    keep = np.setdiff1d(np.arange((n + 1) * dim), fixed)
    return DiscreteForm(x, dim, psi, nrm, keep)


def smallest_pair(form: DiscreteForm) -> tuple[float, np.ndarray]:
    """Smallest generalized eigenpair of (form, norm) on the kept unknowns.

    The spectrum accumulates at 1 from the high-frequency end, so the lowest
    eigenvalue is well separated and Lanczos converges in a few steps.
    """
    A, B = form.restricted()
    if A.shape[0] <= DENSE_LIMIT:
        lam, vec = linalg.eigh(A.toarray(), B.toarray(), subset_by_index=[0, 0])
        return float(lam[0]), vec[:, 0]
    try:
        Binv = splinalg.factorized(B.tocsc())
        op = splinalg.LinearOperator(B.shape, matvec=Binv, dtype=float)
        lam, vec = splinalg.eigsh(A, k=1, M=B, Minv=op, which="SA", tol=1e-10, maxiter=5000)
    except splinalg.ArpackNoConvergence:
        lam, vec = linalg.eigh(A.toarray(), B.toarray(), subset_by_index=[0, 0])
    return float(lam[0]), vec[:, 0]


def lambda1(problem: Problem, path: ExtremalPath, y: float | None = None, n: int = 800) -> float:
    """Infimum of the form over unit X_y-norm functions vanishing from y on."""
    lam, _ = smallest_pair(discretize(problem, path, y, n, pin_right="all"))
    return 0.0 if abs(lam) < ZERO_TOL else lam


@dataclass(frozen=True)
class OracleResult:
    eigenvalue: float
    witness: GridFunction | None

    @property
    def negative(self) -> bool:
        return self.witness is not None


def psi_negative_witness(problem: Problem, path: ExtremalPath, n: int = 800,
                         tol: float = ZERO_TOL) -> OracleResult:
    """Smallest eigenvalue over the problem's own constraint pattern.

    The norm adds the L2 mass so zero modes (constants when nothing is pinned)
    appear as eigenvalue 0 and are never returned as witnesses.
    """
    form = discretize(problem, path, problem.b, n, pin_right="problem", l2_weight=1.0)
    lam, vec = smallest_pair(form)
    if lam >= -tol:
        return OracleResult(0.0 if abs(lam) < tol else lam, None)
    return OracleResult(lam, form.grid_function(vec))

"""Batched helpers for stacks of tiny matrices.

numpy's LAPACK-backed batched routines carry a per-matrix overhead that
dominates for 1x1 and 2x2 blocks; closed forms are used there.
"""

from __future__ import annotations

import numpy as np


def sym_eig_range(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest eigenvalue of each symmetric matrix in a stack."""
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, 0], A[..., 0, 0]
    if n == 2:
        mean = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
        half = 0.5 * (A[..., 0, 0] - A[..., 1, 1])
        rad = np.hypot(half, 0.5 * (A[..., 0, 1] + A[..., 1, 0]))
        return mean - rad, mean + rad
    eig = np.linalg.eigvalsh(A)
    return eig[..., 0], eig[..., -1]


def inv(A: np.ndarray) -> np.ndarray:
    n = A.shape[-1]
    if n == 1:
        return 1.0 / A
    if n == 2:
        det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
        out = np.empty_like(A)
        out[..., 0, 0] = A[..., 1, 1]
        out[..., 1, 1] = A[..., 0, 0]
        out[..., 0, 1] = -A[..., 0, 1]
        out[..., 1, 0] = -A[..., 1, 0]
        return out / det[..., None, None]
    return np.linalg.inv(A)


def det(A: np.ndarray) -> np.ndarray:
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, 0]
    if n == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    return np.linalg.det(A)


def eigvals(A: np.ndarray) -> np.ndarray:
    """Eigenvalues of general (complex) matrices in a stack."""
    n = A.shape[-1]
    if n == 1:
        return A[..., 0, :]
    if n == 2:
        half_tr = 0.5 * (A[..., 0, 0] + A[..., 1, 1])
        # ((a - d)/2)^2 + bc avoids the cancellation in tr^2/4 - det
        half_gap = 0.5 * (A[..., 0, 0] - A[..., 1, 1])
        disc = np.sqrt(half_gap * half_gap + A[..., 0, 1] * A[..., 1, 0] + 0j)
        return np.stack([half_tr + disc, half_tr - disc], axis=-1)
    return np.linalg.eigvals(A)

"""Cyclic Jacobi eigensolver for small dense symmetric matrices."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError, DataError

MAX_SWEEPS = 100
OFF_TOL = 1e-12
SYMMETRY_TOL = 1e-10


def _off_norm(a: np.ndarray) -> float:
    upper = np.triu(a, 1)
    return math.sqrt(2.0 * float(np.sum(upper * upper)))


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made nonnegative; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[idx, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    return vectors * signs


def symmetric_eigen(m, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching orthonormal eigenvectors (columns).

    Rotations are applied in cyclic row order until the off-diagonal
    Frobenius norm falls below ``1e-12`` times the matrix's Frobenius norm.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if not np.all(np.isfinite(a)):
        raise DataError("matrix has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * max(1.0, scale):
        raise DataError("matrix is not symmetric")
    a = (a + a.T) / 2
    v = np.eye(n)
    target = OFF_TOL * math.sqrt(float(np.sum(a * a)))

    for _sweep in range(max_sweeps + 1):
        if _off_norm(a) <= target:
            break
        if _sweep == max_sweeps:
            raise ConvergenceError("eigensolver did not converge")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    values = np.diag(a).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], _canonical_signs(v[:, order])

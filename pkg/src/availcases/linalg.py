"""Small dense linear-algebra helpers with explicit singularity checks."""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrixError

RCOND_MIN = 1e-12


def rcond_estimate(a: np.ndarray) -> float:
    """Reciprocal 1-norm condition number of the diagonally equilibrated matrix.

    Equilibrating first makes the estimate invariant to rescaling columns of
    the underlying data, so units never trip the singularity threshold.
    """
    a = np.asarray(a, dtype=float)
    d = np.sqrt(np.abs(np.diag(a)))
    if not np.all(d > 0):
        return 0.0
    scaled = a / np.outer(d, d)
    try:
        inv = np.linalg.inv(scaled)
    except np.linalg.LinAlgError:
        return 0.0
    if not np.all(np.isfinite(inv)):
        return 0.0
    return 1.0 / (np.linalg.norm(scaled, 1) * np.linalg.norm(inv, 1))


def solve_checked(a: np.ndarray, b: np.ndarray, message: str,
                  rcond_min: float = RCOND_MIN) -> np.ndarray:
    if rcond_estimate(a) < rcond_min:
        raise SingularMatrixError(message)
    d = np.sqrt(np.abs(np.diag(a)))
    scaled = a / np.outer(d, d)
    b = np.asarray(b, dtype=float)
    rhs = b / d if b.ndim == 1 else b / d[:, None]
    x = np.linalg.solve(scaled, rhs)
    return x / d if b.ndim == 1 else x / d[:, None]

"""Principal components from available-case or complete-case covariances.

The AC pairwise covariance matrix is not guaranteed positive semidefinite.
An eigenvalue below ``-1e-10`` times the spectral scale aborts the fit with
:class:`NegativeEigenvalueError`; smaller negatives are round-off and are
clamped to zero (their count lands in ``diagnostics``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import symmetric_eigen
from .errors import DataError, NegativeEigenvalueError
from .frame import NumericFrame, complete_rows
from .moments import DenominatorPolicy, pairwise_correlation, pairwise_moments
from .regression import Method

__all__ = ["PcaFit", "fit_pca", "fit_pca_ac", "fit_pca_cc", "pca_from_matrix"]

NEG_EIG_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class PcaFit:
    sdev: np.ndarray
    rotation: np.ndarray
    scaled: bool
    method: Method
    col_names: tuple[str, ...]
    matrix: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.sdev ** 2

    @property
    def sqrt_max_eigenvalue(self) -> float:
        return float(self.sdev[0])


def pca_from_matrix(cvr: np.ndarray, *, scaled: bool, method: Method,
                    col_names: tuple[str, ...]) -> PcaFit:
    values, vectors = symmetric_eigen(cvr)
    spectral = float(np.max(np.abs(values)))
    if values[-1] < -NEG_EIG_RTOL * spectral:
        raise NegativeEigenvalueError(
            f"at least one negative eigenvalue (smallest {values[-1]:.6g})")
    n_clamped = int(np.sum(values < 0))
    values = np.clip(values, 0.0, None)
    return PcaFit(np.sqrt(values), vectors, scaled, Method(method), tuple(col_names),
                  np.asarray(cvr), {"clamped_negative_eigenvalues": n_clamped})


def _matrix(frame: NumericFrame, scale: bool) -> np.ndarray:
    pm = pairwise_moments(frame, DenominatorPolicy.SAMPLE)
    return pairwise_correlation(pm) if scale else pm.cov


def fit_pca_ac(frame: NumericFrame, scale: bool = False) -> PcaFit:
    return pca_from_matrix(_matrix(frame, scale), scaled=scale, method=Method.AC,
                           col_names=frame.col_names)


def fit_pca_cc(frame: NumericFrame, scale: bool = False) -> PcaFit:
    view = complete_rows(frame)
    if len(view) < frame.n_cols + 1:
        raise DataError(f"only {len(view)} complete rows; need at least {frame.n_cols + 1}")
    fit = pca_from_matrix(_matrix(view.frame(), scale), scaled=scale, method=Method.CC,
                          col_names=frame.col_names)
    fit.diagnostics["complete_rows"] = len(view)
    return fit


def fit_pca(frame: NumericFrame, *, method: str = "ac", scale: bool = False) -> PcaFit:
    method = method.lower()
    if method == "ac":
        return fit_pca_ac(frame, scale)
    if method == "cc":
        return fit_pca_cc(frame, scale)
    raise DataError(f"unknown method {method!r}")

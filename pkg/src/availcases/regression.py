"""Linear regression under Available Cases and Complete Cases.

Point estimates for AC come from the pairwise covariance route::

    slopes    = cov(X)^-1 cov(X, y)
    intercept = mean(y) - mean(X) . slopes

with every covariance and mean computed over available cells.  Standard
errors come either from the delta method on the uncentered moment vector
(constant column included) or from a row bootstrap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from .errors import DataError, NumericalError, SingularMatrixError
from .frame import NumericFrame, complete_rows
from .linalg import rcond_estimate, solve_checked
from .moments import DenominatorPolicy, pairwise_moments
from .rng import substream

__all__ = [
    "DeltaWorkspace",
    "MomentParameterVector",
    "RegressionFit",
    "bootstrap_coefs",
    "bootstrap_se",
    "delta_se",
    "delta_workspace",
    "estimate_k_covariance",
    "fit_ac",
    "fit_cc",
    "fit_regression",
]

log = logging.getLogger(__name__)

DEFAULT_N_BOOT = 100
BOOT_MAX_FAILURE_FRACTION = 0.2


class Method(str, Enum):
    AC = "AC"
    CC = "CC"


class SeMethod(str, Enum):
    DELTA = "DELTA"
    BOOTSTRAP = "BOOTSTRAP"
    NONE = "NONE"


@dataclass(frozen=True, eq=False)
class RegressionFit:
    intercept: float
    slopes: np.ndarray
    method: Method
    predictor_names: tuple[str, ...]
    response_name: str
    n_used: Any  # CC: complete-row count; AC: matrix of pair counts
    se: np.ndarray | None = None
    se_method: SeMethod = SeMethod.NONE
    diagnostics: dict = field(default_factory=dict)

    @property
    def coef(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.slopes])

    @property
    def coef_names(self) -> tuple[str, ...]:
        return ("(Intercept)",) + self.predictor_names

    def with_se(self, se, se_method: SeMethod | str, **diagnostics) -> RegressionFit:
        se = np.asarray(se, dtype=float)
        if se.shape != (len(self.slopes) + 1,):
            raise DataError(f"se has shape {se.shape}, expected ({len(self.slopes) + 1},)")
        if np.any(se < 0):
            raise DataError("standard errors must be nonnegative")
        return replace(self, se=se, se_method=SeMethod(se_method),
                       diagnostics={**self.diagnostics, **diagnostics})


def _check_xy(x: NumericFrame, y: NumericFrame) -> None:
    if y.n_cols != 1:
        raise DataError(f"response must be a single column, got {y.n_cols}")
    if x.n_rows != y.n_rows:
        raise DataError(f"predictors have {x.n_rows} rows, response has {y.n_rows}")


def fit_ac(x: NumericFrame, y: NumericFrame) -> RegressionFit:
    _check_xy(x, y)
    p = x.n_cols
    pm = pairwise_moments(x.hstack(y), DenominatorPolicy.SAMPLE)
    slopes = solve_checked(pm.cov[:p, :p], pm.cov[:p, p], "AC covariance matrix singular")
    means = pm.means
    intercept = means[p] - means[:p] @ slopes
    return RegressionFit(float(intercept), slopes, Method.AC, x.col_names, y.col_names[0],
                         n_used=pm.counts)


def fit_cc(x: NumericFrame, y: NumericFrame) -> RegressionFit:
    """OLS on complete rows via the normal equations of a mean-centered design."""
    _check_xy(x, y)
    p = x.n_cols
    view = complete_rows(x.hstack(y))
    n = len(view)
    if n < p + 2:
        raise DataError(f"only {n} complete rows; need at least {p + 2}")
    z = view.source.values[view.kept_rows]
    xc, yc = z[:, :p], z[:, p]
    xbar = xc.mean(axis=0)
    u = np.column_stack([np.ones(n), xc - xbar])
    b = solve_checked(u.T @ u, u.T @ yc, "CC normal matrix singular")
    slopes = b[1:]
    intercept = b[0] - xbar @ slopes
    return RegressionFit(float(intercept), slopes, Method.CC, x.col_names, y.col_names[0],
                         n_used=n)


# ---------------------------------------------------------------------
# Delta method
# ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MomentParameterVector:
    """Upper-triangle K_rs (r <= s) of the layout [1, x_1..x_p, y], flattened row-major."""

    theta: np.ndarray
    index_map: tuple[tuple[int, int], ...]
    n_layout: int

    @staticmethod
    def layout_pairs(q: int) -> tuple[tuple[int, int], ...]:
        return tuple((r, s) for r in range(q) for s in range(r, q))

    @classmethod
    def from_matrix(cls, k: np.ndarray) -> MomentParameterVector:
        q = k.shape[0]
        pairs = cls.layout_pairs(q)
        return cls(np.array([k[r, s] for r, s in pairs]), pairs, q)

    def position(self, r: int, s: int) -> int:
        if r > s:
            r, s = s, r
        return self.index_map.index((r, s))

    def to_matrix(self, theta: np.ndarray | None = None) -> np.ndarray:
        theta = self.theta if theta is None else theta
        k = np.empty((self.n_layout, self.n_layout))
        for t, (r, s) in zip(theta, self.index_map):
            k[r, s] = k[s, r] = t
        return k


@dataclass(frozen=True, eq=False)
class DeltaWorkspace:
    params: MomentParameterVector
    gradient: np.ndarray  # (len(theta), n_coef)
    bmatrix: np.ndarray   # (len(theta), len(theta))
    coef: np.ndarray      # beta(theta) at the unperturbed moments

    def se(self) -> np.ndarray:
        var = np.einsum("ik,ij,jk->k", self.gradient, self.bmatrix, self.gradient)
        return np.sqrt(np.clip(var, 0.0, None))


def _with_constant(x: NumericFrame, y: NumericFrame) -> NumericFrame:
    ones = NumericFrame(np.ones(x.n_rows), col_names=["(Intercept)"])
    names = set(x.col_names) | set(y.col_names)
    if "(Intercept)" in names:
        raise DataError("column name '(Intercept)' is reserved")
    return ones.hstack(x).hstack(y)


def _beta_of_moments(k: np.ndarray) -> np.ndarray:
    m = k.shape[0] - 1
    a, b = k[:m, :m], k[:m, m]
    if rcond_estimate(a) < 1e-12:
        raise SingularMatrixError("delta method: perturbed system singular (try a smaller step)")
    return np.linalg.solve(a, b)


def estimate_k_covariance(frame: NumericFrame, kind: str = "zero_filled") -> np.ndarray:
    """Estimated covariance of the pairwise mean cross-products K_rs.

    ``kind="zero_filled"`` forms W_ab = 1_ab * D_a * D_b (zero where the
    pair is broken) and returns n * cov(W_ab, W_cd) / (N_ab * N_cd).
    ``kind="pairwise"`` instead uses the sample covariance of D_a D_b and
    D_c D_d over rows intact on all four cells, scaled by
    N_abcd / (N_ab * N_cd).
    """
    pairs = MomentParameterVector.layout_pairs(frame.n_cols)
    n = frame.n_rows
    vals, pres = frame.values, frame.present
    intact = np.column_stack([pres[:, r] & pres[:, s] for r, s in pairs])
    counts = intact.sum(axis=0)
    if np.any(counts < 2):
        bad = pairs[int(np.argmin(counts))]
        raise DataError(f"pair {bad} has fewer than 2 intact rows")
    prods = np.column_stack([vals[:, r] * vals[:, s] for r, s in pairs])
    if kind == "zero_filled":
        w = np.where(intact, prods, 0.0)
        wc = w - w.mean(axis=0)
        b = n * (wc.T @ wc) / (n - 1) / np.outer(counts, counts)
    elif kind == "pairwise":
        m = len(pairs)
        b = np.zeros((m, m))
        for u in range(m):
            for v in range(u, m):
                rows = intact[:, u] & intact[:, v]
                n4 = int(rows.sum())
                if n4 < 2:
                    continue
                c = np.cov(prods[rows, u], prods[rows, v], ddof=1)[0, 1]
                b[u, v] = b[v, u] = n4 * c / (counts[u] * counts[v])
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return (b + b.T) / 2


def delta_workspace(x: NumericFrame, y: NumericFrame, *, b_kind: str = "zero_filled",
                    rel_step: float = 1e-6) -> DeltaWorkspace:
    _check_xy(x, y)
    frame = _with_constant(x, y)
    pm = pairwise_moments(frame, DenominatorPolicy.SAMPLE)
    params = MomentParameterVector.from_matrix(pm.cross)
    theta = params.theta
    coef = _beta_of_moments(params.to_matrix())
    grad = np.empty((len(theta), len(coef)))
    for j in range(len(theta)):
        h = rel_step * max(1.0, abs(theta[j]))
        up = theta.copy()
        dn = theta.copy()
        up[j] += h
        dn[j] -= h
        grad[j] = (_beta_of_moments(params.to_matrix(up))
                   - _beta_of_moments(params.to_matrix(dn))) / (2 * h)
    bmat = estimate_k_covariance(frame, kind=b_kind)
    return DeltaWorkspace(params, grad, bmat, coef)


def delta_se(x: NumericFrame, y: NumericFrame, fit: RegressionFit | None = None, *,
             b_kind: str = "zero_filled") -> np.ndarray:
    """Delta-method standard errors sqrt(g' B g), one per coefficient."""
    if fit is not None and fit.method is not Method.AC:
        raise DataError("delta-method standard errors apply to AC fits")
    return delta_workspace(x, y, b_kind=b_kind).se()


# ---------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------


def bootstrap_coefs(x: NumericFrame, y: NumericFrame, n_boot: int = DEFAULT_N_BOOT,
                    seed: int = 0) -> tuple[np.ndarray, int]:
    """AC coefficients on ``n_boot`` row resamples; returns (successful coefs, n_failed).

    Replicate ``b`` draws from its own substream of ``seed`` so results do not
    depend on evaluation order.
    """
    _check_xy(x, y)
    xy = x.hstack(y)
    p = x.n_cols
    n = xy.n_rows
    coefs = []
    failed = 0
    for b in range(n_boot):
        rows = substream(seed, b).integers(0, n, n)
        boot = xy.take(rows)
        try:
            fit = fit_ac(boot.select(range(p)), boot.select([p]))
        except (NumericalError, DataError) as exc:
            log.debug("bootstrap replicate %d failed: %s", b, exc)
            failed += 1
            continue
        coefs.append(fit.coef)
    return np.array(coefs).reshape(-1, p + 1), failed


def bootstrap_se(x: NumericFrame, y: NumericFrame, n_boot: int = DEFAULT_N_BOOT,
                 seed: int = 0) -> np.ndarray:
    if n_boot < 2:
        raise DataError("n_boot must be at least 2")
    coefs, failed = bootstrap_coefs(x, y, n_boot, seed)
    if failed > BOOT_MAX_FAILURE_FRACTION * n_boot or len(coefs) < 2:
        raise NumericalError(f"bootstrap unstable: {failed} of {n_boot} refits failed")
    return coefs.std(axis=0, ddof=1)


def fit_regression(frame: NumericFrame, response: int | str, *, method: str = "ac",
                   se: str = "none", n_boot: int = DEFAULT_N_BOOT,
                   seed: int | None = None) -> RegressionFit:
    """Split ``frame`` on ``response``, fit, and optionally attach standard errors."""
    x, y = frame.split_response(response)
    method = method.lower()
    if method == "ac":
        fit = fit_ac(x, y)
    elif method == "cc":
        fit = fit_cc(x, y)
    else:
        raise DataError(f"unknown method {method!r}")
    se = se.lower()
    if se == "none":
        return fit
    if se == "delta":
        if fit.method is Method.CC:
            cc = complete_rows(frame)
            return fit.with_se(delta_se(*cc.frame().split_response(response)), SeMethod.DELTA)
        return fit.with_se(delta_se(x, y, fit), SeMethod.DELTA)
    if se == "bootstrap":
        if seed is None:
            raise DataError("bootstrap standard errors need a seed")
        if n_boot < 2:
            raise DataError("n_boot must be at least 2")
        if fit.method is Method.CC:
            x, y = complete_rows(frame).frame().split_response(response)
        coefs, failed = bootstrap_coefs(x, y, n_boot, seed)
        if failed > BOOT_MAX_FAILURE_FRACTION * n_boot or len(coefs) < 2:
            raise NumericalError(f"bootstrap unstable: {failed} of {n_boot} refits failed")
        return fit.with_se(coefs.std(axis=0, ddof=1), SeMethod.BOOTSTRAP,
                           boot_failures=failed, n_boot=n_boot)
    raise DataError(f"unknown standard-error method {se!r}")


"""Missingness injection and Monte-Carlo comparison of CC and AC.

Every replication draws from its own substream of the master seed, keyed by
``(rate_index, rep_index)``, and results are reduced in rep order.  Running
replications on several threads therefore changes nothing in the report.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AvailCasesError, DataError
from .frame import CategoricalFrame, NumericFrame, column_stats_available
from .loglinear import ModelSpec, loglin
from .pca import fit_pca
from .regression import fit_cc, fit_regression
from .rng import substream

__all__ = [
    "LinearGaussianGenerator",
    "LoglinEstimand",
    "MarBiasReport",
    "MarSpec",
    "McarSpec",
    "PcaEstimand",
    "RegressionEstimand",
    "SimReport",
    "SumOfPredictorsGenerator",
    "inject_mar",
    "inject_mcar",
    "mar_bias_study",
    "run_variance_study",
]

log = logging.getLogger(__name__)

METHODS = ("CC", "AC")

Frame = NumericFrame | CategoricalFrame


# ---------------------------------------------------------------------
# injection
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class McarSpec:
    rate: float
    target_cols: tuple | None = None  # None: every column
    seed: int = 0


def _target_indices(frame: Frame, cols) -> list[int]:
    if cols is None:
        return list(range(frame.n_cols))
    if isinstance(frame, NumericFrame):
        return [frame.col_index(c) for c in cols]
    idx = [int(c) for c in cols]
    if any(not 0 <= c < 3 for c in idx):
        raise DataError(f"factor index out of range in {cols}")
    return idx


def inject_mcar(frame: Frame, spec: McarSpec, rng: np.random.Generator | None = None) -> Frame:
    """Mask each targeted cell independently with probability ``spec.rate``.

    One uniform draw is taken per cell of the whole frame (row-major), so the
    masks for different target subsets are nested for a fixed stream.
    """
    if not 0.0 <= spec.rate <= 1.0:
        raise DataError(f"MCAR rate {spec.rate} outside [0, 1]")
    rng = substream(spec.seed) if rng is None else rng
    u = rng.random((frame.n_rows, frame.n_cols))
    mask = np.zeros(u.shape, dtype=bool)
    idx = _target_indices(frame, spec.target_cols)
    mask[:, idx] = u[:, idx] < spec.rate
    return frame.with_missing(mask)


@dataclass(frozen=True)
class MarSpec:
    """P(Y missing | D) = logistic(offset + D . weights); never depends on Y itself."""

    target_col: int | str
    driver_cols: tuple
    weights: tuple
    offset: float = 0.0
    seed: int = 0

    @classmethod
    def mcar(cls, target_col, driver_cols, rate: float, seed: int = 0) -> MarSpec:
        """The degenerate mechanism with zero weights and constant rate."""
        if rate <= 0:
            offset = -math.inf
        elif rate >= 1:
            offset = math.inf
        else:
            offset = math.log(rate / (1 - rate))
        return cls(target_col, tuple(driver_cols), (0.0,) * len(driver_cols), offset, seed)


def mar_probabilities(frame: NumericFrame, spec: MarSpec) -> np.ndarray:
    drivers = [frame.col_index(c) for c in spec.driver_cols]
    if len(spec.weights) != len(drivers):
        raise DataError(f"{len(spec.weights)} weights for {len(drivers)} driver columns")
    if frame.col_index(spec.target_col) in drivers:
        raise DataError("the target column cannot drive its own missingness")
    if drivers and not frame.present[:, drivers].all():
        raise DataError("MAR driver columns must be fully observed")
    score = np.full(frame.n_rows, float(spec.offset))
    if drivers:
        score = score + frame.values[:, drivers] @ np.asarray(spec.weights, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-score))


def inject_mar(frame: NumericFrame, spec: MarSpec, rng: np.random.Generator | None = None) -> NumericFrame:
    prob = mar_probabilities(frame, spec)
    rng = substream(spec.seed) if rng is None else rng
    u = rng.random(frame.n_rows)
    mask = np.zeros(frame.shape, dtype=bool)
    mask[:, frame.col_index(spec.target_col)] = u < prob
    return frame.with_missing(mask)


# ---------------------------------------------------------------------
# estimands
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class RegressionEstimand:
    response: int | str
    index: int = 1  # 0 = intercept, 1 = first slope

    @property
    def name(self) -> str:
        return f"beta{self.index}"

    def __call__(self, frame: NumericFrame, method: str) -> float:
        return float(fit_regression(frame, self.response, method=method).coef[self.index])


@dataclass(frozen=True)
class PcaEstimand:
    scale: bool = False

    @property
    def name(self) -> str:
        return "pca_sqrt_max_eig" + ("_cor" if self.scale else "")

    def __call__(self, frame: NumericFrame, method: str) -> float:
        return fit_pca(frame, method=method, scale=self.scale).sqrt_max_eigenvalue


@dataclass(frozen=True)
class LoglinEstimand:
    """A scalar from a log-linear fit: one lambda entry (default) or one fitted cell.

    By default this is the first entry of the first two-factor interaction in
    the model hierarchy.
    """

    spec: ModelSpec
    term: tuple | None = None
    index: tuple | None = None
    cell: tuple | None = None

    def _term(self) -> tuple:
        if self.term is not None:
            return tuple(self.term)
        two_way = [t for t in self.spec.terms if len(t) == 2]
        if not two_way:
            raise DataError(f"model {self.spec} has no two-factor interaction; choose a term")
        return two_way[0]

    @property
    def name(self) -> str:
        if self.cell is not None:
            return "fitted" + "".join(f"[{i}]" for i in self.cell)
        idx = self.index if self.index is not None else (0,) * len(self._term())
        return "lambda" + "".join(str(a + 1) for a in self._term()) + "".join(f"[{i}]" for i in idx)

    def __call__(self, records: CategoricalFrame, method: str) -> float:
        fit = loglin(records, self.spec, method=method)
        if self.cell is not None:
            return float(fit.fitted.counts[tuple(self.cell)])
        term = self._term()
        if term not in fit.lambdas:
            raise DataError(f"term {term} is not in model {self.spec}")
        lam = np.asarray(fit.lambdas[term])
        idx = self.index if self.index is not None else (0,) * lam.ndim
        return float(lam[tuple(idx)])


# ---------------------------------------------------------------------
# variance study
# ---------------------------------------------------------------------


@dataclass
class SimRow:
    na_rate: float
    method: str
    estimand: str
    variance: float | None
    mean: float | None
    mean_se: float | None
    n_reps: int
    n_failures: int


@dataclass
class SimReport:
    rows: list[SimRow]
    failures: list[dict]
    config: dict
    values: dict = field(default_factory=dict, repr=False)  # (rate, method) -> per-rep values, None on failure

    def row(self, rate: float, method: str) -> SimRow:
        for r in self.rows:
            if r.na_rate == rate and r.method == method:
                return r
        raise KeyError((rate, method))

    def ratio(self, rate: float) -> float:
        """CC variance over AC variance at ``rate``."""
        cc, ac = self.row(rate, "CC").variance, self.row(rate, "AC").variance
        if cc is None or ac is None or ac == 0:
            return math.nan
        return cc / ac

    @property
    def total_successes(self) -> int:
        return sum(r.n_reps - r.n_failures for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "kind": "SimReport",
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "failures": self.failures,
        }


def _stats(vals: list[float]) -> tuple[float | None, float | None, float | None]:
    if not vals:
        return None, None, None
    arr = np.asarray(vals)
    mean = float(arr.mean())
    if len(arr) < 2:
        return None, mean, None
    var = float(arr.var(ddof=1))
    return var, mean, math.sqrt(var / len(arr))


def run_variance_study(frame: Frame, estimand, na_rates: Sequence[float], n_reps: int,
                       seed: int, *, target_cols=None, workers: int = 1) -> SimReport:
    """Monte-Carlo variance of ``estimand`` under CC and AC for each MCAR rate.

    Both methods see the same corrupted frame in each replication.  A failing
    replication (negative eigenvalue, too few complete rows, ...) is recorded
    in ``failures`` and skipped.
    """
    if n_reps < 2:
        raise DataError("n_reps must be at least 2")
    rates = [float(r) for r in na_rates]
    for r in rates:
        if not 0.0 <= r <= 1.0:
            raise DataError(f"NA rate {r} outside [0, 1]")

    def one(task):
        ri, k = task
        corrupted = inject_mcar(frame, McarSpec(rates[ri], target_cols), substream(seed, ri, k))
        out = {}
        for m in METHODS:
            try:
                out[m] = float(estimand(corrupted, m))
            except AvailCasesError as exc:
                out[m] = exc
        return out

    tasks = [(ri, k) for ri in range(len(rates)) for k in range(n_reps)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    rows, failures, values = [], [], {}
    for ri, rate in enumerate(rates):
        chunk = results[ri * n_reps:(ri + 1) * n_reps]
        for m in METHODS:
            good = []
            per_rep = []
            for k, res in enumerate(chunk):
                v = res[m]
                if isinstance(v, Exception):
                    failures.append({"na_rate": rate, "rep": k, "method": m,
                                     "error": type(v).__name__, "message": str(v)})
                    per_rep.append(None)
                    log.debug("rate %g rep %d %s failed: %s", rate, k, m, v)
                else:
                    good.append(v)
                    per_rep.append(v)
            var, mean, se = _stats(good)
            rows.append(SimRow(rate, m, estimand.name, var, mean, se, n_reps, n_reps - len(good)))
            values[(rate, m)] = per_rep
    config = {"estimand": estimand.name, "na_rates": rates, "n_reps": n_reps, "seed": seed,
              "target_cols": None if target_cols is None else list(target_cols),
              "rng": "PCG64/SeedSequence spawn_key=(rate_index, rep_index)"}
    return SimReport(rows, failures, config, values)


# ---------------------------------------------------------------------
# MAR bias study
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class LinearGaussianGenerator:
    """d ~ N(driver_mean, driver_sd^2);  y = intercept + slope * d + N(0, noise_sd^2)."""

    intercept: float = 1.0
    slope: float = 2.0
    noise_sd: float = 1.0
    driver_mean: float = 0.0
    driver_sd: float = 1.0

    col_names = ("d", "y")

    @property
    def true_slope(self) -> float:
        return self.slope

    @property
    def true_mean_y(self) -> float:
        return self.intercept + self.slope * self.driver_mean

    def sample(self, rng: np.random.Generator, n: int) -> NumericFrame:
        d = rng.normal(self.driver_mean, self.driver_sd, n)
        y = self.intercept + self.slope * d + rng.normal(0.0, self.noise_sd, n)
        return NumericFrame(np.column_stack([d, y]), col_names=self.col_names)


@dataclass(frozen=True)
class SumOfPredictorsGenerator:
    """Synthetic regression data: x_1..x_p iid N(0, 1), y = x_1 + ... + x_p + N(0, sgm^2).

    Every true slope is 1 and the intercept is 0.
    """

    p: int = 3
    sgm: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise DataError("need at least one predictor")
        if not self.sgm >= 0:
            raise DataError("noise standard deviation must be nonnegative")

    @property
    def col_names(self) -> tuple[str, ...]:
        return tuple(f"x{j + 1}" for j in range(self.p)) + ("y",)

    def sample(self, rng: np.random.Generator, n: int) -> NumericFrame:
        x = rng.standard_normal((n, self.p))
        y = x.sum(axis=1) + rng.normal(0.0, self.sgm, n)
        return NumericFrame(np.column_stack([x, y]), col_names=self.col_names)


@dataclass
class MarBiasReport:
    n: int
    n_reps: int
    true_slope: float
    slope_mean: float
    slope_se: float
    true_mean_y: float
    mean_y_mean: float
    mean_y_se: float
    missing_rate: float

    @property
    def slope_bias(self) -> float:
        return self.slope_mean - self.true_slope

    @property
    def mean_y_bias(self) -> float:
        return self.mean_y_mean - self.true_mean_y

    @property
    def slope_z(self) -> float:
        return self.slope_bias / self.slope_se if self.slope_se > 0 else math.inf

    @property
    def mean_y_z(self) -> float:
        return self.mean_y_bias / self.mean_y_se if self.mean_y_se > 0 else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(kind="MarBiasReport", slope_bias=self.slope_bias, mean_y_bias=self.mean_y_bias,
                 slope_z=self.slope_z, mean_y_z=self.mean_y_z)
        return d


def mar_bias_study(generator: LinearGaussianGenerator, mar_spec: MarSpec, n: int, n_reps: int,
                   seed: int) -> MarBiasReport:
    """Complete-case slope and complete-case mean of Y under a MAR mechanism."""
    if n_reps < 2:
        raise DataError("n_reps must be at least 2")
    if n < 4:
        raise DataError("n must be at least 4")
    slopes, means, miss = [], [], []
    for k in range(n_reps):
        rng = substream(seed, k)
        frame = inject_mar(generator.sample(rng, n), mar_spec, rng)
        x, y = frame.split_response(mar_spec.target_col)
        slopes.append(fit_cc(x, y).slopes[0])
        means.append(column_stats_available(y, 0)[0])
        miss.append(1.0 - y.present.mean())
    s, m = np.asarray(slopes), np.asarray(means)
    return MarBiasReport(n, n_reps, generator.true_slope, float(s.mean()),
                         float(s.std(ddof=1) / math.sqrt(n_reps)), generator.true_mean_y,
                         float(m.mean()), float(m.std(ddof=1) / math.sqrt(n_reps)),
                         float(np.mean(miss)))

"""Three-factor hierarchical log-linear models under Available Cases.

The AC route estimates each marginal probability table from the records
intact on that margin's factors, turns them into expected cell counts, and
fits the model to those counts by iterative proportional fitting.  For
decomposable models the expected counts are the usual closed form, e.g. for
X and Y conditionally independent given Z::

    m_ijk = n * p_i.k * p_.jk / p_..k

where every probability is estimated from its own intact records.  The one
non-decomposable 3-factor model (all two-way interactions, no three-way
term) has no closed form; its two-way AC margins are first raked to the AC
one-way margins so that IPF sees a consistent set of targets.

Factors are indexed 0, 1, 2 internally.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError
from .frame import CategoricalFrame
from .regression import Method

__all__ = [
    "LoglinFit",
    "ModelSpec",
    "Table3",
    "ac_expected_counts",
    "ac_margin_probs",
    "cc_expected_counts",
    "extract_lambdas",
    "ipf",
    "loglin_ac",
    "loglin_cc",
    "records_to_table",
    "table_to_records",
]

AXES = (0, 1, 2)


@dataclass(frozen=True, eq=False)
class Table3:
    counts: np.ndarray
    factor_names: tuple[str, str, str] = ("X", "Y", "Z")
    level_labels: tuple[tuple[str, ...], ...] | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        if counts.ndim != 3:
            raise DataError(f"table must be 3-dimensional, got shape {counts.shape}")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise DataError("table counts must be finite and nonnegative")
        if not counts.sum() > 0:
            raise DataError("table total must be positive")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "factor_names", tuple(self.factor_names))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.counts.shape

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def margin(self, subset: Iterable[int]) -> np.ndarray:
        return _margin(self.counts, subset)


def _margin(arr: np.ndarray, subset: Iterable[int]) -> np.ndarray:
    keep = tuple(sorted(subset))
    return arr.sum(axis=tuple(a for a in AXES if a not in keep))


def _expand(marg: np.ndarray, subset: Sequence[int]) -> np.ndarray:
    """Reshape a margin over sorted ``subset`` so it broadcasts against a 3-d table."""
    shape = [1, 1, 1]
    for a, k in zip(sorted(subset), marg.shape):
        shape[a] = k
    return marg.reshape(shape)


@dataclass(frozen=True)
class ModelSpec:
    """Generating class of a hierarchical model, e.g. ``((0, 2), (1, 2))``."""

    margins: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        gens = []
        for m in self.margins:
            sub = tuple(sorted(set(int(a) for a in m)))
            if not sub:
                raise DataError("model margins must be nonempty")
            if any(a not in AXES for a in sub):
                raise DataError(f"factor index out of range in margin {m}")
            gens.append(sub)
        gens = sorted(set(gens), key=lambda g: (len(g), g))
        for a, b in itertools.permutations(gens, 2):
            if set(a) <= set(b):
                raise DataError(f"margin {a} is contained in margin {b}")
        if not gens:
            raise DataError("model needs at least one margin")
        object.__setattr__(self, "margins", tuple(gens))

    @classmethod
    def parse(cls, text: str) -> ModelSpec:
        """Parse ``"1,3+2,3"`` (1-based factor numbers) into a spec."""
        try:
            return cls(tuple(tuple(int(t) - 1 for t in part.split(",") if t.strip())
                             for part in text.split("+")))
        except ValueError:
            raise DataError(f"cannot parse model margins {text!r}") from None

    def __str__(self) -> str:
        return "+".join(",".join(str(a + 1) for a in g) for g in self.margins)

    @property
    def terms(self) -> tuple[tuple[int, ...], ...]:
        """Every interaction term in the hierarchy, grand mean first."""
        out = {()}
        for g in self.margins:
            for r in range(1, len(g) + 1):
                out.update(itertools.combinations(g, r))
        return tuple(sorted(out, key=lambda t: (len(t), t)))

    @property
    def is_decomposable(self) -> bool:
        return self.margins != ((0, 1), (0, 2), (1, 2))


@dataclass(frozen=True, eq=False)
class LoglinFit:
    fitted: Table3
    lambdas: dict
    method: Method
    spec: ModelSpec
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------
# table <-> records
# ---------------------------------------------------------------------


def table_to_records(t: Table3) -> CategoricalFrame:
    """One record per counted unit, cells visited in row-major order."""
    counts = t.counts
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > 0):
        raise DataError("table_to_records needs integer counts")
    reps = rounded.astype(np.int64).ravel()
    cells = np.array(list(np.ndindex(*counts.shape)), dtype=np.int64).reshape(-1, 3)
    codes = np.repeat(cells, reps, axis=0)
    return CategoricalFrame(codes, np.ones(codes.shape, dtype=bool), t.dims,
                            t.factor_names, t.level_labels)


def records_to_table(records: CategoricalFrame) -> Table3:
    """Tabulate the fully intact records."""
    full = records.present.all(axis=1)
    codes = records.codes[full]
    counts = np.zeros(records.levels)
    np.add.at(counts, (codes[:, 0], codes[:, 1], codes[:, 2]), 1.0)
    return Table3(counts, records.factor_names, records.level_labels)


# ---------------------------------------------------------------------
# margins
# ---------------------------------------------------------------------


def ac_margin_probs(records: CategoricalFrame, subset: Iterable[int]) -> np.ndarray:
    """Relative frequencies over records intact on ``subset`` (others ignored)."""
    sub = tuple(sorted(set(subset)))
    if not sub or any(a not in AXES for a in sub):
        raise DataError(f"bad factor subset {subset}")
    ok = records.present[:, list(sub)].all(axis=1)
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise DataError(f"no records intact on factors {sub}")
    counts = np.zeros([records.levels[a] for a in sub])
    idx = tuple(records.codes[ok, a] for a in sub)
    np.add.at(counts, idx, 1.0)
    return counts / n_ok


def _closed_form(probs: dict, spec: ModelSpec, levels: Sequence[int], n: float) -> np.ndarray:
    table = np.full(tuple(levels), float(n))
    covered = set()
    for g in spec.margins:
        table = table * _expand(probs[g], g)
        covered.update(g)
    if len(spec.margins) == 2:
        sep = tuple(sorted(set(spec.margins[0]) & set(spec.margins[1])))
        if sep:
            denom = _expand(probs[sep], sep)
            table = np.divide(table, denom, out=np.zeros_like(table), where=denom > 0)
    for a in AXES:
        if a not in covered:
            table = table / levels[a]
    return table


def _rake2(marg: np.ndarray, row: np.ndarray, col: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    out = marg.copy()
    for _ in range(max_iter):
        rs = out.sum(axis=1)
        out *= np.divide(row, rs, out=np.zeros_like(row), where=rs > 0)[:, None]
        cs = out.sum(axis=0)
        out *= np.divide(col, cs, out=np.zeros_like(col), where=cs > 0)[None, :]
        if np.max(np.abs(out.sum(axis=1) - row)) <= tol:
            return out
    raise ConvergenceError("could not reconcile two-way margin with its one-way margins")


# ---------------------------------------------------------------------
# IPF
# ---------------------------------------------------------------------


def ipf(start: Table3 | np.ndarray, targets: Sequence[tuple[Sequence[int], np.ndarray]],
        tol: float = 1e-10, max_iter: int = 1000) -> Table3:
    """Iterative proportional fitting of ``start`` to the target margins.

    Convergence is declared when every target margin is matched to within
    ``tol`` (max absolute cell discrepancy).  Zero cells of ``start`` stay zero.
    """
    base = start if isinstance(start, Table3) else Table3(start)
    table = np.array(base.counts, dtype=float)
    tgts = []
    for subset, marg in targets:
        sub = tuple(sorted(subset))
        marg = np.asarray(marg, dtype=float)
        expect = tuple(table.shape[a] for a in sub)
        if marg.shape != expect:
            raise DataError(f"target over {sub} has shape {marg.shape}, expected {expect}")
        tgts.append((sub, marg))
    if not tgts:
        raise DataError("ipf needs at least one target margin")
    totals = [m.sum() for _, m in tgts]
    if max(totals) - min(totals) > 1e-8 * max(1.0, max(totals)):
        raise DataError(f"target margins disagree on total mass: {totals}")

    def discrepancy() -> float:
        return max(float(np.max(np.abs(_margin(table, s) - m))) for s, m in tgts)

    gap = discrepancy()
    it = 0
    while gap > tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"IPF did not converge in {max_iter} iterations (last margin discrepancy {gap:.3g})")
        for sub, marg in tgts:
            cur = _margin(table, sub)
            ratio = np.divide(marg, cur, out=np.zeros_like(marg), where=cur > 0)
            table *= _expand(ratio, sub)
        it += 1
        gap = discrepancy()
    return Table3(table, base.factor_names, base.level_labels,
                  {"iterations": it, "max_discrepancy": gap})


def _fit_to_own_margins(counts: np.ndarray, spec: ModelSpec, like: Table3 | CategoricalFrame,
                        tol: float, max_iter: int) -> Table3:
    start = np.full(counts.shape, counts.sum() / counts.size)
    return ipf(Table3(start, like.factor_names, like.level_labels),
               [(g, _margin(counts, g)) for g in spec.margins], tol, max_iter)


def ac_expected_counts(records: CategoricalFrame, spec: ModelSpec, tol: float = 1e-10,
                       max_iter: int = 1000) -> Table3:
    n = float(records.n_rows)
    levels = records.levels
    needed = set(spec.margins)
    if spec.is_decomposable and len(spec.margins) == 2:
        sep = tuple(sorted(set(spec.margins[0]) & set(spec.margins[1])))
        if sep:
            needed.add(sep)
    if not spec.is_decomposable:
        needed.update((a,) for a in AXES)
    probs = {g: ac_margin_probs(records, g) for g in needed}

    # disagreement between shared lower-order margins implied by different generators
    cross_gap = 0.0
    for g, h in itertools.combinations(spec.margins, 2):
        shared = tuple(sorted(set(g) & set(h)))
        if shared:
            mg = _margin(_expand(probs[g], g), shared)
            mh = _margin(_expand(probs[h], h), shared)
            cross_gap = max(cross_gap, n * float(np.max(np.abs(mg - mh))))

    if spec.is_decomposable:
        expected = _closed_form(probs, spec, levels, n)
        if not expected.sum() > 0:
            raise DataError("AC expected counts are all zero")
        fitted = _fit_to_own_margins(expected, spec, records, tol, max_iter)
    else:
        targets = []
        for g in spec.margins:
            a, b = g
            targets.append((g, n * _rake2(probs[g], probs[(a,)], probs[(b,)], 1e-13, 10_000)))
        start = np.full(levels, n / np.prod(levels))
        fitted = ipf(Table3(start, records.factor_names, records.level_labels), targets, tol, max_iter)
    fitted.diagnostics["cross_margin_discrepancy"] = cross_gap
    return fitted


def cc_expected_counts(records: CategoricalFrame, spec: ModelSpec, tol: float = 1e-10,
                       max_iter: int = 1000) -> Table3:
    full = records.present.all(axis=1)
    if not full.any():
        raise DataError("no fully intact records")
    observed = records_to_table(records)
    fitted = _fit_to_own_margins(np.array(observed.counts), spec, records, tol, max_iter)
    fitted.diagnostics["complete_records"] = int(full.sum())
    return fitted


# ---------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------


def _effect(logt: np.ndarray, term: tuple[int, ...]) -> np.ndarray:
    # Moebius inversion over subsets of ``term`` of the means over the complementary axes
    out = np.zeros([logt.shape[a] for a in term]) if term else np.zeros(())
    for r in range(len(term) + 1):
        for s in itertools.combinations(term, r):
            mean_s = logt.mean(axis=tuple(a for a in AXES if a not in s))
            sign = (-1) ** (len(term) - len(s))
            # broadcast mean_s (over axes s) onto the axes of ``term``
            shape = [logt.shape[a] if a in s else 1 for a in term]
            out = out + sign * np.reshape(mean_s, shape)
    return out


def extract_lambdas(fitted: Table3, spec: ModelSpec) -> dict:
    """Zero-sum (effect-coded) log-linear coefficients for every term in ``spec``.

    Keys are factor-index tuples; ``()`` is the grand mean.
    """
    counts = fitted.counts
    if np.any(counts <= 0):
        raise DataError("structural zero unsupported for coefficient extraction")
    logt = np.log(counts)
    return {term: _effect(logt, term) for term in spec.terms}


def reconstruct(lambdas: dict, dims: Sequence[int]) -> np.ndarray:
    """exp of the summed coefficient arrays, broadcast over the full table."""
    total = np.zeros(tuple(dims))
    for term, lam in lambdas.items():
        total = total + _expand(np.asarray(lam), term) if term else total + float(lam)
    return np.exp(total)


def loglin_ac(records: CategoricalFrame, spec: ModelSpec, **kw) -> LoglinFit:
    fitted = ac_expected_counts(records, spec, **kw)
    return LoglinFit(fitted, extract_lambdas(fitted, spec), Method.AC, spec, dict(fitted.diagnostics))


def loglin_cc(records: CategoricalFrame, spec: ModelSpec, **kw) -> LoglinFit:
    fitted = cc_expected_counts(records, spec, **kw)
    return LoglinFit(fitted, extract_lambdas(fitted, spec), Method.CC, spec, dict(fitted.diagnostics))


def loglin(records: CategoricalFrame, spec: ModelSpec, method: str = "ac", **kw) -> LoglinFit:
    method = method.lower()
    if method == "ac":
        return loglin_ac(records, spec, **kw)
    if method == "cc":
        return loglin_cc(records, spec, **kw)
    raise DataError(f"unknown method {method!r}")

"""Missing-aware tabular containers shared by every estimator.

A cell is either a present finite value or MISSING.  Missingness is held in
an explicit boolean ``present`` mask; the numeric payload of a missing cell is
stored as 0.0 and never read.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "CategoricalFrame",
    "CompleteRowView",
    "NumericFrame",
    "column_stats_available",
    "complete_rows",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NumericFrame:
    """An n x p grid of real cells, each present or MISSING."""

    values: np.ndarray
    present: np.ndarray
    col_names: tuple[str, ...]

    def __init__(self, values, present=None, col_names: Sequence[str] | None = None):
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise DataError(f"expected a 2-d array, got shape {vals.shape}")
        n, p = vals.shape
        if n < 1 or p < 1:
            raise DataError(f"frame must have at least one row and one column, got {n}x{p}")
        if present is None:
            mask = np.ones((n, p), dtype=bool)
        else:
            mask = np.asarray(present, dtype=bool)
            if mask.ndim == 1:
                mask = mask[:, None]
            if mask.shape != vals.shape:
                raise DataError(f"present mask shape {mask.shape} != values shape {vals.shape}")
        bad = mask & ~np.isfinite(vals)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataError(f"non-finite value at row {i}, column {j}")
        if col_names is None:
            names = tuple(f"V{j + 1}" for j in range(p))
        else:
            names = tuple(str(c) for c in col_names)
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be unique")
        vals = np.where(mask, vals, 0.0)
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "present", _frozen(mask))
        object.__setattr__(self, "col_names", names)

    @classmethod
    def from_nan_array(cls, arr, col_names=None) -> NumericFrame:
        """Build a frame treating NaN cells as MISSING (infinities still rejected)."""
        arr = np.asarray(arr, dtype=float)
        return cls(np.nan_to_num(arr, nan=0.0, posinf=np.inf, neginf=-np.inf),
                   ~np.isnan(arr), col_names)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_missing(self) -> int:
        return int((~self.present).sum())

    def to_nan_array(self) -> np.ndarray:
        return np.where(self.present, self.values, np.nan)

    def col_index(self, col: int | str) -> int:
        if isinstance(col, str):
            try:
                return self.col_names.index(col)
            except ValueError:
                raise DataError(f"unknown column {col!r}") from None
        col = int(col)
        if not 0 <= col < self.n_cols:
            raise DataError(f"column index {col} out of range for {self.n_cols} columns")
        return col

    def select(self, cols: Sequence[int | str]) -> NumericFrame:
        idx = [self.col_index(c) for c in cols]
        return NumericFrame(self.values[:, idx], self.present[:, idx],
                            [self.col_names[j] for j in idx])

    def take(self, rows) -> NumericFrame:
        rows = np.asarray(rows, dtype=int)
        return NumericFrame(self.values[rows], self.present[rows], self.col_names)

    def hstack(self, other: NumericFrame) -> NumericFrame:
        if other.n_rows != self.n_rows:
            raise DataError("row counts differ")
        return NumericFrame(np.hstack([self.values, other.values]),
                            np.hstack([self.present, other.present]),
                            self.col_names + other.col_names)

    def split_response(self, response: int | str) -> tuple[NumericFrame, NumericFrame]:
        """Return ``(predictors, response)`` frames."""
        j = self.col_index(response)
        rest = [k for k in range(self.n_cols) if k != j]
        if not rest:
            raise DataError("no predictor columns left after removing the response")
        return self.select(rest), self.select([j])

    def with_missing(self, mask) -> NumericFrame:
        """Return a copy where cells flagged in ``mask`` become MISSING."""
        mask = np.asarray(mask, dtype=bool)
        return NumericFrame(self.values, self.present & ~mask, self.col_names)

    def equals(self, other: NumericFrame) -> bool:
        return (self.col_names == other.col_names
                and np.array_equal(self.present, other.present)
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True, eq=False)
class CompleteRowView:
    source: NumericFrame
    kept_rows: np.ndarray
    cols: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.kept_rows)

    def frame(self) -> NumericFrame:
        """Materialize the kept rows (all source columns)."""
        if len(self.kept_rows) == 0:
            raise DataError("no complete rows")
        return self.source.take(self.kept_rows)


def complete_rows(frame: NumericFrame, cols: Sequence[int | str] | None = None) -> CompleteRowView:
    """Rows intact on every column in ``cols`` (all columns by default)."""
    if cols is None:
        idx = tuple(range(frame.n_cols))
    else:
        idx = tuple(frame.col_index(c) for c in cols)
        if not idx:
            raise DataError("column subset must be nonempty")
    keep = np.flatnonzero(frame.present[:, list(idx)].all(axis=1))
    return CompleteRowView(frame, _frozen(keep), idx)


def column_stats_available(frame: NumericFrame, col: int | str) -> tuple[float, int]:
    """Mean over the present cells of one column, and their count."""
    j = frame.col_index(col)
    mask = frame.present[:, j]
    count = int(mask.sum())
    if count == 0:
        raise DataError(f"no available observations in column {frame.col_names[j]!r}")
    return float(frame.values[mask, j].mean()), count


@dataclass(frozen=True, eq=False)
class CategoricalFrame:
    """Three factor columns of level indices, each cell possibly MISSING."""

    codes: np.ndarray
    present: np.ndarray
    levels: tuple[int, int, int]
    factor_names: tuple[str, str, str] = ("X", "Y", "Z")
    level_labels: tuple[tuple[str, ...], ...] | None = field(default=None)

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != 3:
            raise DataError(f"categorical frame needs exactly 3 factor columns, got shape {codes.shape}")
        present = (np.ones(codes.shape, dtype=bool) if self.present is None
                   else np.asarray(self.present, dtype=bool))
        if present.shape != codes.shape:
            raise DataError("present mask shape mismatch")
        levels = tuple(int(k) for k in self.levels)
        if len(levels) != 3 or min(levels) < 1:
            raise DataError(f"bad level counts {self.levels}")
        codes = np.where(present, codes, 0)
        for f in range(3):
            col = codes[present[:, f], f]
            if col.size and (col.min() < 0 or col.max() >= levels[f]):
                raise DataError(f"level index out of range in factor {f}")
        if len(self.factor_names) != 3:
            raise DataError("need 3 factor names")
        object.__setattr__(self, "codes", _frozen(codes))
        object.__setattr__(self, "present", _frozen(present))
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "factor_names", tuple(self.factor_names))

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_cols(self) -> int:
        return 3

    def with_missing(self, mask) -> CategoricalFrame:
        mask = np.asarray(mask, dtype=bool)
        return CategoricalFrame(self.codes, self.present & ~mask, self.levels,
                                self.factor_names, self.level_labels)

    def take(self, rows) -> CategoricalFrame:
        rows = np.asarray(rows, dtype=int)
        return CategoricalFrame(self.codes[rows], self.present[rows], self.levels,
                                self.factor_names, self.level_labels)

"""CSV ingestion, bundled fixtures, and report serialization.

NA matching: each cell has surrounding whitespace stripped, then is compared
exactly against the dialect's ``na_tokens``.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError
from .frame import CategoricalFrame, NumericFrame
from .loglinear import Table3, table_to_records

__all__ = [
    "CsvDialect",
    "FIXTURES",
    "fixture_path",
    "load_pima",
    "load_ucb_records",
    "load_ucb_table",
    "read_categorical",
    "read_counts_table",
    "read_csv",
    "resolve_data_path",
    "to_jsonable",
    "write_csv",
    "write_json",
]

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")

FIXTURES = {
    "pima": "pima.csv",
    "pima.csv": "pima.csv",
    "ucb": "ucb_admissions.csv",
    "ucb.csv": "ucb_admissions.csv",
    "ucb_admissions.csv": "ucb_admissions.csv",
}


@dataclass(frozen=True)
class CsvDialect:
    delimiter: str = ","
    na_tokens: frozenset = field(default_factory=lambda: frozenset({"NA", ""}))
    header: bool = True

    @property
    def na_out(self) -> str:
        return "NA" if "NA" in self.na_tokens else sorted(self.na_tokens)[0]


def _rows(path, dialect: CsvDialect) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        raw = list(csv.reader(fh, delimiter=dialect.delimiter))
    if not raw:
        raise DataError(f"{path}: empty file")
    # a blank line is a single empty field
    raw = [r if r else [""] for r in raw]
    if dialect.header:
        names, body = [c.strip() for c in raw[0]], raw[1:]
        first_line = 2
    else:
        names, body = [f"V{j + 1}" for j in range(len(raw[0]))], raw
        first_line = 1
    if not body:
        raise DataError(f"{path}: no data rows")
    width = len(names)
    for i, r in enumerate(body):
        if len(r) != width:
            raise DataError(f"{path}: line {i + first_line} has {len(r)} fields, expected {width}")
    return names, body


def read_csv(path, dialect: CsvDialect | None = None) -> NumericFrame:
    dialect = dialect or CsvDialect()
    names, body = _rows(path, dialect)
    n, p = len(body), len(names)
    vals = np.zeros((n, p))
    pres = np.ones((n, p), dtype=bool)
    line0 = 2 if dialect.header else 1
    for i, r in enumerate(body):
        for j, cell in enumerate(r):
            tok = cell.strip()
            if tok in dialect.na_tokens:
                pres[i, j] = False
            elif _NUMBER.fullmatch(tok):
                vals[i, j] = float(tok)
            else:
                raise DataError(
                    f"{path}: line {i + line0}, column {names[j]!r}: cannot parse {cell!r} as a number")
    return NumericFrame(vals, pres, names)


def _levels(column: list[str | None]) -> tuple[list[int], tuple[str, ...]]:
    labels: dict[str, int] = {}
    codes = []
    for v in column:
        if v is None:
            codes.append(0)
        else:
            codes.append(labels.setdefault(v, len(labels)))
    return codes, tuple(labels)


def read_categorical(path, dialect: CsvDialect | None = None) -> CategoricalFrame:
    """Three factor columns; levels numbered in order of first appearance."""
    dialect = dialect or CsvDialect()
    names, body = _rows(path, dialect)
    if len(names) != 3:
        raise DataError(f"{path}: categorical records need exactly 3 columns, got {len(names)}")
    cols, labels = [], []
    pres = np.ones((len(body), 3), dtype=bool)
    for j in range(3):
        column = []
        for i, r in enumerate(body):
            tok = r[j].strip()
            if tok in dialect.na_tokens:
                pres[i, j] = False
                column.append(None)
            else:
                column.append(tok)
        codes, lab = _levels(column)
        if not lab:
            raise DataError(f"{path}: factor {names[j]!r} has no observed levels")
        cols.append(codes)
        labels.append(lab)
    return CategoricalFrame(np.array(cols).T, pres, tuple(len(x) for x in labels),
                            tuple(names), tuple(labels))


def read_counts_table(path, dialect: CsvDialect | None = None) -> Table3:
    """Cell-count CSV: three factor columns and a count column."""
    dialect = dialect or CsvDialect()
    names, body = _rows(path, dialect)
    if len(names) != 4:
        raise DataError(f"{path}: count tables need 3 factor columns and a count column")
    keys, counts = [], []
    for i, r in enumerate(body):
        cells = [c.strip() for c in r]
        if any(c in dialect.na_tokens for c in cells):
            raise DataError(f"{path}: line {i + 2}: missing value in a count table")
        if not _NUMBER.fullmatch(cells[3]):
            raise DataError(f"{path}: line {i + 2}: bad count {r[3]!r}")
        keys.append(cells[:3])
        counts.append(float(cells[3]))
    codes, labels = zip(*(_levels([k[j] for k in keys]) for j in range(3)))
    table = np.zeros(tuple(len(x) for x in labels))
    for c0, c1, c2, v in zip(*codes, counts):
        table[c0, c1, c2] += v
    return Table3(table, tuple(names[:3]), tuple(labels))


def looks_like_counts(path, dialect: CsvDialect | None = None) -> bool:
    dialect = dialect or CsvDialect()
    names, _ = _rows(path, dialect)
    return len(names) == 4 and names[3].lower() in {"freq", "count", "counts", "n", "frequency"}


def write_csv(frame: NumericFrame | CategoricalFrame, path, dialect: CsvDialect | None = None) -> None:
    dialect = dialect or CsvDialect()
    na = dialect.na_out
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=dialect.delimiter, lineterminator="\n")
        if isinstance(frame, NumericFrame):
            if dialect.header:
                w.writerow(frame.col_names)
            for vals, pres in zip(frame.values, frame.present):
                w.writerow([repr(float(v)) if ok else na for v, ok in zip(vals, pres)])
        else:
            labels = frame.level_labels or tuple(tuple(str(k) for k in range(m)) for m in frame.levels)
            if dialect.header:
                w.writerow(frame.factor_names)
            for codes, pres in zip(frame.codes, frame.present):
                w.writerow([labels[j][c] if ok else na for j, (c, ok) in enumerate(zip(codes, pres))])


# ---------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------


def fixture_path(name: str) -> Path:
    try:
        fname = FIXTURES[name]
    except KeyError:
        raise DataError(f"unknown fixture {name!r}") from None
    return Path(str(resources.files("availcases") / "data" / fname))


def resolve_data_path(arg: str) -> Path:
    """A real file wins; otherwise a bundled fixture name (``pima.csv``, ``ucb.csv``)."""
    p = Path(arg)
    if p.exists():
        return p
    if arg in FIXTURES:
        return fixture_path(arg)
    raise DataError(f"data file not found: {arg}")


def load_pima() -> NumericFrame:
    """Pima Indians diabetes data, 768 rows x 9 columns (response 'bp' in the examples)."""
    return read_csv(fixture_path("pima"))


def load_ucb_table() -> Table3:
    """UC Berkeley admissions 1973: Admit x Gender x Dept counts."""
    return read_counts_table(fixture_path("ucb"))


def load_ucb_records() -> CategoricalFrame:
    return table_to_records(load_ucb_table())


# ---------------------------------------------------------------------
# structured output
# ---------------------------------------------------------------------


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(str(a + 1) for a in k) or "grand_mean":
                to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def write_json(tree: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_jsonable(tree), fh, indent=2, sort_keys=False)
        fh.write("\n")

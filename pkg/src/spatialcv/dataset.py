"""Tabular data with planar coordinates and a binary label.

A :class:`Dataset` is immutable: every array is flagged read-only so it can be
shared between worker processes and nested CV levels without defensive copies.
"""

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .kvconfig import ConfigError, format_kv, read_kv, split_list

log = logging.getLogger(__name__)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


class DataError(ValueError):
    """Raised for malformed input files or inconsistent datasets."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = NUMERIC
    levels: Tuple[str, ...] = ()

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL


@dataclass(frozen=True)
class FeatureSchema:
    columns: Tuple[Column, ...]
    coord_columns: Tuple[str, str] = ("x", "y")
    label_column: str = "label"

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "coord_columns", tuple(self.coord_columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate feature names in schema: {names}")
        reserved = set(self.coord_columns) | {self.label_column}
        if len(reserved) != 3:
            raise DataError("coordinate and label columns must be three distinct names")
        clash = reserved.intersection(names)
        if clash:
            raise DataError(f"coordinate/label columns listed as features: {sorted(clash)}")
        for c in self.columns:
            if c.kind not in (NUMERIC, CATEGORICAL):
                raise DataError(f"column {c.name!r}: unknown kind {c.kind!r}")
            if c.is_categorical:
                if len(c.levels) < 2:
                    raise DataError(f"categorical column {c.name!r} needs at least 2 levels")
                if len(set(c.levels)) != len(c.levels):
                    raise DataError(f"categorical column {c.name!r} has repeated levels")

    @property
    def names(self) -> List[str]:
        return [c.name for c in self.columns]

    @property
    def p(self) -> int:
        return len(self.columns)

    @classmethod
    def numeric(cls, names: Sequence[str], coord_columns=("x", "y"), label_column="label"):
        return cls(tuple(Column(n) for n in names), tuple(coord_columns), label_column)

    def to_text(self) -> str:
        entries = [("label", self.label_column), ("coords", ", ".join(self.coord_columns))]
        for c in self.columns:
            if c.is_categorical:
                entries.append(("categorical", f"{c.name}: {', '.join(c.levels)}"))
            else:
                entries.append(("numeric", c.name))
        return format_kv(entries)


def read_schema(path) -> FeatureSchema:
    """Parse a schema file (``label``, ``coords``, ``numeric``, ``categorical`` keys)."""
    kv = read_kv(path)
    columns = []
    for key, value, lineno in kv.entries:
        if key == "numeric":
            columns.append(Column(value))
        elif key == "categorical":
            if ":" not in value:
                raise ConfigError(f"{kv.source}:{lineno}: expected 'categorical = name: level, level, ...'")
            name, levels = value.split(":", 1)
            columns.append(Column(name.strip(), CATEGORICAL, tuple(split_list(levels))))
        elif key not in ("label", "coords"):
            raise ConfigError(f"{kv.source}:{lineno}: unknown schema key {key!r}")
    coords = split_list(kv.require("coords"))
    if len(coords) != 2:
        raise ConfigError(f"{kv.source}: 'coords' must name exactly two columns")
    return FeatureSchema(tuple(columns), tuple(coords), kv.require("label"))


def write_schema(schema: FeatureSchema, path) -> None:
    Path(path).write_text(schema.to_text(), encoding="utf-8")


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Rows of features, planar coordinates and binary labels.

    ``features`` holds numeric values and, for categorical columns, the index of
    the level in the declared level list. ``row_ids`` are the row numbers in
    the originating dataset and survive :meth:`subset`.
    """

    schema: FeatureSchema
    features: np.ndarray
    coords: np.ndarray
    labels: np.ndarray
    row_ids: Optional[np.ndarray] = None
    drop_count: int = 0
    na_counts: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim == 1 and self.schema.p == 0:
            feats = feats.reshape(-1, 0)
        n = len(self.labels)
        if feats.shape != (n, self.schema.p):
            raise DataError(f"features shape {feats.shape} does not match n={n}, p={self.schema.p}")
        coords = np.asarray(self.coords, dtype=np.float64).reshape(n, 2)
        labels = np.asarray(self.labels)
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0/1")
        if not (np.isfinite(feats).all() and np.isfinite(coords).all()):
            raise DataError("dataset contains missing or non-finite cells")
        for j, col in enumerate(self.schema.columns):
            if col.is_categorical:
                v = feats[:, j]
                if ((v < 0) | (v >= len(col.levels)) | (v != np.round(v))).any():
                    raise DataError(f"column {col.name!r}: level index out of range")
        row_ids = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "features", _readonly(feats))
        object.__setattr__(self, "coords", _readonly(coords))
        object.__setattr__(self, "labels", _readonly(labels.astype(np.int8)))
        object.__setattr__(self, "row_ids", _readonly(row_ids))

    @property
    def n(self) -> int:
        return len(self.labels)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.schema, self.features[rows], self.coords[rows], self.labels[rows],
                       row_ids=self.row_ids[rows])

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.schema, self.features, self.coords, labels, row_ids=self.row_ids)

    def column(self, name: str) -> np.ndarray:
        return self.features[:, self.schema.names.index(name)]

    def check_both_classes(self):
        counts = np.bincount(self.labels, minlength=2)
        if counts.min() == 0:
            raise DataError(f"labels contain a single class (counts 0/1 = {counts.tolist()})")


def _parse_label(text: str, lineno: int) -> int:
    t = text.strip().lower()
    if t in _TRUE:
        return 1
    if t in _FALSE:
        return 0
    raise DataError(f"row {lineno}: label {text!r} is not binary")


def load_csv(path, schema: FeatureSchema) -> Dataset:
    """Read a comma-separated file with a header row.

    Rows with any empty cell in a used column are dropped; the count is kept
    on ``Dataset.drop_count`` and per-column counts on ``Dataset.na_counts``.
    Line numbers in error messages count the header as line 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        used = list(schema.coord_columns) + schema.names + [schema.label_column]
        missing = [c for c in used if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks column(s) {missing}")
        pos = {name: header.index(name) for name in used}
        level_index = [{lvl: i for i, lvl in enumerate(c.levels)} for c in schema.columns]

        feats, coords, labels = [], [], []
        na = {name: 0 for name in used}
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                row = row + [""] * (len(header) - len(row))
            cells = {name: row[pos[name]].strip() for name in used}
            empty = [name for name, v in cells.items() if v == ""]
            if empty:
                for name in empty:
                    na[name] += 1
                dropped += 1
                continue
            frow = []
            for col, lookup in zip(schema.columns, level_index):
                value = cells[col.name]
                if col.is_categorical:
                    if value not in lookup:
                        raise DataError(f"{path}: column {col.name!r}, row {lineno}: unknown level {value!r}")
                    frow.append(float(lookup[value]))
                else:
                    frow.append(_parse_float(value, col.name, lineno, path))
            feats.append(frow)
            coords.append([_parse_float(cells[c], c, lineno, path) for c in schema.coord_columns])
            labels.append(_parse_label(cells[schema.label_column], lineno))

    if dropped:
        log.info("%s: dropped %d row(s) with missing cells", path, dropped)
    n = len(labels)
    return Dataset(schema, np.array(feats, dtype=np.float64).reshape(n, schema.p),
                   np.array(coords, dtype=np.float64).reshape(n, 2),
                   np.array(labels, dtype=np.int8), drop_count=dropped, na_counts=na)


def _parse_float(text, column, lineno, path):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}: column {column!r}, row {lineno}: non-numeric value {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{path}: column {column!r}, row {lineno}: non-finite value {text!r}")
    return value


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` in the format read by :func:`load_csv`.

    Floats are written with ``repr`` so that reading back is exact.
    """
    schema = ds.schema
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(schema.coord_columns) + schema.names + [schema.label_column])
        for i in range(ds.n):
            row = [repr(float(ds.coords[i, 0])), repr(float(ds.coords[i, 1]))]
            for j, col in enumerate(schema.columns):
                v = ds.features[i, j]
                row.append(col.levels[int(v)] if col.is_categorical else repr(float(v)))
            row.append(str(int(ds.labels[i])))
            w.writerow(row)


# -- summaries ---------------------------------------------------------------

@dataclass(frozen=True)
class NumericSummary:
    n: int
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    iqr: float
    na_count: int = 0


@dataclass(frozen=True)
class LevelCount:
    level: str
    count: int
    percent: float


@dataclass(frozen=True)
class SummaryTable:
    numeric: Dict[str, NumericSummary]
    categorical: Dict[str, List[LevelCount]]

    def format(self) -> str:
        lines = [f"{'variable':<16}{'n':>6}{'min':>10}{'q1':>10}{'median':>10}{'mean':>10}"
                 f"{'q3':>10}{'max':>10}{'IQR':>10}{'NA':>5}"]
        for name, s in self.numeric.items():
            lines.append(f"{name:<16}{s.n:>6}{s.min:>10.4g}{s.q1:>10.4g}{s.median:>10.4g}{s.mean:>10.4g}"
                         f"{s.q3:>10.4g}{s.max:>10.4g}{s.iqr:>10.4g}{s.na_count:>5}")
        for name, levels in self.categorical.items():
            lines.append("")
            lines.append(f"{name}:")
            for lc in levels:
                lines.append(f"  {lc.level:<20}{lc.count:>6}{lc.percent:>8.1f}%")
        return "\n".join(lines)


def summarize_values(values, na_count: int = 0) -> NumericSummary:
    v = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return NumericSummary(int(v.size), float(v.min()), float(q1), float(med), float(v.mean()),
                          float(q3), float(v.max()), float(q3 - q1), na_count)


def _level_counts(codes, levels) -> List[LevelCount]:
    counts = np.bincount(np.asarray(codes, dtype=np.int64), minlength=len(levels))
    total = counts.sum()
    return [LevelCount(lvl, int(c), 100.0 * c / total if total else 0.0) for lvl, c in zip(levels, counts)]


def summarize(ds: Dataset) -> SummaryTable:
    """Descriptive statistics per column; the label is reported as a two-level factor."""
    if ds.n < 1:
        raise DataError("cannot summarize an empty dataset")
    numeric, categorical = {}, {}
    for j, col in enumerate(ds.schema.columns):
        if col.is_categorical:
            categorical[col.name] = _level_counts(ds.features[:, j], col.levels)
        else:
            numeric[col.name] = summarize_values(ds.features[:, j], ds.na_counts.get(col.name, 0))
    categorical[ds.schema.label_column] = _level_counts(ds.labels, ("0", "1"))
    return SummaryTable(numeric, categorical)


# -- design matrix -------------------------------------------------------------

def one_hot(ds: Dataset) -> Tuple[np.ndarray, List[str]]:
    """Reference-coded design matrix.

    A categorical column with L levels becomes L-1 indicators named
    ``"col=level"``; the first declared level is the reference. A categorical
    column with a single observed level contributes no indicators.
    """
    if ds.schema.p < 1:
        raise DataError("schema has no feature columns")
    blocks, names = [], []
    for j, col in enumerate(ds.schema.columns):
        v = ds.features[:, j]
        if not col.is_categorical:
            blocks.append(v[:, None])
            names.append(col.name)
            continue
        if np.unique(v).size < 2:
            warnings.warn(f"categorical column {col.name!r} has a single observed level; dropped",
                          stacklevel=2)
            continue
        codes = v.astype(np.int64)
        for li, lvl in enumerate(col.levels[1:], start=1):
            blocks.append((codes == li).astype(np.float64)[:, None])
            names.append(f"{col.name}={lvl}")
    X = np.hstack(blocks) if blocks else np.empty((ds.n, 0))
    return X, names


def design_matrix(ds: Dataset, columns: Sequence[str]) -> np.ndarray:
    """Rebuild a design matrix with exactly the labelled columns ``one_hot`` produced.

    Used at prediction time, where the rows being scored may not show every
    level the training rows did.
    """
    available = {}
    for j, col in enumerate(ds.schema.columns):
        v = ds.features[:, j]
        if not col.is_categorical:
            available[col.name] = v
            continue
        codes = v.astype(np.int64)
        for li, lvl in enumerate(col.levels[1:], start=1):
            available[f"{col.name}={lvl}"] = (codes == li).astype(np.float64)
    missing = [c for c in columns if c not in available]
    if missing:
        raise DataError(f"design columns not derivable from this schema: {missing}")
    if not columns:
        return np.empty((ds.n, 0))
    return np.column_stack([available[c] for c in columns]).astype(np.float64)

"""Datasets, CSV ingestion, standardization and stratified fold plans."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import (
    ConstantColumn,
    EmptyInput,
    LabelNotBinary,
    MissingFile,
    NonNumericCell,
    TooManyFolds,
    ZeroVariance,
)

CONTINUOUS = "continuous"
BINARY = "binary"

_MISSING_TOKENS = {"", "na", "nan", "?", "null", "none"}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with binary labels and per-column metadata."""

    features: np.ndarray
    labels: np.ndarray
    column_kinds: tuple = ()
    column_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        y = np.asarray(self.labels).astype(np.int64).ravel()
        n, p = X.shape
        if n < 2:
            raise ValueError(f"a dataset needs at least 2 rows, got {n}")
        if y.shape[0] != n:
            raise ValueError(f"{n} feature rows but {y.shape[0]} labels")
        if not np.isin(y, (0, 1)).all():
            raise LabelNotBinary("labels must be 0/1")
        if not np.isfinite(X).all():
            raise ValueError("features contain missing or non-finite values")
        kinds = tuple(self.column_kinds) or (CONTINUOUS,) * p
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(p))
        if len(kinds) != p or len(names) != p:
            raise ValueError("column metadata does not match the feature count")
        if any(k not in (CONTINUOUS, BINARY) for k in kinds):
            raise ValueError(f"unknown column kind in {kinds}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "column_kinds", kinds)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def prevalence(self):
        return float(self.labels.mean())

    def has_both_classes(self):
        return 0 < self.labels.sum() < self.n

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.column_kinds, self.column_names)

    def with_features(self, features):
        return Dataset(features, self.labels, self.column_kinds, self.column_names)


def _infer_kind(column):
    levels = np.unique(column)
    return BINARY if levels.size <= 2 else CONTINUOUS


def _parse_float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def load_csv(
    path,
    label_column,
    positive_level=None,
    impute_indicator=False,
    drop_columns=("id",),
    drop_constant=False,
):
    """Read a numeric CSV file with a header row into a :class:`Dataset`.

    The label column must hold exactly two distinct values. The
    lexicographically larger one becomes class 1 unless ``positive_level``
    names it explicitly. Columns named in ``drop_columns`` (case-insensitive)
    are ignored. Missing cells are rejected unless ``impute_indicator`` is set,
    in which case every affected feature gets a 0/1 missing indicator column
    and its missing entries are filled with 0.
    """
    if not os.path.isfile(path):
        raise MissingFile(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise LabelNotBinary(f"{path} is empty") from None
        rows = [r for r in reader if r and any(cell.strip() for cell in r)]

    if label_column not in header:
        raise KeyError(f"label column {label_column!r} not in header {header}")
    label_idx = header.index(label_column)
    dropped = {c.lower() for c in (drop_columns or ())}
    feature_idx = [
        j for j, h in enumerate(header) if j != label_idx and h.lower() not in dropped
    ]

    raw_labels = []
    values = np.empty((len(rows), len(feature_idx)))
    missing = np.zeros_like(values, dtype=bool)
    for i, row in enumerate(rows):
        line = i + 2  # 1-based file line, after the header
        if len(row) != len(header):
            raise NonNumericCell(line, "<row length>", f"{len(row)} cells")
        raw_labels.append(row[label_idx].strip())
        for out_j, j in enumerate(feature_idx):
            cell = row[j].strip()
            if cell.lower() in _MISSING_TOKENS:
                if not impute_indicator:
                    raise NonNumericCell(line, header[j], cell + " (missing; see --impute-indicator)")
                missing[i, out_j] = True
                values[i, out_j] = 0.0
                continue
            try:
                values[i, out_j] = _parse_float(cell)
            except ValueError:
                raise NonNumericCell(line, header[j], cell) from None

    levels = sorted(set(raw_labels))
    if len(levels) != 2:
        raise LabelNotBinary(f"label column {label_column!r} has levels {levels}")
    if positive_level is None:
        positive_level = levels[1]
    elif str(positive_level) not in levels:
        raise LabelNotBinary(f"positive level {positive_level!r} not among {levels}")
    labels = np.array([lab == str(positive_level) for lab in raw_labels], dtype=np.int64)

    names = [header[j] for j in feature_idx]
    columns, col_names = [], []
    for j, name in enumerate(names):
        columns.append(values[:, j])
        col_names.append(name)
        if missing[:, j].any():
            columns.append(missing[:, j].astype(float))
            col_names.append(f"{name}_missing")

    keep_cols, keep_names, kinds = [], [], []
    for col, name in zip(columns, col_names):
        if np.unique(col).size < 2:
            if drop_constant:
                continue
            raise ConstantColumn(name)
        keep_cols.append(col)
        keep_names.append(name)
        kinds.append(_infer_kind(col))
    if not keep_cols:
        raise EmptyInput(f"{path} has no usable feature columns")
    features = np.column_stack(keep_cols)
    return Dataset(features, labels, tuple(kinds), tuple(keep_names))


def write_csv(path, d, label_column="label", extra=None):
    """Write a dataset (plus optional extra named columns) as CSV."""
    extra = extra or {}
    header = list(d.column_names) + [label_column] + list(extra)
    cols = [d.features[:, j] for j in range(d.p)] + [d.labels] + [np.asarray(v) for v in extra.values()]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(d.n):
            w.writerow([repr(float(c[i])) if c is not d.labels else int(c[i]) for c in cols])


@dataclass(frozen=True)
class ColumnScaling:
    kind: str
    mean: float = 0.0
    sd: float = 1.0
    low: float = 0.0   # original level mapped to -1 (binary only)
    high: float = 1.0  # original level mapped to +1 (binary only)


@dataclass(frozen=True)
class StandardizationParams:
    columns: tuple = field(default_factory=tuple)

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} columns, got shape {X.shape}")
        out = np.empty_like(X)
        for j, col in enumerate(self.columns):
            if col.kind == CONTINUOUS:
                out[:, j] = (X[:, j] - col.mean) / col.sd
            else:
                x = X[:, j]
                out[:, j] = np.where(x == col.high, 1.0, -1.0)
                bad = (x != col.high) & (x != col.low)
                if bad.any():
                    raise ValueError(
                        f"binary column {j} holds values outside {{{col.low}, {col.high}}}"
                    )
        return out

    def invert(self, Z):
        Z = np.asarray(Z, dtype=float)
        out = np.empty_like(Z)
        for j, col in enumerate(self.columns):
            if col.kind == CONTINUOUS:
                out[:, j] = Z[:, j] * col.sd + col.mean
            else:
                out[:, j] = np.where(Z[:, j] > 0, col.high, col.low)
        return out


def fit_standardization(X, kinds, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"x{j + 1}" for j in range(X.shape[1])]
    cols = []
    for j, kind in enumerate(kinds):
        x = X[:, j]
        if kind == CONTINUOUS:
            sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
            if not sd > 0:
                raise ZeroVariance(names[j])
            cols.append(ColumnScaling(CONTINUOUS, float(np.mean(x)), sd))
        else:
            levels = np.unique(x)
            if levels.size == 1:
                # degenerate binary column: its single level maps to +1
                cols.append(ColumnScaling(BINARY, low=float(levels[0]) - 1.0, high=float(levels[0])))
            else:
                cols.append(ColumnScaling(BINARY, low=float(levels[0]), high=float(levels[-1])))
    return StandardizationParams(tuple(cols))


def standardize(d):
    """Center/scale continuous columns (n-1 denominator) and map binary ones to -1/+1.

    Returns the transformed dataset and the parameters needed to apply the
    same transform to new data.
    """
    params = fit_standardization(d.features, d.column_kinds, list(d.column_names))
    return d.with_features(params.apply(d.features)), params


class FeatureStandardizer(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`fit_standardization`.

    Column kinds are inferred from the training matrix (two distinct values
    means binary) unless ``column_kinds`` is given.
    """

    def __init__(self, column_kinds=None):
        self.column_kinds = column_kinds

    def fit(self, X, y=None):
        X = check_array(X)
        kinds = self.column_kinds
        if kinds is None:
            kinds = [_infer_kind(X[:, j]) for j in range(X.shape[1])]
        self.params_ = fit_standardization(X, kinds)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        return self.params_.apply(check_array(X))

    def inverse_transform(self, X):
        check_is_fitted(self, "params_")
        return self.params_.invert(check_array(X))


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Assignment of each row to one of ``n_folds`` validation folds (0-based)."""

    assignments: np.ndarray
    n_folds: int

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    @property
    def n(self):
        return self.assignments.shape[0]

    def validation_indices(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def training_indices(self, fold):
        return np.flatnonzero(self.assignments != fold)

    def __eq__(self, other):
        return (
            isinstance(other, FoldPlan)
            and self.n_folds == other.n_folds
            and np.array_equal(self.assignments, other.assignments)
        )


def make_folds(n, n_folds, labels, seed):
    """Stratified, seeded partition of ``n`` rows into ``n_folds`` folds.

    Rows are shuffled within each class, laid out positives first, and dealt
    round-robin, so fold sizes and per-fold class counts each differ by at most
    one. Fold labels are then randomly permuted.
    """
    labels = np.asarray(labels).ravel()
    if labels.shape[0] != n:
        raise ValueError(f"n={n} but {labels.shape[0]} labels")
    if not 2 <= n_folds <= n:
        raise TooManyFolds(f"need 2 <= D <= n, got D={n_folds}, n={n}")
    rng = np.random.default_rng(seed)
    pos = rng.permutation(np.flatnonzero(labels == 1))
    neg = rng.permutation(np.flatnonzero(labels != 1))
    order = np.concatenate([pos, neg])
    relabel = rng.permutation(n_folds)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = relabel[np.arange(n) % n_folds]
    return FoldPlan(assignments, n_folds)

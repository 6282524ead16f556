"""Library score matrices: full-data predictions and the cross-validated matrix Z."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from . import learners
from .data import make_folds
from .errors import FoldMissingClass, JointThreshError, LearnerError

FULL_DATA = "full_data"
CROSS_VALIDATED = "cross_validated"


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """An n x K matrix of learner scores and where it came from."""

    values: np.ndarray
    learners: tuple
    provenance: str = FULL_DATA
    plan: object = None  # FoldPlan for cross-validated matrices

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError("score matrix needs at least one column")
        if not np.isfinite(v).all():
            raise ValueError("score matrix contains NaN or Inf")
        if len(self.learners) != v.shape[1]:
            raise ValueError(f"{v.shape[1]} columns but {len(self.learners)} learners")
        if self.provenance not in (FULL_DATA, CROSS_VALIDATED):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "learners", tuple(self.learners))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def K(self):
        return self.values.shape[1]

    @property
    def learner_ids(self):
        return tuple(getattr(s, "learner_id", str(s)) for s in self.learners)


def _fit_predict(index, spec, train, X_eval):
    try:
        model = learners.fit(spec, train)
        return model, learners.predict(model, X_eval)
    except JointThreshError as exc:
        raise LearnerError(index, spec.learner_id, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise LearnerError(index, spec.learner_id, exc) from exc


def _run(jobs, workers):
    if workers == 1:
        return [fn(*args) for fn, args in jobs]
    return Parallel(n_jobs=workers)(delayed(fn)(*args) for fn, args in jobs)


def _check_plan(d, plan):
    if plan.n != d.n:
        raise ValueError(f"fold plan covers {plan.n} rows, dataset has {d.n}")
    for fold in range(plan.n_folds):
        train_labels = d.labels[plan.training_indices(fold)]
        if not (0 < train_labels.sum() < train_labels.size):
            raise FoldMissingClass(fold)


def full_predictions(library, d, workers=1):
    """Fit every learner on all of ``d``; return the score matrix and fitted models."""
    library = list(library)
    if not library:
        raise ValueError("empty learner library")
    out = _run([(_fit_predict, (k, spec, d, d.features)) for k, spec in enumerate(library)], workers)
    models = [m for m, _ in out]
    values = np.column_stack([s for _, s in out])
    return ScoreMatrix(values, tuple(library), FULL_DATA), models


def cv_predictions(library, d, plan, workers=1):
    """Out-of-fold predictions: entry (i, k) comes from learner k fit without row i's fold."""
    library = list(library)
    if not library:
        raise ValueError("empty learner library")
    _check_plan(d, plan)
    jobs, keys = [], []
    for fold in range(plan.n_folds):
        train = d.subset(plan.training_indices(fold))
        X_val = d.features[plan.validation_indices(fold)]
        for k, spec in enumerate(library):
            jobs.append((_fit_predict, (k, spec, train, X_val)))
            keys.append((fold, k))
    out = _run(jobs, workers)
    Z = np.empty((d.n, len(library)))
    for (fold, k), (_, scores) in zip(keys, out):
        Z[plan.validation_indices(fold), k] = scores
    return ScoreMatrix(Z, tuple(library), CROSS_VALIDATED, plan)


@dataclass(frozen=True, eq=False)
class Stack:
    full: ScoreMatrix
    z: ScoreMatrix
    models: list
    plan: object


def build_stack(library, d, n_folds=10, seed=0, workers=1, plan=None):
    """Full-data fits and cross-validated Z in one batch of K * (D + 1) jobs."""
    library = list(library)
    if not library:
        raise ValueError("empty learner library")
    if plan is None:
        plan = make_folds(d.n, n_folds, d.labels, seed)
    _check_plan(d, plan)
    jobs = [(_fit_predict, (k, spec, d, d.features)) for k, spec in enumerate(library)]
    keys = [(None, k) for k in range(len(library))]
    for fold in range(plan.n_folds):
        train = d.subset(plan.training_indices(fold))
        X_val = d.features[plan.validation_indices(fold)]
        for k, spec in enumerate(library):
            jobs.append((_fit_predict, (k, spec, train, X_val)))
            keys.append((fold, k))
    out = _run(jobs, workers)
    K = len(library)
    models = [m for m, _ in out[:K]]
    full = np.column_stack([s for _, s in out[:K]])
    Z = np.empty((d.n, K))
    for (fold, k), (_, scores) in zip(keys[K:], out[K:]):
        Z[plan.validation_indices(fold), k] = scores
    return Stack(
        ScoreMatrix(full, tuple(library), FULL_DATA),
        ScoreMatrix(Z, tuple(library), CROSS_VALIDATED, plan),
        models,
        plan,
    )


def dump_z(path, z, labels):
    """Write Z as CSV with header ``row,learner_1..learner_K,label``."""
    labels = np.asarray(labels).ravel()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row"] + [f"learner_{k + 1}" for k in range(z.K)] + ["label"])
        for i in range(z.n):
            w.writerow([i + 1] + [repr(float(v)) for v in z.values[i]] + [int(labels[i])])

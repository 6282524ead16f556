"""Base-learner zoo behind one fit/predict interface returning scores in [0, 1].

The two libraries used throughout are ``four`` (random forest, logistic
regression, quadratic-spline additive logistic, CART) and ``eight`` (adds
10-NN, boosted stumps, linear SVM, bagged CART). Every hyperparameter lives in
:data:`DEFAULTS` and can be overridden per kind.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.ensemble import BaggingClassifier, GradientBoostingClassifier, RandomForestClassifier
from sklearn.exceptions import ConvergenceWarning
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import ShapeMismatch, SingleClass
from .seeding import derive_seed

DEFAULTS = {
    "logistic": {"max_iter": 100, "tol": 1e-8, "ridge": 1e-8},
    "quad_additive": {"max_iter": 100, "tol": 1e-8, "ridge": 1e-8},
    "cart": {"max_depth": 10, "min_leaf": 5},
    "random_forest": {"trees": 500, "min_leaf": 1},
    "knn": {"k": 10},
    "boosted_stumps": {"rounds": 200, "shrinkage": 0.1, "depth": 1},
    "linear_svm": {"C": 1.0, "iterations": 1000},
    "bagged_trees": {"trees": 100, "max_depth": 10, "min_leaf": 5},
}

LIBRARIES = {
    "four": ("random_forest", "logistic", "quad_additive", "cart"),
    "eight": (
        "random_forest", "logistic", "quad_additive", "cart",
        "knn", "boosted_stumps", "linear_svm", "bagged_trees",
    ),
}

# minimum allowed value for integer-like hyperparameters
_LOWER = {
    "k": 1, "trees": 1, "max_depth": 1, "min_leaf": 1, "rounds": 1,
    "depth": 1, "max_iter": 1, "iterations": 1,
}


class IRLSLogisticRegression(ClassifierMixin, BaseEstimator):
    """Unpenalized main-effects logistic regression fit by IRLS.

    ``ridge`` is added to the Newton Hessian only to keep it invertible.
    Iteration stops once the largest coefficient step falls below
    ``tol * max(1, max|beta|)``. If that never happens within ``max_iter``
    steps (e.g. separable data) the best iterate is kept, ``converged_`` is
    False and a ConvergenceWarning is issued.
    """

    def __init__(self, max_iter=100, tol=1e-8, ridge=1e-8):
        self.max_iter = max_iter
        self.tol = tol
        self.ridge = ridge

    @staticmethod
    def _loglik(X1, y, beta):
        eta = X1 @ beta
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)))

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        y = (y == self.classes_[-1]).astype(float)
        X1 = np.column_stack([np.ones(X.shape[0]), X])
        beta = np.zeros(X1.shape[1])
        ll = self._loglik(X1, y, beta)
        converged = False
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            p = expit(X1 @ beta)
            grad = X1.T @ (y - p)
            H = (X1 * (p * (1.0 - p))[:, None]).T @ X1
            H[np.diag_indices_from(H)] += self.ridge
            try:
                step = np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, grad, rcond=None)[0]
            if np.max(np.abs(step)) <= self.tol * max(1.0, np.max(np.abs(beta))):
                beta = beta + step
                converged = True
                break
            t = 1.0
            while True:
                cand = beta + t * step
                ll_new = self._loglik(X1, y, cand)
                if ll_new >= ll - 1e-12 * abs(ll):
                    break
                t *= 0.5
                if t < 1e-10:
                    cand = None
                    break
            if cand is None:
                break
            beta, ll = cand, ll_new
        if not converged:
            warnings.warn(
                f"IRLS stopped after {n_iter} iterations without converging; using best iterate",
                ConvergenceWarning,
                stacklevel=2,
            )
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:].copy()
        self.converged_ = converged
        self.n_iter_ = n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= 0).astype(int)]


def quadratic_hinge_basis(X, knots, centers, scales):
    cols = []
    for j in range(X.shape[1]):
        x = X[:, j]
        if knots[j] is None:
            cols.append(x)
            continue
        cols.append(x)
        cols.append(x * x)
        for q in knots[j]:
            cols.append(np.maximum(x - q, 0.0) ** 2)
    B = np.column_stack(cols)
    return (B - centers) / scales


class QuadraticSplineLogistic(ClassifierMixin, BaseEstimator):
    """Additive logistic model on per-feature quadratic spline bases.

    Each feature with more than two distinct values expands to
    ``{x, x^2, (x - q)_+^2}`` with knots ``q`` at its sample quartiles; binary
    features enter linearly. Basis columns are centered and scaled before the
    unpenalized IRLS fit.
    """

    def __init__(self, max_iter=100, tol=1e-8, ridge=1e-8):
        self.max_iter = max_iter
        self.tol = tol
        self.ridge = ridge

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.knots_ = []
        for j in range(X.shape[1]):
            if np.unique(X[:, j]).size <= 2:
                self.knots_.append(None)
            else:
                self.knots_.append(tuple(np.quantile(X[:, j], [0.25, 0.5, 0.75])))
        B = quadratic_hinge_basis(X, self.knots_, 0.0, 1.0)
        self.centers_ = B.mean(axis=0)
        scales = B.std(axis=0)
        self.scales_ = np.where(scales > 0, scales, 1.0)
        B = (B - self.centers_) / self.scales_
        # a hinge at the maximum is identically zero on the training data
        self.keep_ = scales > 0
        self.logit_ = IRLSLogisticRegression(self.max_iter, self.tol, self.ridge).fit(B[:, self.keep_], y)
        self.classes_ = self.logit_.classes_
        self.converged_ = self.logit_.converged_
        self.n_features_in_ = X.shape[1]
        return self

    def _basis(self, X):
        check_is_fitted(self, "logit_")
        X = check_array(X)
        return quadratic_hinge_basis(X, self.knots_, self.centers_, self.scales_)[:, self.keep_]

    def decision_function(self, X):
        return self.logit_.decision_function(self._basis(X))

    def predict_proba(self, X):
        return self.logit_.predict_proba(self._basis(X))

    def predict(self, X):
        return self.logit_.predict(self._basis(X))


class SubgradientLinearSVM(ClassifierMixin, BaseEstimator):
    """Soft-margin linear SVM, ``0.5|w|^2 + C * sum(hinge)``, by projected subgradient descent.

    Full-batch steps of size ``1 / (C R^2 sqrt(t))`` with ``R^2`` the mean
    squared row norm (bias included); ``w`` is projected onto the ball of radius ``sqrt(2 C n)`` that must
    contain the optimum. The iterate with the lowest objective is kept.
    ``predict_proba`` maps the raw margin through the logistic function.
    """

    def __init__(self, C=1.0, iterations=1000):
        self.C = C
        self.iterations = iterations

    def _objective(self, X, s, w, b):
        margins = s * (X @ w + b)
        return 0.5 * float(w @ w) + self.C * float(np.maximum(0.0, 1.0 - margins).sum())

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        s = np.where(y == self.classes_[-1], 1.0, -1.0)
        n, p = X.shape
        radius = np.sqrt(2.0 * self.C * n)
        R2 = 1.0 + float(np.mean(np.einsum("ij,ij->i", X, X)))
        eta0 = 1.0 / (self.C * R2)
        w, b = np.zeros(p), 0.0
        best = (self._objective(X, s, w, b), w.copy(), b)
        for t in range(1, self.iterations + 1):
            viol = s * (X @ w + b) < 1.0
            gw = w / n - self.C * (s[viol] @ X[viol]) / n
            gb = -self.C * float(s[viol].sum()) / n
            eta = eta0 / np.sqrt(t)
            w = w - eta * gw
            b = b - eta * gb
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            obj = self._objective(X, s, w, b)
            if obj < best[0]:
                best = (obj, w.copy(), b)
        self.objective_, self.coef_, self.intercept_ = best
        self.n_features_in_ = p
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= 0).astype(int)]


@dataclass(frozen=True)
class LearnerSpec:
    """A learner kind, its hyperparameter overrides and its seed."""

    kind: str
    overrides: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown learner kind {self.kind!r}; choose from {sorted(DEFAULTS)}")
        items = dict(self.overrides) if not isinstance(self.overrides, dict) else self.overrides
        for key in items:
            if key not in DEFAULTS[self.kind]:
                raise ValueError(f"{self.kind} has no hyperparameter {key!r}")
        object.__setattr__(self, "overrides", tuple(sorted(items.items())))
        for key, value in self.hyperparameters.items():
            if key in _LOWER and (int(value) != value or value < _LOWER[key]):
                raise ValueError(f"{self.kind}.{key} must be an integer >= {_LOWER[key]}, got {value}")
            if key in ("C", "shrinkage", "tol") and not value > 0:
                raise ValueError(f"{self.kind}.{key} must be positive, got {value}")

    @property
    def hyperparameters(self):
        hp = dict(DEFAULTS[self.kind])
        hp.update(self.overrides)
        return hp

    @property
    def learner_id(self):
        if not self.overrides:
            return self.kind
        return self.kind + "(" + ",".join(f"{k}={v}" for k, v in self.overrides) + ")"


def make_estimator(spec, n_train=None):
    hp = spec.hyperparameters
    kind = spec.kind
    if kind == "logistic":
        return IRLSLogisticRegression(hp["max_iter"], hp["tol"], hp["ridge"])
    if kind == "quad_additive":
        return QuadraticSplineLogistic(hp["max_iter"], hp["tol"], hp["ridge"])
    if kind == "cart":
        return DecisionTreeClassifier(
            criterion="gini", max_depth=int(hp["max_depth"]),
            min_samples_leaf=int(hp["min_leaf"]), random_state=spec.seed,
        )
    if kind == "random_forest":
        return RandomForestClassifier(
            n_estimators=int(hp["trees"]), max_features="sqrt", bootstrap=True,
            min_samples_leaf=int(hp["min_leaf"]), random_state=spec.seed, n_jobs=1,
        )
    if kind == "knn":
        k = int(hp["k"]) if n_train is None else min(int(hp["k"]), n_train)
        return KNeighborsClassifier(n_neighbors=k, algorithm="brute")
    if kind == "boosted_stumps":
        return GradientBoostingClassifier(
            loss="log_loss", n_estimators=int(hp["rounds"]), learning_rate=hp["shrinkage"],
            max_depth=int(hp["depth"]), random_state=spec.seed,
        )
    if kind == "linear_svm":
        return SubgradientLinearSVM(C=hp["C"], iterations=int(hp["iterations"]))
    if kind == "bagged_trees":
        base = DecisionTreeClassifier(
            criterion="gini", max_depth=int(hp["max_depth"]), min_samples_leaf=int(hp["min_leaf"])
        )
        return BaggingClassifier(
            base, n_estimators=int(hp["trees"]), bootstrap=True, random_state=spec.seed, n_jobs=1
        )
    raise AssertionError(kind)


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: LearnerSpec
    estimator: object
    feature_count: int

    @property
    def converged(self):
        return getattr(self.estimator, "converged_", True)


def fit(spec, d):
    """Fit one learner on a :class:`~jointthresh.data.Dataset`."""
    if not d.has_both_classes():
        raise SingleClass(f"{spec.learner_id}: training data has a single class")
    est = make_estimator(spec, n_train=d.n)
    est.fit(d.features, d.labels)
    return FittedModel(spec, est, d.p)


def predict(model, features):
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.feature_count:
        raise ShapeMismatch(
            f"{model.spec.learner_id} expects {model.feature_count} columns, got shape {features.shape}"
        )
    if features.shape[0] == 0:
        return np.empty(0)
    proba = model.estimator.predict_proba(features)
    col = list(model.estimator.classes_).index(1)
    return np.asarray(proba[:, col], dtype=float)


def make_library(library, seed=0, overrides=None):
    """Build a list of :class:`LearnerSpec` from ``'four'``, ``'eight'`` or a list of kinds.

    ``overrides`` maps kind to a dict of hyperparameters. Each learner's seed is
    derived from ``seed`` and its kind, so repeated kinds give identical columns.
    """
    kinds = LIBRARIES[library] if isinstance(library, str) and library in LIBRARIES else library
    if isinstance(kinds, str):
        kinds = [k.strip() for k in kinds.split(",") if k.strip()]
    overrides = overrides or {}
    unknown = set(overrides) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"overrides for unknown learner kinds: {sorted(unknown)}")
    return [
        LearnerSpec(kind, overrides.get(kind, {}), derive_seed(seed, "learner", kind))
        for kind in kinds
    ]

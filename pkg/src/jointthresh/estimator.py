"""scikit-learn compatible wrapper around the stacking + thresholding pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .data import BINARY, CONTINUOUS, Dataset
from .errors import LabelNotBinary
from .evaluation import fit_pipeline
from .learners import make_library
from .loss import LossSpec, empirical_risk
from .optimizer import CrsOptions


class SuperLearnerThresholdClassifier(ClassifierMixin, BaseEstimator):
    """Stacked ensemble classifier ``1{sum_k alpha_k psi_k(x) >= c}`` under weighted loss.

    Parameters
    ----------
    library : {"four", "eight"} or list of learner kinds
    method : {"conditional", "two_step", "crs"}
        How the weights and threshold are derived.
    lam : float
        Cost of a false negative; a false positive costs ``1 - lam``.
    inner_folds : int
        Folds of the stacking cross-validation that produces Z.
    learner_overrides : dict, optional
        ``{kind: {hyperparameter: value}}``.
    crs_max_evaluations, crs_population, crs_xtol_rel
        Controlled random search settings (``method="crs"`` only).
    standardize : bool
        Center/scale continuous features and map binary ones to -1/+1 using
        the training data.
    random_state : int
    n_jobs : int
        Worker processes for the library fits.
    """

    def __init__(
        self,
        library="four",
        method="two_step",
        lam=0.5,
        inner_folds=10,
        learner_overrides=None,
        crs_max_evaluations=10000,
        crs_population=None,
        crs_xtol_rel=1e-6,
        standardize=True,
        random_state=0,
        n_jobs=1,
    ):
        self.library = library
        self.method = method
        self.lam = lam
        self.inner_folds = inner_folds
        self.learner_overrides = learner_overrides
        self.crs_max_evaluations = crs_max_evaluations
        self.crs_population = crs_population
        self.crs_xtol_rel = crs_xtol_rel
        self.standardize = standardize
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = unique_labels(y)
        if self.classes_.size != 2:
            raise LabelNotBinary(f"need exactly two classes, got {self.classes_}")
        labels = (y == self.classes_[1]).astype(np.int64)
        kinds = tuple(BINARY if np.unique(X[:, j]).size <= 2 else CONTINUOUS for j in range(X.shape[1]))
        d = Dataset(X, labels, kinds)
        spec = LossSpec(self.lam)
        library = make_library(self.library, self.random_state, self.learner_overrides)
        opts = CrsOptions(
            population_size=self.crs_population,
            max_evaluations=self.crs_max_evaluations,
            xtol_rel=self.crs_xtol_rel,
        )
        self.pipeline_ = fit_pipeline(
            library, d, [self.method], [spec], inner_folds=self.inner_folds,
            seed=self.random_state, crs_options=opts, workers=self.n_jobs,
            standardize=self.standardize,
        )
        self.rule_ = self.pipeline_.rules[(self.method, spec.lam)]
        self.alpha_ = self.rule_.alpha
        self.threshold_ = self.rule_.threshold
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        """Ensemble score; compare with ``threshold_``."""
        check_is_fitted(self, "rule_")
        X = check_array(X)
        return self.rule_.score(self.pipeline_.library_scores(X))

    def predict(self, X):
        return self.classes_[(self.decision_function(X) >= self.threshold_).astype(int)]

    def risk(self, X, y):
        """Weighted misclassification risk on ``(X, y)``; lower is better."""
        y = np.asarray(y)
        labels = (y == self.classes_[1]).astype(np.int64)
        return empirical_risk(labels, self.decision_function(X), self.threshold_, LossSpec(self.lam)).risk

import warnings

import numpy as np
import pytest
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.svm import LinearSVC

from jointthresh import learners
from jointthresh.data import Dataset
from jointthresh.errors import ShapeMismatch, SingleClass
from jointthresh.learners import (
    IRLSLogisticRegression,
    LearnerSpec,
    QuadraticSplineLogistic,
    SubgradientLinearSVM,
    make_library,
)

FAST = {"random_forest": {"trees": 20}, "bagged_trees": {"trees": 10}, "boosted_stumps": {"rounds": 20}}


def test_irls_matches_unpenalized_newton(small_dataset):
    X, y = small_dataset.features, small_dataset.labels
    ours = IRLSLogisticRegression().fit(X, y)
    ref = LogisticRegression(penalty=None, tol=1e-12, max_iter=10000).fit(X, y)
    assert ours.converged_
    np.testing.assert_allclose(ours.coef_, ref.coef_.ravel(), atol=1e-6)
    np.testing.assert_allclose(ours.intercept_, ref.intercept_[0], atol=1e-6)


def test_irls_separable_warns_and_keeps_best():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    with pytest.warns(ConvergenceWarning):
        m = IRLSLogisticRegression(max_iter=15).fit(X, y)
    assert not m.converged_
    np.testing.assert_array_equal(m.predict(X), y)


def test_quadratic_additive_captures_curvature(rng):
    X = rng.uniform(-2, 2, (800, 1))
    y = (rng.random(800) < 1 / (1 + np.exp(-(2.0 * X[:, 0] ** 2 - 2)))).astype(int)
    p_quad = QuadraticSplineLogistic().fit(X, y).predict_proba(X)[:, 1]
    p_lin = IRLSLogisticRegression().fit(X, y).predict_proba(X)[:, 1]
    ll = lambda p: np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
    assert ll(p_quad) > ll(p_lin) + 0.05


def test_quadratic_additive_binary_feature_is_linear(rng):
    X = np.column_stack([rng.standard_normal(200), rng.integers(0, 2, 200)])
    y = (rng.random(200) < 0.5).astype(int)
    m = QuadraticSplineLogistic().fit(X, y)
    assert m.knots_[1] is None and m.knots_[0] is not None


def test_svm_near_reference_objective(small_dataset):
    X, y = small_dataset.features, small_dataset.labels
    s = 2 * y - 1
    ours = SubgradientLinearSVM(C=1.0, iterations=2000).fit(X, y)
    ref = LinearSVC(C=1.0, loss="hinge", dual=True, max_iter=100000, tol=1e-8).fit(X, y)

    def obj(w, b):
        return 0.5 * w @ w + np.maximum(0, 1 - s * (X @ w + b)).sum()

    ref_obj = obj(ref.coef_.ravel(), ref.intercept_[0])
    assert obj(ours.coef_, ours.intercept_) <= 1.02 * ref_obj
    p = ours.predict_proba(X)
    assert ((p >= 0) & (p <= 1)).all()


def test_spec_validation():
    with pytest.raises(ValueError):
        LearnerSpec("nope")
    with pytest.raises(ValueError):
        LearnerSpec("knn", {"k": 0})
    with pytest.raises(ValueError):
        LearnerSpec("knn", {"depth": 2})
    assert LearnerSpec("knn", {"k": 1}).learner_id == "knn(k=1)"
    assert LearnerSpec("cart").hyperparameters == {"max_depth": 10, "min_leaf": 5}


def test_libraries_and_seeds():
    four = make_library("four", seed=1)
    assert [s.kind for s in four] == ["random_forest", "logistic", "quad_additive", "cart"]
    assert len(make_library("eight")) == 8
    assert make_library("four", 1)[0].seed == make_library(["random_forest"], 1)[0].seed
    assert make_library("four", 1)[0].seed != make_library("four", 2)[0].seed


@pytest.mark.parametrize("kind", sorted(learners.DEFAULTS))
def test_every_learner_fits_and_predicts(kind, small_dataset):
    spec = make_library([kind], 3, FAST)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        m = learners.fit(spec, small_dataset)
        again = learners.fit(spec, small_dataset)
    p = learners.predict(m, small_dataset.features)
    assert p.shape == (small_dataset.n,) and ((p >= 0) & (p <= 1)).all()
    np.testing.assert_array_equal(p, learners.predict(again, small_dataset.features))
    assert learners.predict(m, np.empty((0, small_dataset.p))).shape == (0,)
    with pytest.raises(ShapeMismatch):
        learners.predict(m, small_dataset.features[:, :2])


def test_knn_k1_memorizes(small_dataset):
    m = learners.fit(LearnerSpec("knn", {"k": 1}), small_dataset)
    np.testing.assert_array_equal(learners.predict(m, small_dataset.features), small_dataset.labels)


def test_single_class_rejected():
    d = Dataset(np.arange(6.0).reshape(3, 2), np.zeros(3, dtype=int), ("continuous",) * 2)
    with pytest.raises(SingleClass):
        learners.fit(LearnerSpec("cart"), d)


def test_knn_k_larger_than_training_set(small_dataset):
    d = small_dataset.subset(np.arange(8))
    if d.has_both_classes():
        m = learners.fit(LearnerSpec("knn", {"k": 50}), d)
        assert learners.predict(m, d.features).shape == (8,)

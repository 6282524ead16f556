import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointthresh import learners
from jointthresh.combiner import (
    EnsembleRule,
    apply_rule,
    conditional_thresholding,
    crs_joint,
    nnls_weights,
    rule_from_text,
    rule_to_text,
    threshold_line_search,
    two_step,
)
from jointthresh.data import Dataset
from jointthresh.errors import AllZeroAlpha, EmptyInput, LengthMismatch, LibraryMismatch
from jointthresh.loss import LossSpec, empirical_risk
from jointthresh.optimizer import CrsOptions

from oracles import enumerate_threshold_risks, joint_grid_minimum


def test_line_search_perfect_separation():
    c, risk = threshold_line_search([0.1, 0.4, 0.6, 0.9], [0, 0, 1, 1], LossSpec(0.5))
    assert c == pytest.approx(0.5) and risk == 0.0


def test_line_search_all_negative():
    c, risk = threshold_line_search([0.3, 0.1, 0.7], [0, 0, 0], LossSpec(0.5))
    assert c == pytest.approx(1.7) and risk == 0.0


def test_line_search_all_positive_and_ties():
    c, risk = threshold_line_search([0.3, 0.1, 0.7], [1, 1, 1], LossSpec(0.5))
    assert c == pytest.approx(0.1 - 1) and risk == 0.0
    # every threshold costs the same: the largest candidate wins
    c, risk = threshold_line_search([0.2, 0.8], [1, 0], LossSpec(0.5))
    assert risk == pytest.approx(0.25) and c == pytest.approx(1.8)


def test_line_search_errors():
    with pytest.raises(EmptyInput):
        threshold_line_search([], [], LossSpec(0.5))
    with pytest.raises(LengthMismatch):
        threshold_line_search([0.1], [0, 1], LossSpec(0.5))


def test_line_search_matches_enumeration_on_many_instances():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 501))
        if rng.random() < 0.3:
            scores = rng.integers(0, 6, n) / 5.0  # heavy ties
        else:
            scores = rng.standard_normal(n)
        labels = (rng.random(n) < rng.uniform(0.05, 0.95)).astype(int)
        spec = LossSpec(float(rng.uniform(0.01, 0.99)))
        c, risk = threshold_line_search(scores, labels, spec)
        assert risk == min(enumerate_threshold_risks(scores, labels, spec.lam))
        assert empirical_risk(labels, scores, c, spec).risk == risk


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-1e6, 1e6), st.integers(0, 1)), min_size=1, max_size=80),
    st.floats(0.01, 0.99),
)
def test_line_search_property(pairs, lam):
    scores = np.array([p[0] for p in pairs])
    labels = np.array([p[1] for p in pairs])
    spec = LossSpec(lam)
    c, risk = threshold_line_search(scores, labels, spec)
    assert risk == min(enumerate_threshold_risks(scores, labels, lam))
    assert empirical_risk(labels, scores, c, spec).risk == risk
    assert np.isfinite(c)


def _toy(rng, n=200, K=3):
    y = (rng.random(n) < 0.4).astype(int)
    Z = np.clip(0.35 * y[:, None] + 0.3 + 0.25 * rng.standard_normal((n, K)), 0, 1)
    return Z, y


def test_two_step_and_conditional_share_alpha(rng):
    Z, y = _toy(rng)
    full = np.clip(Z + 0.05 * rng.standard_normal(Z.shape), 0, 1)
    spec = LossSpec(0.2)
    ts = two_step(Z, y, spec)
    ct = conditional_thresholding(Z, full, y, spec)
    np.testing.assert_array_equal(ts.alpha, ct.alpha)
    assert ts.method == "two_step" and ct.method == "conditional"
    assert ts.alpha.sum() == pytest.approx(1.0, abs=1e-9)
    assert ct.training_objective == threshold_line_search(full @ ct.alpha, y, spec)[1]


def test_identical_matrices_give_identical_thresholds(rng):
    Z, y = _toy(rng)
    spec = LossSpec(0.5)
    assert two_step(Z, y, spec).threshold == conditional_thresholding(Z, Z, y, spec).threshold


def test_single_learner(rng):
    Z, y = _toy(rng, K=1)
    spec = LossSpec(0.3)
    c, risk = threshold_line_search(Z[:, 0], y, spec)
    for rule in (two_step(Z, y, spec), crs_joint(Z, y, spec, CrsOptions(seed=1))):
        assert rule.alpha.tolist() == [1.0]
        assert rule.threshold == c and rule.training_objective == risk


def test_all_zero_alpha():
    y = np.array([0, 1, 0, 1])
    Z = (1 - y)[:, None].astype(float)
    with pytest.raises(AllZeroAlpha):
        nnls_weights(Z, y)
    with pytest.raises(AllZeroAlpha):
        two_step(Z, y, LossSpec(0.5))


def test_perfect_separation_has_zero_objective():
    y = np.array([0, 0, 1, 1, 0, 1])
    Z = np.column_stack([y * 0.8 + 0.1, np.full(6, 0.5)])
    assert two_step(Z, y, LossSpec(0.5)).training_objective == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95), st.integers(1, 4))
def test_crs_never_worse_than_two_step(seed, lam, K):
    rng = np.random.default_rng(seed)
    Z, y = _toy(rng, n=60, K=K)
    if y.min() == y.max():
        return
    spec = LossSpec(lam)
    ts = two_step(Z, y, spec)
    cr = crs_joint(Z, y, spec, CrsOptions(seed=seed, max_evaluations=2000))
    assert cr.training_objective <= ts.training_objective
    assert cr.alpha.min() >= 0 and abs(cr.alpha.sum() - 1) <= 1e-9
    assert empirical_risk(y, Z @ cr.alpha, cr.threshold, spec).risk == cr.training_objective


def test_crs_matches_joint_grid_oracle():
    rng = np.random.default_rng(2718)
    worse = 0
    for i in range(200):
        n = 30
        y = (rng.random(n) < 0.4).astype(int)
        if y.min() == y.max():
            y[0], y[1] = 0, 1
        Z = np.clip(0.3 * y[:, None] + 0.35 + 0.3 * rng.standard_normal((n, 2)), 0, 1)
        spec = LossSpec(float(rng.choice([0.2, 0.5, 0.8])))
        try:
            rule = crs_joint(Z, y, spec, CrsOptions(seed=i))
        except AllZeroAlpha:
            continue
        grid = joint_grid_minimum(Z, y, spec.lam, 0.02)
        assert rule.training_objective <= grid + 1.0 / n
        worse += rule.training_objective > grid
    assert worse < 200


@given(st.integers(-20, 20), st.integers(0, 2**32 - 1))
def test_joint_rescaling_leaves_classification_unchanged(k, seed):
    # powers of two scale without rounding, so the comparison is exact
    rng = np.random.default_rng(seed)
    Z, _ = _toy(rng, n=50)
    alpha = rng.dirichlet(np.ones(3))
    c = float(np.median(Z @ alpha))
    s = 2.0**k
    np.testing.assert_array_equal(Z @ alpha >= c, Z @ (s * alpha) >= s * c)


def test_rule_invariants():
    with pytest.raises(ValueError):
        EnsembleRule(np.array([0.5, 0.6]), 0.5, ("a", "b"), "two_step", 0.1)
    with pytest.raises(ValueError):
        EnsembleRule(np.array([-0.1, 1.1]), 0.5, ("a", "b"), "two_step", 0.1)
    with pytest.raises(ValueError):
        EnsembleRule(np.array([1.0]), np.inf, ("a",), "two_step", 0.1)
    rule = EnsembleRule(np.array([1.0]), 0.5, ("a",), "two_step", 0.1)
    assert rule.classify(np.array([[0.5], [0.49]])).tolist() == [1, 0]
    with pytest.raises(LibraryMismatch):
        rule.score(np.zeros((3, 2)))


def test_text_round_trip(rng):
    Z, y = _toy(rng)
    rule = crs_joint(Z, y, LossSpec(0.35), CrsOptions(seed=2))
    back = rule_from_text(rule_to_text(rule))
    np.testing.assert_array_equal(back.alpha, rule.alpha)
    assert (back.threshold, back.method, back.lam, back.library) == (
        rule.threshold, rule.method, rule.lam, rule.library
    )
    assert back.training_objective == rule.training_objective


def test_apply_rule(small_dataset):
    spec_a = learners.LearnerSpec("logistic", (), 0)
    spec_b = learners.LearnerSpec("cart", {"max_depth": 3}, 0)
    models = [learners.fit(spec_a, small_dataset), learners.fit(spec_b, small_dataset)]
    X = small_dataset.features
    onehot = EnsembleRule(np.array([1.0, 0.0]), 0.5, (spec_a.learner_id, spec_b.learner_id), "two_step", 0.0)
    expected = (learners.predict(models[0], X) >= 0.5).astype(int)
    np.testing.assert_array_equal(apply_rule(onehot, models, X), expected)
    assert apply_rule(onehot, models, np.empty((0, 3))).shape == (0,)
    with pytest.raises(LibraryMismatch):
        apply_rule(onehot, models[::-1], X)

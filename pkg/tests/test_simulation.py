import numpy as np
import pytest
from scipy.stats import norm

from jointthresh.loss import LossSpec
from jointthresh.simulation import (
    SimConfig,
    bayes_rule,
    bayes_rule_risk,
    generate,
    latent_sd,
    oracle_score_matrix,
    outcome_cutoff,
    transform,
)


def test_cutoff_and_prevalence():
    assert latent_sd() == pytest.approx(np.sqrt(27.4**2 + 3 * 13.7**2 + 100**2))
    assert outcome_cutoff() == pytest.approx(210 + latent_sd() * norm.ppf(0.7))
    s = generate(SimConfig(200_000, "setting1", 5))
    assert s.dataset.prevalence == pytest.approx(0.30, abs=0.005)


def test_settings_and_transform():
    a = generate(SimConfig(100, "setting1", 3))
    b = generate(SimConfig(100, "setting2", 3))
    np.testing.assert_array_equal(a.latent_u, b.latent_u)
    np.testing.assert_array_equal(a.dataset.labels, b.dataset.labels)
    np.testing.assert_array_equal(a.dataset.features, a.latent_u)
    U = a.latent_u
    expected = np.column_stack([
        np.exp(U[:, 0] / 2),
        U[:, 1] / (1 + np.exp(U[:, 0])) + 10,
        (U[:, 0] * U[:, 2] / 25 + 0.6) ** 3,
        (U[:, 1] + U[:, 3] + 20) ** 2,
    ])
    np.testing.assert_allclose(b.dataset.features, expected)
    np.testing.assert_allclose(transform(U), expected)


def test_determinism_and_streams():
    a = generate(SimConfig(50, "setting1", 9))
    b = generate(SimConfig(50, "setting1", 9))
    c = generate(SimConfig(50, "setting1", 9, stream=1))
    np.testing.assert_array_equal(a.dataset.features, b.dataset.features)
    assert not np.array_equal(a.dataset.features, c.dataset.features)


def test_bayes_score_is_calibrated():
    s = generate(SimConfig(200_000, "setting1", 1))
    bins = np.digitize(s.bayes_score, [0.2, 0.4, 0.6, 0.8])
    for b in range(5):
        m = bins == b
        if m.sum() < 500:
            continue
        assert s.dataset.labels[m].mean() == pytest.approx(s.bayes_score[m].mean(), abs=0.01)


def test_bayes_rule_minimizes_risk_among_score_thresholds():
    s = generate(SimConfig(50_000, "setting1", 2))
    spec = LossSpec(0.2)
    best = bayes_rule_risk(s, spec)
    assert bayes_rule(s, spec).mean() == pytest.approx((s.bayes_score >= 0.8).mean())
    from jointthresh.loss import empirical_risk

    for c in (0.6, 0.7, 0.9, 0.95):
        assert empirical_risk(s.dataset.labels, s.bayes_score, c, spec).risk >= best - 0.003


def test_oracle_matrix():
    s = generate(SimConfig(30, "setting2", 0))
    z = oracle_score_matrix(s)
    assert z.K == 1 and z.learner_ids == ("bayes_score",)


def test_bad_config():
    with pytest.raises(ValueError):
        SimConfig(0)
    with pytest.raises(ValueError):
        SimConfig(10, "setting3")
    with pytest.raises(ValueError):
        generate(SimConfig(1))

"""Kang-Schafer style data-generating mechanisms with a known Bayes rule.

A latent score ``y~ = 210 + U b + eps`` with ``U ~ N(0, I_4)`` and
``eps ~ N(0, 100^2)`` is dichotomized at the cutoff giving the target
prevalence. Setting ``observed_u`` exposes U itself; ``transformed_x``
exposes only the nonlinear transform g(U).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .data import Dataset
from .loss import empirical_risk
from .seeding import derive_seed
from .stacking import ScoreMatrix

INTERCEPT = 210.0
COEF = np.array([27.4, 13.7, 13.7, 13.7])
NOISE_SD = 100.0
SETTINGS = ("observed_u", "transformed_x")
_ALIASES = {"setting1": "observed_u", "setting2": "transformed_x", "1": "observed_u", "2": "transformed_x"}


def resolve_setting(name):
    name = _ALIASES.get(str(name), str(name))
    if name not in SETTINGS:
        raise ValueError(f"unknown simulation setting {name!r}; use setting1/setting2")
    return name


@dataclass(frozen=True)
class SimConfig:
    n: int
    setting: str = "observed_u"
    seed: int = 0
    target_prevalence: float = 0.30
    stream: int = 0  # independent sample for the same seed, e.g. 0 = training, 1 = test

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 0.0 < self.target_prevalence < 1.0:
            raise ValueError("target prevalence must lie in (0, 1)")
        object.__setattr__(self, "setting", resolve_setting(self.setting))


@dataclass(frozen=True, eq=False)
class SimSample:
    dataset: Dataset
    latent_u: np.ndarray
    bayes_score: np.ndarray
    outcome_cutoff: float


def latent_sd():
    return float(np.sqrt(COEF @ COEF + NOISE_SD**2))


def outcome_cutoff(target_prevalence=0.30):
    """Upper ``target_prevalence`` quantile of the latent score's N(210, sd^2) law."""
    return INTERCEPT + latent_sd() * float(norm.ppf(1.0 - target_prevalence))


def transform(U):
    u1, u2, u3, u4 = U.T
    return np.column_stack([
        np.exp(u1 / 2.0),
        u2 / (1.0 + np.exp(u1)) + 10.0,
        (u1 * u3 / 25.0 + 0.6) ** 3,
        (u2 + u4 + 20.0) ** 2,
    ])


def bayes_score(U, cutoff):
    """P(Y = 1 | U) = P(eps >= cutoff - 210 - U b)."""
    return norm.sf((cutoff - INTERCEPT - U @ COEF) / NOISE_SD)


def _rng(cfg):
    # Philox is counter based; numpy's normal sampler is the ziggurat method
    key = derive_seed(cfg.seed, "simulation", cfg.stream)
    return np.random.Generator(np.random.Philox(key))


def generate(cfg):
    rng = _rng(cfg)
    U = rng.standard_normal((cfg.n, 4))
    eps = NOISE_SD * rng.standard_normal(cfg.n)
    latent = INTERCEPT + U @ COEF + eps
    cutoff = outcome_cutoff(cfg.target_prevalence)
    labels = (latent >= cutoff).astype(np.int64)
    if cfg.setting == "observed_u":
        X, names = U, ("u1", "u2", "u3", "u4")
    else:
        X, names = transform(U), ("x1", "x2", "x3", "x4")
    return SimSample(
        dataset=_dataset(X, labels, names),
        latent_u=U,
        bayes_score=bayes_score(U, cutoff),
        outcome_cutoff=cutoff,
    )


def _dataset(X, labels, names):
    if X.shape[0] < 2:
        # Dataset needs two rows; callers asking for n=1 get the raw arrays only
        raise ValueError("simulated datasets need n >= 2")
    return Dataset(X, labels, ("continuous",) * 4, names)


def bayes_rule(sample, spec):
    return (sample.bayes_score >= 1.0 - spec.lam).astype(np.int64)


def bayes_rule_risk(sample, spec):
    """Empirical weighted risk of the Bayes rule ``1{P(Y=1|U) >= 1 - lambda}`` on the sample."""
    return empirical_risk(sample.dataset.labels, sample.bayes_score, 1.0 - spec.lam, spec).risk


def oracle_score_matrix(sample):
    """One-column score matrix holding the true probability score."""
    return ScoreMatrix(sample.bayes_score[:, None], ("bayes_score",))

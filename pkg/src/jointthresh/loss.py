"""Weighted misclassification loss and risk.

A false negative (y=1 classified 0) costs ``lam``; a false positive costs
``1 - lam``. Classification is always ``score >= c``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, ZeroReference


@dataclass(frozen=True)
class LossSpec:
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def max_loss(self):
        return max(self.lam, 1.0 - self.lam)


@dataclass(frozen=True)
class RiskReport:
    risk: float
    fnr: float
    fpr: float
    prevalence: float
    n: int
    false_negatives: int
    false_positives: int
    missing_class: bool = False  # a class was absent; its conditional rate is reported as 0


def weighted_loss(y, a, spec):
    if y == 1 and a == 0:
        return spec.lam
    if y == 0 and a == 1:
        return 1.0 - spec.lam
    return 0.0


def risk_from_counts(fn, fp, n, lam):
    """Empirical risk from error counts; every risk in the package goes through here."""
    return (lam * fn + (1.0 - lam) * fp) / n


def empirical_risk(labels, scores, c, spec):
    labels = np.asarray(labels).ravel()
    scores = np.asarray(scores, dtype=float).ravel()
    if labels.shape != scores.shape:
        raise LengthMismatch(f"{labels.size} labels vs {scores.size} scores")
    n = labels.size
    if n == 0:
        raise EmptyInput("empirical risk of an empty sample")
    positive = scores >= c
    is_pos = labels == 1
    n_pos = int(is_pos.sum())
    n_neg = n - n_pos
    fn = int(np.count_nonzero(is_pos & ~positive))
    fp = int(np.count_nonzero(~is_pos & positive))
    return RiskReport(
        risk=risk_from_counts(fn, fp, n, spec.lam),
        fnr=fn / n_pos if n_pos else 0.0,
        fpr=fp / n_neg if n_neg else 0.0,
        prevalence=n_pos / n,
        n=n,
        false_negatives=fn,
        false_positives=fp,
        missing_class=(n_pos == 0 or n_neg == 0),
    )


def relative_difference(risk, reference_risk):
    if not reference_risk > 0:
        raise ZeroReference(f"reference risk must be positive, got {reference_risk}")
    return (risk - reference_risk) / reference_risk

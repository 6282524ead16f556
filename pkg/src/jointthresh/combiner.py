"""Ensemble rules ``1{sum_k alpha_k score_k >= c}`` and the three ways to derive them.

* ``conditional``: NNLS weights from Z, threshold searched on full-data scores.
* ``two_step``: NNLS weights from Z, threshold searched on Z @ alpha.
* ``crs``: weights and threshold searched jointly over Z by controlled random
  search, started from the two-step solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import learners
from .errors import AllZeroAlpha, EmptyInput, LengthMismatch, LibraryMismatch
from .loss import LossSpec, risk_from_counts
from .nnls import nnls
from .optimizer import CrsOptions, crs2_minimize

METHODS = ("conditional", "two_step", "crs")

# search box for the rescaled weights alpha / max(alpha)
CRS_ALPHA_UPPER = 5.0
CRS_THRESHOLD_MARGIN = 0.5


@dataclass(frozen=True, eq=False)
class EnsembleRule:
    alpha: np.ndarray
    threshold: float
    library: tuple  # learner ids
    method: str
    training_objective: float
    lam: float | None = None
    learner_specs: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).ravel()
        if (a < 0).any():
            raise ValueError(f"negative ensemble weight in {a}")
        if abs(a.sum() - 1.0) > 1e-9:
            raise ValueError(f"ensemble weights sum to {a.sum()!r}, not 1")
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if len(self.library) != a.size:
            raise ValueError(f"{a.size} weights for {len(self.library)} learners")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "library", tuple(self.library))

    @property
    def K(self):
        return self.alpha.size

    def score(self, score_matrix):
        S = np.asarray(getattr(score_matrix, "values", score_matrix), dtype=float)
        if S.ndim != 2 or S.shape[1] != self.K:
            raise LibraryMismatch(f"rule has {self.K} learners, scores have shape {S.shape}")
        return S @ self.alpha

    def classify(self, score_matrix):
        return (self.score(score_matrix) >= self.threshold).astype(np.int64)


def _check_xy(scores, labels):
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.size} scores vs {labels.size} labels")
    if scores.size == 0:
        raise EmptyInput("threshold search on an empty sample")
    return scores, labels


def _midpoint(a, b):
    m = a + (b - a) / 2.0
    return m if a < m <= b else b


def threshold_line_search(scores, labels, spec):
    """Exact minimizer of the empirical risk over the threshold.

    Candidates are ``min - 1``, the midpoints between adjacent distinct
    scores, and ``max + 1``, which between them realize every achievable
    classification. Ties go to the largest minimizing candidate.

    Returns
    -------
    (c, risk)
    """
    scores, labels = _check_xy(scores, labels)
    uniq, inv = np.unique(scores, return_inverse=True)
    is_pos = labels == 1
    pos_counts = np.bincount(inv, weights=is_pos, minlength=uniq.size).astype(np.int64)
    neg_counts = np.bincount(inv, weights=~is_pos, minlength=uniq.size).astype(np.int64)
    # candidate j classifies score >= uniq[j] as positive (j = m: nothing positive)
    fn = np.concatenate([[0], np.cumsum(pos_counts)])
    fp = neg_counts.sum() - np.concatenate([[0], np.cumsum(neg_counts)])
    risks = risk_from_counts(fn, fp, scores.size, spec.lam)
    j = int(np.flatnonzero(risks == risks.min())[-1])
    if j == 0:
        c = uniq[0] - 1.0
    elif j == uniq.size:
        c = uniq[-1] + 1.0
    else:
        c = _midpoint(uniq[j - 1], uniq[j])
    return float(c), float(risks[j])


def _labels(labels, n):
    y = np.asarray(labels).ravel()
    if y.size != n:
        raise LengthMismatch(f"{y.size} labels for {n} rows")
    return y


def nnls_weights(z, labels):
    """NNLS of labels on Z, normalized to the simplex."""
    Z = np.asarray(getattr(z, "values", z), dtype=float)
    y = _labels(labels, Z.shape[0]).astype(float)
    sol = nnls(Z, y)
    if sol.all_zero:
        raise AllZeroAlpha(
            "NNLS of the labels on Z returned the zero vector; no learner beats the intercept"
        )
    return sol.coefficients / sol.coefficients.sum()


def _learner_ids(z):
    ids = getattr(z, "learner_ids", None)
    if ids is None:
        ids = tuple(f"learner_{k + 1}" for k in range(np.shape(z)[1]))
    return tuple(ids)


def _learner_specs(z):
    specs = tuple(getattr(z, "learners", ()))
    return specs if all(isinstance(s, learners.LearnerSpec) for s in specs) else ()


def conditional_thresholding(z, full, labels, spec, alpha=None):
    Z = np.asarray(getattr(z, "values", z), dtype=float)
    F = np.asarray(getattr(full, "values", full), dtype=float)
    if Z.shape != F.shape:
        raise LibraryMismatch(f"Z has shape {Z.shape}, full predictions {F.shape}")
    if _learner_ids(z) != _learner_ids(full):
        raise LibraryMismatch("Z and full predictions come from different libraries")
    y = _labels(labels, Z.shape[0])
    alpha = nnls_weights(Z, y) if alpha is None else np.asarray(alpha, dtype=float)
    c, risk = threshold_line_search(F @ alpha, y, spec)
    return EnsembleRule(alpha, c, _learner_ids(z), "conditional", risk, spec.lam, _learner_specs(z))


def two_step(z, labels, spec, alpha=None):
    Z = np.asarray(getattr(z, "values", z), dtype=float)
    y = _labels(labels, Z.shape[0])
    alpha = nnls_weights(Z, y) if alpha is None else np.asarray(alpha, dtype=float)
    c, risk = threshold_line_search(Z @ alpha, y, spec)
    return EnsembleRule(alpha, c, _learner_ids(z), "two_step", risk, spec.lam, _learner_specs(z))


def crs_joint(z, labels, spec, opts=None, alpha=None):
    """Joint search of weights and threshold over the cross-validated scores.

    Columns are reordered so the largest NNLS weight comes first and weights
    are rescaled to make it 1. CRS then searches ``[0, 5]^K`` for the weights
    and the initial combined-score range widened by 0.5 for the threshold.
    The solution is normalized by the weight sum, its threshold re-searched
    exactly at the found weights, and it replaces the two-step solution only
    if its training risk is strictly lower.
    """
    opts = opts or CrsOptions()
    Z = np.asarray(getattr(z, "values", z), dtype=float)
    y = _labels(labels, Z.shape[0])
    n, K = Z.shape
    base_alpha = nnls_weights(Z, y) if alpha is None else np.asarray(alpha, dtype=float)
    base_c, base_risk = threshold_line_search(Z @ base_alpha, y, spec)

    order = np.argsort(-base_alpha, kind="stable")
    Zs = np.ascontiguousarray(Z[:, order])
    a0 = base_alpha[order] / base_alpha[order][0]
    s0 = Zs @ a0
    c0, _ = threshold_line_search(s0, y, spec)

    is_pos = y == 1
    lam = spec.lam

    def objective(t):
        positive = Zs @ t[1:] >= t[0]
        fn = np.count_nonzero(is_pos & ~positive)
        fp = np.count_nonzero(~is_pos & positive)
        return risk_from_counts(fn, fp, n, lam)

    lower = np.concatenate([[s0.min() - CRS_THRESHOLD_MARGIN], np.zeros(K)])
    upper = np.concatenate([[s0.max() + CRS_THRESHOLD_MARGIN], np.full(K, CRS_ALPHA_UPPER)])
    run_opts = CrsOptions(
        population_size=opts.population_size,
        max_evaluations=opts.max_evaluations,
        xtol_rel=opts.xtol_rel,
        seed=opts.seed,
        initial_point=tuple(np.concatenate([[c0], a0])),
        stall_factor=opts.stall_factor,
    )
    result = crs2_minimize(objective, lower, upper, run_opts)

    diagnostics = {
        "evaluations": result.evaluations,
        "stop_reason": result.stop_reason,
        "optimizer_value": result.value,
        "initial_value": base_risk,
        "improved": False,
    }
    alpha_out, c_out, risk_out = base_alpha, base_c, base_risk
    weight_sum = result.point[1:].sum()
    if weight_sum > 0:
        cand = np.empty(K)
        cand[order] = result.point[1:] / weight_sum
        cand = cand / cand.sum()
        cand_c, cand_risk = threshold_line_search(Z @ cand, y, spec)
        if cand_risk < base_risk:
            alpha_out, c_out, risk_out = cand, cand_c, cand_risk
            diagnostics["improved"] = True
    return EnsembleRule(
        alpha_out, c_out, _learner_ids(z), "crs", risk_out, spec.lam, _learner_specs(z), diagnostics
    )


def derive_rule(method, z, full, labels, spec, crs_options=None, alpha=None):
    if method == "conditional":
        return conditional_thresholding(z, full, labels, spec, alpha=alpha)
    if method == "two_step":
        return two_step(z, labels, spec, alpha=alpha)
    if method == "crs":
        return crs_joint(z, labels, spec, crs_options, alpha=alpha)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def apply_rule(rule, models, features):
    """Classify new rows with a rule and the library models fit on the training data."""
    models = list(models)
    ids = tuple(m.spec.learner_id for m in models)
    if ids != rule.library:
        raise LibraryMismatch(f"rule expects learners {rule.library}, got {ids}")
    features = np.asarray(features, dtype=float)
    if features.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    S = np.column_stack([learners.predict(m, features) for m in models])
    return rule.classify(S)


# plain-text persistence ----------------------------------------------------

def rule_to_text(rule):
    lines = [
        f"method={rule.method}",
        f"lambda={'' if rule.lam is None else repr(rule.lam)}",
        "learners=" + ";".join(rule.library),
        "alpha=" + ";".join(repr(float(a)) for a in rule.alpha),
        f"threshold={rule.threshold!r}",
        f"training_objective={rule.training_objective!r}",
    ]
    if rule.learner_specs:
        lines.append("learner_seeds=" + ";".join(str(s.seed) for s in rule.learner_specs))
    return "\n".join(lines) + "\n"


def parse_learner_id(learner_id, seed=0):
    if "(" not in learner_id:
        return learners.LearnerSpec(learner_id, (), seed)
    kind, rest = learner_id.split("(", 1)
    overrides = {}
    for item in rest.rstrip(")").split(","):
        key, value = item.split("=", 1)
        overrides[key] = _number(value)
    return learners.LearnerSpec(kind, overrides, seed)


def _number(text):
    try:
        return int(text)
    except ValueError:
        return float(text)


def rule_from_text(text):
    fields = {}
    for line in text.splitlines():
        if line.strip() and "=" in line:
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
    try:
        library = tuple(fields["learners"].split(";"))
        specs = ()
        if fields.get("learner_seeds"):
            seeds = [int(s) for s in fields["learner_seeds"].split(";")]
            specs = tuple(parse_learner_id(i, s) for i, s in zip(library, seeds))
        return EnsembleRule(
            alpha=[float(a) for a in fields["alpha"].split(";")],
            threshold=float(fields["threshold"]),
            library=library,
            method=fields["method"],
            training_objective=float(fields["training_objective"]),
            lam=float(fields["lambda"]) if fields.get("lambda") else None,
            learner_specs=specs,
        )
    except KeyError as exc:
        raise ValueError(f"rule record lacks field {exc}") from None


def loss_spec(lam):
    return lam if isinstance(lam, LossSpec) else LossSpec(lam)

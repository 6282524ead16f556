"""Training pipelines, out-of-sample and cross-validated risk, and reports."""

from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import learners
from .combiner import METHODS, apply_rule, derive_rule, nnls_weights, threshold_line_search
from .combiner import crs_joint
from .data import fit_standardization, make_folds
from .errors import FoldMissingClass, GridTooLarge
from .loss import LossSpec, empirical_risk, relative_difference, risk_from_counts
from .optimizer import CrsOptions
from .seeding import derive_seed
from .simulation import SimConfig, bayes_rule_risk, generate
from .stacking import build_stack

REPORT_HEADER = (
    "method", "lambda", "K", "risk", "rel_diff", "threshold",
    "alpha_json_free_text", "seed", "runtime_s",
)


def _specs(lams):
    return [lam if isinstance(lam, LossSpec) else LossSpec(lam) for lam in lams]


def crs_options_for(base, seed, lam):
    """Per-(seed, lambda) CRS options derived from the base options."""
    base = base or CrsOptions()
    return CrsOptions(
        population_size=base.population_size,
        max_evaluations=base.max_evaluations,
        xtol_rel=base.xtol_rel,
        seed=derive_seed(seed, "crs", repr(float(lam))),
        stall_factor=base.stall_factor,
    )


@dataclass(eq=False)
class FittedPipeline:
    """Standardization, fitted library, score matrices and derived rules."""

    params: object
    stack: object
    alpha: np.ndarray  # shared NNLS weights
    rules: dict = field(default_factory=dict)  # (method, lambda) -> EnsembleRule
    labels: np.ndarray = None

    def library_scores(self, features):
        X = features if self.params is None else self.params.apply(features)
        return np.column_stack([learners.predict(m, X) for m in self.stack.models])

    def classify(self, method, lam, features):
        X = features if self.params is None else self.params.apply(features)
        return apply_rule(self.rules[(method, float(lam))], self.stack.models, X)


def fit_pipeline(
    library, train, methods, lams, *, inner_folds=10, seed=0, crs_options=None,
    workers=1, standardize=True,
):
    """Fit the library once and derive every requested (method, lambda) rule."""
    params = None
    d = train
    if standardize:
        params = fit_standardization(train.features, train.column_kinds, list(train.column_names))
        d = train.with_features(params.apply(train.features))
    stack = build_stack(library, d, inner_folds, derive_seed(seed, "inner-folds"), workers)
    alpha = nnls_weights(stack.z, d.labels)
    rules = {}
    for spec in _specs(lams):
        for method in methods:
            opts = crs_options_for(crs_options, seed, spec.lam) if method == "crs" else None
            rules[(method, spec.lam)] = derive_rule(
                method, stack.z, stack.full, d.labels, spec, opts, alpha=alpha
            )
    return FittedPipeline(params, stack, alpha, rules, d.labels)


def out_of_sample_eval(rule, models, test, spec):
    """Weighted risk of ``rule`` (with its fitted library) on held-out data."""
    pred = apply_rule(rule, models, test.features)
    y = test.labels
    fn = int(np.count_nonzero((y == 1) & (pred == 0)))
    fp = int(np.count_nonzero((y == 0) & (pred == 1)))
    return risk_from_counts(fn, fp, test.n, spec.lam)


@dataclass(eq=False)
class CvResult:
    risks: dict  # (method, lambda) -> pooled cross-validated risk
    fold_rules: list  # per outer fold: {(method, lambda): EnsembleRule}
    cv_sl_scores: np.ndarray  # out-of-fold score of the NNLS-weighted ensemble
    plan: object


def cv_risk_table(
    methods, library, d, lams, *, outer_folds=10, inner_folds=10, seed=0,
    crs_options=None, workers=1, standardize=True,
):
    """Cross-validated risk of every (method, lambda) pair on shared outer folds.

    Each outer training split gets its own full pipeline (standardization,
    inner stacking CV, rule derivation); losses on the outer validation rows
    are pooled over all folds and divided by n.
    """
    specs = _specs(lams)
    plan = make_folds(d.n, outer_folds, d.labels, derive_seed(seed, "outer-folds"))
    for fold in range(plan.n_folds):
        if not d.subset(plan.training_indices(fold)).has_both_classes():
            raise FoldMissingClass(fold)
    fn = {(m, s.lam): 0 for m in methods for s in specs}
    fp = dict(fn)
    fold_rules = []
    cv_sl = np.empty(d.n)
    for fold in range(plan.n_folds):
        tr, va = plan.training_indices(fold), plan.validation_indices(fold)
        pipe = fit_pipeline(
            library, d.subset(tr), methods, specs, inner_folds=inner_folds,
            seed=derive_seed(seed, "outer-fold", fold), crs_options=crs_options,
            workers=workers, standardize=standardize,
        )
        S = pipe.library_scores(d.features[va])
        cv_sl[va] = S @ pipe.alpha
        y = d.labels[va]
        for key, rule in pipe.rules.items():
            pred = rule.classify(S)
            fn[key] += int(np.count_nonzero((y == 1) & (pred == 0)))
            fp[key] += int(np.count_nonzero((y == 0) & (pred == 1)))
        fold_rules.append(pipe.rules)
    risks = {key: (key[1] * fn[key] + (1.0 - key[1]) * fp[key]) / d.n for key in fn}
    return CvResult(risks, fold_rules, cv_sl, plan)


def cv_risk(method, library, d, spec, outer_D=10, seed=0, **kwargs):
    return cv_risk_table([method], library, d, [spec], outer_folds=outer_D, seed=seed, **kwargs).risks[
        (method, spec.lam)
    ]


def simplex_grid(K, step):
    m = round(1.0 / step)
    if abs(m * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} does not divide 1")
    if K > 3:
        raise GridTooLarge(f"simplex grid limited to K <= 3, got K={K}")
    count = math.comb(m + K - 1, K - 1)
    if count > 2_000_000:
        raise GridTooLarge(f"{count} grid points")
    for parts in itertools.product(range(m + 1), repeat=K - 1):
        if sum(parts) <= m:
            yield np.array([*parts, m - sum(parts)], dtype=float) / m


def grid_selector_check(z, labels, spec, grid_step, crs_options=None):
    """Exhaustive (simplex grid x every threshold) minimum next to the CRS value."""
    Z = np.asarray(getattr(z, "values", z), dtype=float)
    grid_min = min(threshold_line_search(Z @ a, labels, spec)[1] for a in simplex_grid(Z.shape[1], grid_step))
    crs_value = crs_joint(z, labels, spec, crs_options).training_objective
    return grid_min, crs_value


# reports -------------------------------------------------------------------

@dataclass
class ReportRow:
    method: str
    lam: float
    K: int
    risk: float
    rel_diff: float | None
    threshold: float
    alpha: tuple
    seed: int
    runtime_s: float | None = None
    training_objective: float | None = None
    library: str = ""


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_report(path, rows, include_runtime=False):
    method_rank = {m: i for i, m in enumerate(METHODS)}
    ordered = sorted(rows, key=lambda r: (r.K, r.library, method_rank.get(r.method, 99), r.lam, r.seed))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in ordered:
            w.writerow([
                r.method, repr(float(r.lam)), r.K, _fmt(r.risk), _fmt(r.rel_diff),
                _fmt(r.threshold), "[" + ", ".join(repr(float(a)) for a in r.alpha) + "]",
                r.seed, f"{r.runtime_s:.3f}" if include_runtime and r.runtime_s is not None else "",
            ])


def read_report(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@dataclass(eq=False)
class SimulationResult:
    rows: list
    bayes: dict  # lambda -> Bayes-rule risk on the test sample
    pipeline: FittedPipeline


def simulation_study(
    setting, n, seed, library, methods, lams, *, inner_folds=10, crs_options=None,
    workers=1, standardize=True, n_test=None, library_name="",
):
    """Train on one simulated sample, evaluate every rule on an independent one."""
    train = generate(SimConfig(n, setting, seed, stream=0))
    test = generate(SimConfig(n_test or n, setting, seed, stream=1))
    specs = _specs(lams)
    t0 = time.perf_counter()
    pipe = fit_pipeline(
        library, train.dataset, methods, specs, inner_folds=inner_folds, seed=seed,
        crs_options=crs_options, workers=workers, standardize=standardize,
    )
    elapsed = time.perf_counter() - t0
    S = pipe.library_scores(test.dataset.features)
    rows, bayes = [], {}
    for spec in specs:
        ref = bayes_rule_risk(test, spec)
        bayes[spec.lam] = ref
        for method in methods:
            rule = pipe.rules[(method, spec.lam)]
            risk = empirical_risk(test.dataset.labels, rule.score(S), rule.threshold, spec).risk
            rows.append(ReportRow(
                method, spec.lam, rule.K, risk, relative_difference(risk, ref), rule.threshold,
                tuple(rule.alpha), seed, elapsed, rule.training_objective, library_name,
            ))
    return SimulationResult(rows, bayes, pipe)


def write_densities(prefix, sl, cv_sl, z_alpha, thresholds):
    """Per-observation score triples plus a sidecar of per-lambda thresholds."""
    with open(prefix + "_densities.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sl_score", "cv_sl_score", "z_alpha_score"])
        for a, b, c in zip(sl, cv_sl, z_alpha):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
    with open(prefix + "_thresholds.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "sl_threshold", "cv_sl_threshold", "z_alpha_threshold"])
        for lam, (a, b, c) in sorted(thresholds.items()):
            w.writerow([repr(float(lam)), repr(float(a)), repr(float(b)), repr(float(c))])


def density_thresholds(labels, sl, cv_sl, z_alpha, lams):
    out = {}
    for spec in _specs(lams):
        out[spec.lam] = tuple(threshold_line_search(s, labels, spec)[0] for s in (sl, cv_sl, z_alpha))
    return out

"""Stacked ensemble classification under weighted misclassification loss.

Weights and a classification threshold for a Super Learner style ensemble are
derived by conditional thresholding, by a two-step procedure on the
cross-validated score matrix, or jointly by controlled random search.
"""

__version__ = "0.1.0"

from .combiner import (
    METHODS,
    EnsembleRule,
    apply_rule,
    conditional_thresholding,
    crs_joint,
    derive_rule,
    nnls_weights,
    rule_from_text,
    rule_to_text,
    threshold_line_search,
    two_step,
)
from .data import Dataset, FeatureStandardizer, FoldPlan, load_csv, make_folds, standardize, write_csv
from .estimator import SuperLearnerThresholdClassifier
from .evaluation import cv_risk, cv_risk_table, fit_pipeline, out_of_sample_eval, simulation_study
from .learners import LIBRARIES, LearnerSpec, make_library
from .loss import LossSpec, empirical_risk, relative_difference, weighted_loss
from .nnls import nnls
from .optimizer import CrsOptions, crs2_minimize
from .simulation import SimConfig, bayes_rule_risk, generate
from .stacking import build_stack

__all__ = [
    "METHODS", "EnsembleRule", "apply_rule", "conditional_thresholding", "crs_joint",
    "derive_rule", "nnls_weights", "rule_from_text", "rule_to_text", "threshold_line_search",
    "two_step", "Dataset", "FeatureStandardizer", "FoldPlan", "load_csv", "make_folds",
    "standardize", "write_csv", "SuperLearnerThresholdClassifier", "cv_risk", "cv_risk_table",
    "fit_pipeline", "out_of_sample_eval", "simulation_study", "LIBRARIES", "LearnerSpec",
    "make_library", "LossSpec", "empirical_risk", "relative_difference", "weighted_loss",
    "nnls", "CrsOptions", "crs2_minimize", "SimConfig", "bayes_rule_risk", "generate",
    "build_stack",
]

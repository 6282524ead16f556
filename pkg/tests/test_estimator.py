import numpy as np
import pytest
from sklearn.base import clone
from sklearn.model_selection import cross_val_score

from jointthresh import SuperLearnerThresholdClassifier
from jointthresh.errors import LabelNotBinary

PARAMS = dict(library=["logistic", "cart"], inner_folds=3, random_state=0)


def test_get_params_and_clone():
    est = SuperLearnerThresholdClassifier(method="crs", lam=0.3, **PARAMS)
    params = est.get_params()
    assert params["method"] == "crs" and params["lam"] == 0.3
    c = clone(est)
    assert c.get_params() == params and c is not est


def test_fit_predict_string_labels(small_dataset):
    y = np.where(small_dataset.labels == 1, "yes", "no")
    est = SuperLearnerThresholdClassifier(**PARAMS).fit(small_dataset.features, y)
    pred = est.predict(small_dataset.features)
    assert set(pred) <= {"yes", "no"}
    assert est.alpha_.sum() == pytest.approx(1.0)
    scores = est.decision_function(small_dataset.features)
    np.testing.assert_array_equal(pred == "yes", scores >= est.threshold_)
    assert 0 <= est.risk(small_dataset.features, y) <= 0.5


def test_works_inside_sklearn_cv(small_dataset):
    est = SuperLearnerThresholdClassifier(lam=0.5, **PARAMS)
    scores = cross_val_score(est, small_dataset.features, small_dataset.labels, cv=3)
    assert scores.shape == (3,) and (scores > 0.5).all()


def test_rejects_multiclass():
    X = np.arange(12.0).reshape(6, 2)
    with pytest.raises(LabelNotBinary):
        SuperLearnerThresholdClassifier(**PARAMS).fit(X, [0, 1, 2, 0, 1, 2])

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointthresh.data import (
    Dataset,
    FeatureStandardizer,
    fit_standardization,
    load_csv,
    make_folds,
    standardize,
    write_csv,
)
from jointthresh.errors import (
    ConstantColumn,
    LabelNotBinary,
    MissingFile,
    NonNumericCell,
    TooManyFolds,
)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_load_csv_maps_larger_level_to_one(tmp_path):
    path = _write(tmp_path, "id,x,z,diagnosis\n1,0.5,1,M\n2,1.5,0,B\n3,2.5,1,B\n")
    d = load_csv(path, "diagnosis")
    assert d.labels.tolist() == [1, 0, 0]
    assert d.column_names == ("x", "z")
    assert d.column_kinds == ("continuous", "binary")


def test_positive_level_override(tmp_path):
    path = _write(tmp_path, "x,y\n1,a\n2,b\n3,b\n")
    assert load_csv(path, "y", positive_level="a").labels.tolist() == [1, 0, 0]
    with pytest.raises(LabelNotBinary):
        load_csv(path, "y", positive_level="c")


def test_load_csv_errors(tmp_path):
    with pytest.raises(MissingFile):
        load_csv(str(tmp_path / "nope.csv"), "y")
    with pytest.raises(NonNumericCell) as exc:
        load_csv(_write(tmp_path, "x,y\n1,0\nfoo,1\n"), "y")
    assert "foo" in str(exc.value) and "x" in str(exc.value)
    with pytest.raises(LabelNotBinary):
        load_csv(_write(tmp_path, "x,y\n1,0\n2,1\n3,2\n"), "y")
    with pytest.raises(ConstantColumn):
        load_csv(_write(tmp_path, "x,k,y\n1,5,0\n2,5,1\n"), "y")


def test_drop_constant_and_missing_indicator(tmp_path):
    path = _write(tmp_path, "x,k,y\n1,5,0\nNA,5,1\n3,5,1\n")
    with pytest.raises(NonNumericCell):
        load_csv(path, "y", drop_constant=True)
    d = load_csv(path, "y", impute_indicator=True, drop_constant=True)
    assert d.column_names == ("x", "x_missing")
    assert d.features[:, 1].tolist() == [0.0, 1.0, 0.0]
    assert d.features[1, 0] == 0.0


def test_csv_round_trip(tmp_path, small_dataset):
    path = str(tmp_path / "rt.csv")
    write_csv(path, small_dataset)
    back = load_csv(path, "label")
    np.testing.assert_array_equal(back.features, small_dataset.features)
    np.testing.assert_array_equal(back.labels, small_dataset.labels)


def test_standardization_binary_and_continuous():
    X = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 1.0], [6.0, 0.0]])
    d = Dataset(X, np.array([0, 1, 0, 1]), ("continuous", "binary"))
    z, params = standardize(d)
    assert z.features[:, 0].mean() == pytest.approx(0.0)
    assert z.features[:, 0].std(ddof=1) == pytest.approx(1.0)
    assert z.features[:, 1].tolist() == [-1.0, 1.0, 1.0, -1.0]
    np.testing.assert_allclose(params.invert(z.features), X)


def test_standardizer_transformer_reuses_training_params(rng):
    X = rng.normal(5, 3, (50, 2))
    t = FeatureStandardizer().fit(X)
    Y = rng.normal(5, 3, (10, 2))
    np.testing.assert_allclose(t.transform(Y), (Y - X.mean(0)) / X.std(0, ddof=1))
    np.testing.assert_allclose(t.inverse_transform(t.transform(Y)), Y)


def test_fit_standardization_names_optional(rng):
    p = fit_standardization(rng.normal(size=(5, 2)), ("continuous", "continuous"))
    assert p.apply(np.zeros((1, 2))).shape == (1, 2)


def test_too_many_folds():
    with pytest.raises(TooManyFolds):
        make_folds(5, 6, np.array([0, 1, 0, 1, 0]), 0)
    with pytest.raises(TooManyFolds):
        make_folds(5, 1, np.array([0, 1, 0, 1, 0]), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 200), st.integers(2, 12), st.integers(0, 2**31 - 1), st.floats(0.05, 0.95))
def test_folds_partition_and_stratify(n, D, seed, prev):
    D = min(D, n)
    labels = (np.random.default_rng(seed).random(n) < prev).astype(int)
    plan = make_folds(n, D, labels, seed)
    sizes = np.bincount(plan.assignments, minlength=D)
    assert sizes.sum() == n and sizes.max() - sizes.min() <= 1
    pos = np.bincount(plan.assignments[labels == 1], minlength=D)
    assert pos.max() - pos.min() <= 1
    for k in range(D):
        both = np.concatenate([plan.validation_indices(k), plan.training_indices(k)])
        assert sorted(both.tolist()) == list(range(n))
    assert plan == make_folds(n, D, labels, seed)


def test_dataset_validation():
    with pytest.raises(LabelNotBinary):
        Dataset(np.zeros((3, 1)) + [[1], [2], [3]], np.array([0, 1, 2]), ("continuous",))

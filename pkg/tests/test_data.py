import numpy as np
import pytest
from hypothesis import given, strategies as st

from sklr.data import (Dataset, ScalingParams, apply_scaling, fit_scaling, load_csv,
                       load_features, stratified_kfold, validation_split, write_csv)
from sklr.errors import DataError


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_labels_zero_one_map_to_minus_plus(tmp_path):
    d = load_csv(_write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n"), "y")
    assert d.labels.tolist() == [-1.0, 1.0, -1.0]
    assert d.features.tolist() == [[1, 2], [3, 4], [5, 6]]


def test_labels_pm1_identity(tmp_path):
    d = load_csv(_write(tmp_path, "a,y\n1,-1\n2,1\n3,1\n"), 1)
    assert d.labels.tolist() == [-1.0, 1.0, 1.0]


def test_numeric_label_order_not_lexicographic(tmp_path):
    # "10" < "9" as strings but not as numbers
    d = load_csv(_write(tmp_path, "a,y\n1,10\n2,9\n"), "y")
    assert d.labels.tolist() == [1.0, -1.0]


def test_string_labels_lexicographic(tmp_path):
    d = load_csv(_write(tmp_path, "y,a\nspam,1\nham,2\n"), "y")
    assert d.labels.tolist() == [1.0, -1.0]
    assert d.features.tolist() == [[1.0], [2.0]]


def test_label_by_negative_index(tmp_path):
    d = load_csv(_write(tmp_path, "a,b,y\n1,2,0\n3,4,1\n"), "-1")
    assert d.p == 2


def test_non_numeric_cell_names_row_and_column(tmp_path):
    p = _write(tmp_path, "a,b,y\n1,2,0\n3,oops,1\n5,6,0\n")
    with pytest.raises(DataError, match=r"row 2.*'b'"):
        load_csv(p, "y")


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "missing.csv", "y")
    with pytest.raises(DataError, match="empty"):
        load_csv(_write(tmp_path, ""), "y")
    with pytest.raises(DataError, match="exactly 2"):
        load_csv(_write(tmp_path, "a,y\n1,0\n2,1\n3,2\n", "three.csv"), "y")
    with pytest.raises(DataError, match="exactly 2"):
        load_csv(_write(tmp_path, "a,y\n1,0\n2,0\n", "one.csv"), "y")
    with pytest.raises(DataError, match="not found"):
        load_csv(_write(tmp_path, "a,y\n1,0\n2,1\n", "ok.csv"), "label")


def test_header_only_features(tmp_path):
    x = load_features(_write(tmp_path, "a,b,y\n"), "y")
    assert x.shape == (0, 2)


def test_write_then_load_roundtrip(tmp_path, rng):
    X = rng.normal(size=(7, 3))
    y = np.array([1, -1, 1, 1, -1, -1, 1.0])
    write_csv(tmp_path / "r.csv", X, y)
    d = load_csv(tmp_path / "r.csv", "y")
    assert np.array_equal(d.features, X)
    assert np.array_equal(d.labels, y)


def test_dataset_is_read_only():
    d = Dataset(np.zeros((2, 1)), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        d.features[0, 0] = 1.0


def test_dataset_rejects_bad_labels_and_nan():
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.array([1.0, 0.0]))
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan], [1.0]]), np.array([1.0, -1.0]))


def test_scaling_examples():
    d = Dataset(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]), np.array([1.0, -1.0, 1.0]))
    s = fit_scaling(d)
    out = apply_scaling(d, s).features
    assert out[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]
    # out-of-range test values are not clipped
    assert s.transform(np.array([8.0, 5.0]))[0] == 1.5


def test_scaling_dimension_mismatch():
    with pytest.raises(DataError):
        ScalingParams.identity(2).transform(np.zeros(3))


@given(st.integers(2, 30), st.integers(1, 4), st.integers(0, 2**31))
def test_scaling_maps_training_data_into_unit_box(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(scale=rng.uniform(0.1, 100), size=(n, p))
    d = Dataset(X, np.where(np.arange(n) % 2 == 0, 1.0, -1.0))
    out = apply_scaling(d, fit_scaling(d)).features
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_kfold_balanced_exact():
    d = Dataset(np.arange(10.0)[:, None], np.array([1.0, -1.0] * 5))
    plan = stratified_kfold(d, 5, seed=3)
    for f in range(5):
        assert sorted(d.labels[plan.test_indices(f)].tolist()) == [-1.0, 1.0]


def test_kfold_deterministic_and_small_class_error():
    d = Dataset(np.arange(10.0)[:, None], np.array([1.0] * 3 + [-1.0] * 7))
    with pytest.raises(DataError, match="fewer than k"):
        stratified_kfold(d, 5, seed=0)
    d2 = Dataset(np.arange(20.0)[:, None], np.array([1.0, -1.0] * 10))
    assert np.array_equal(stratified_kfold(d2, 5, 7).assignments, stratified_kfold(d2, 5, 7).assignments)


@given(st.integers(2, 6), st.integers(6, 40), st.integers(6, 40), st.integers(0, 2**31))
def test_kfold_is_stratified_partition(k, n_pos, n_neg, seed):
    y = np.array([1.0] * n_pos + [-1.0] * n_neg)
    d = Dataset(np.zeros((y.size, 1)), y)
    plan = stratified_kfold(d, k, seed)
    assert sorted(np.concatenate([plan.test_indices(f) for f in range(k)]).tolist()) == list(range(y.size))
    for label in (1.0, -1.0):
        counts = [int(np.sum(d.labels[plan.test_indices(f)] == label)) for f in range(k)]
        assert max(counts) - min(counts) <= 1
    sizes = [plan.test_indices(f).size for f in range(k)]
    assert max(sizes) - min(sizes) <= 1


def test_validation_split_examples():
    d = Dataset(np.zeros((100, 1)), np.array([1.0, -1.0] * 50))
    tr, val = validation_split(d, 0.05, seed=1)
    assert val.n == 5 and tr.n == 95
    assert val.n_pos >= 1 and val.n_neg >= 1
    d4 = Dataset(np.zeros((4, 1)), np.array([1.0, -1.0, 1.0, -1.0]))
    tr, val = validation_split(d4, 0.5, seed=0)
    assert (tr.n_pos, tr.n_neg, val.n_pos, val.n_neg) == (1, 1, 1, 1)
    d10 = Dataset(np.zeros((10, 1)), np.array([1.0, -1.0] * 5))
    tr, val = validation_split(d10, 0.05, seed=0)
    assert val.n == 1 and tr.n_pos >= 1 and tr.n_neg >= 1


def test_validation_split_error_when_class_would_vanish():
    d = Dataset(np.zeros((3, 1)), np.array([1.0, -1.0, -1.0]))
    with pytest.raises(DataError, match="empty in the training part"):
        validation_split(d, 0.9, seed=0)
    # the lone positive stays in training when the quota allows it
    d4 = Dataset(np.zeros((4, 1)), np.array([1.0, -1.0, -1.0, -1.0]))
    tr, val = validation_split(d4, 0.5, seed=0)
    assert tr.n_pos == 1 and val.n == 2


@given(st.integers(2, 60), st.integers(2, 60), st.floats(0.02, 0.5), st.integers(0, 2**31))
def test_validation_split_partition(n_pos, n_neg, frac, seed):
    y = np.array([1.0] * n_pos + [-1.0] * n_neg)
    d = Dataset(np.arange(y.size, dtype=float)[:, None], y)
    try:
        tr, val = validation_split(d, frac, seed)
    except DataError:
        return
    assert tr.n + val.n == d.n
    assert sorted(np.concatenate([tr.features[:, 0], val.features[:, 0]]).tolist()) == list(range(d.n))
    assert val.n == max(1, int(np.floor(frac * d.n + 0.5)))
    assert tr.n_pos >= 1 and tr.n_neg >= 1

import json

import numpy as np
import pytest

from gsgp_red.data import (
    Dataset,
    DatasetError,
    kfold_split,
    load_csv,
    make_synthetic,
    resolve_dataset,
    rmse,
    target_std,
)


def test_load_csv_with_header(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n1,2,3\n4,5,6\n")
    ds = load_csv(p)
    assert ds.n == 2 and ds.d == 2 and ds.n_columns == 3
    np.testing.assert_array_equal(ds.target, [3, 6])
    assert ds.name == "d"


def test_load_csv_target_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("1,2,3\n4,5,6\n")
    ds = load_csv(p, target_column=0)
    np.testing.assert_array_equal(ds.target, [1, 4])
    np.testing.assert_array_equal(ds.features, [[2, 3], [5, 6]])
    assert load_csv(p, target_column=-2).target.tolist() == [2, 5]
    with pytest.raises(DatasetError):
        load_csv(p, target_column=7)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("1,2\n3,x\n", "line 2, column 2"),
        ("1,2\n3\n", "line 2 has 1 columns"),
        ("1,2\n3,nan\n", "non-numeric"),
        ("", "empty"),
        ("a,b\n", "no data rows"),
        ("1\n2\n", "at least one feature"),
    ],
)
def test_load_csv_errors(tmp_path, body, fragment):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(DatasetError, match=fragment):
        load_csv(p)


def test_missing_file():
    with pytest.raises(DatasetError, match="no such file"):
        load_csv("/nonexistent/file.csv")


def test_dataset_is_read_only():
    ds = Dataset(np.ones((3, 2)), np.zeros(3))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5
    with pytest.raises(DatasetError):
        Dataset(np.ones((3, 2)), np.zeros(2))
    with pytest.raises(DatasetError):
        Dataset(np.ones((2, 1)), [np.inf, 0])


def test_kfold_partition_and_determinism():
    f = kfold_split(103, 5, seed=9)
    assert sorted(f.sizes()) == [20, 20, 21, 21, 21]
    for k in range(5):
        tr, te = f.train_test(k)
        assert len(set(tr) & set(te)) == 0 and len(tr) + len(te) == 103
    assert np.array_equal(f.folds, kfold_split(103, 5, seed=9).folds)
    assert not np.array_equal(f.folds, kfold_split(103, 5, seed=10).folds)
    assert json.loads(f.to_json())["k"] == 5
    with pytest.raises(ValueError):
        kfold_split(3, 5)
    with pytest.raises(ValueError):
        kfold_split(10, 1)


def test_metrics():
    assert target_std(np.array([1.0, 3.0])) == 1.0
    assert rmse([1, 2], [1, 4]) == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        rmse([1], [1, 2])
    with pytest.raises(ValueError):
        target_std(np.array([1.0]))


def test_synthetic_and_resolve():
    ds = make_synthetic("prod-sum", 50, 0.0, seed=1)
    X = ds.features
    np.testing.assert_allclose(ds.target, X[:, 0] * X[:, 1] + X[:, 2])
    assert (np.abs(X) <= 2).all()
    r = resolve_dataset("synthetic:poly3:40:0.1:2")
    assert r.n == 40 and r.d == 2
    with pytest.raises(DatasetError):
        make_synthetic("nope")

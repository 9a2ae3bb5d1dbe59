import numpy as np
import pytest

from salseg import forest
from salseg.forest import (Forest, ForestFormatError, ForestParams, load,
                           predict, predict_many, save, train)


def _rows(X, y):
    return list(zip(X, y))


def test_constant_targets():
    rng = np.random.default_rng(40)
    X = rng.random((20, 5))
    f = train(_rows(X, np.full(20, 0.42)), seed=1)
    for x in rng.random((10, 5)):
        assert predict(f, x) == pytest.approx(0.42, abs=1e-12)


def test_single_row_training_set():
    f = train([(np.array([0.1, 0.2, 0.3]), 0.7)], seed=0)
    assert predict(f, np.array([9.0, 9.0, 9.0])) == pytest.approx(0.7, abs=1e-12)


def test_one_dimensional_split():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    params = ForestParams(n_trees=1, mtry=1, min_leaf=1, bootstrap=False)
    f = train(_rows(X, y), params, seed=0)
    t = f.trees[0]
    # of the midpoints 0.5/1.5/2.5 only 1.5 separates the targets perfectly
    assert t.feature[0] == 0
    assert t.threshold[0] == 1.5
    assert len(t.feature) == 3
    assert predict(f, np.array([0.7])) == 0.0
    assert predict(f, np.array([1.5])) == 0.0  # x <= threshold goes left
    assert predict(f, np.array([1.6])) == 1.0


def test_split_tie_breaks_to_lower_feature():
    # both features order the targets identically; the tie must go to f0
    X = np.array([[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    params = ForestParams(n_trees=1, mtry=2, min_leaf=1, bootstrap=False)
    f = train(_rows(X, y), params, seed=0)
    assert f.trees[0].feature[0] == 0
    assert f.trees[0].threshold[0] == 1.5


def test_deterministic_training():
    rng = np.random.default_rng(41)
    X = rng.random((60, 7))
    y = rng.random(60)
    fa = train(_rows(X, y), seed=5)
    fb = train(_rows(X, y), seed=5)
    fc = train(_rows(X, y), seed=6)
    for ta, tb in zip(fa.trees, fb.trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
        assert np.array_equal(ta.value, tb.value)
    q = rng.random((20, 7))
    assert np.array_equal(predict_many(fa, q), predict_many(fb, q))
    assert not np.array_equal(predict_many(fa, q), predict_many(fc, q))


def test_predictions_within_target_range():
    rng = np.random.default_rng(42)
    for trial in range(5):
        X = rng.random((40, 6))
        y = rng.random(40)
        f = train(_rows(X, y), ForestParams(n_trees=10), seed=trial)
        for x in rng.random((20, 6)) * 3 - 1:
            p = predict(f, x)
            assert y.min() - 1e-12 <= p <= y.max() + 1e-12


def test_forest_beats_constant_predictor():
    rng = np.random.default_rng(43)
    X = rng.random((300, 6))
    y = 0.2 + 0.5 * X[:, 0] + 0.2 * X[:, 3] * X[:, 3]
    f = train(_rows(X, y), ForestParams(n_trees=20, min_leaf=1), seed=2)
    pred = predict_many(f, X)
    mse = np.mean((pred - y) ** 2)
    assert mse < np.var(y)


def test_memorization_without_bootstrap():
    rng = np.random.default_rng(44)
    X = rng.random((50, 4))
    y = rng.random(50)
    params = ForestParams(n_trees=3, mtry=4, min_leaf=1, bootstrap=False)
    f = train(_rows(X, y), params, seed=0)
    assert np.allclose(predict_many(f, X), y, atol=1e-12)


def test_max_depth_limits_tree():
    rng = np.random.default_rng(45)
    X = rng.random((100, 3))
    y = rng.random(100)
    params = ForestParams(n_trees=1, min_leaf=1, max_depth=2, bootstrap=False)
    f = train(_rows(X, y), params, seed=0)
    assert len(f.trees[0].feature) <= 7  # a depth-2 binary tree


def test_monotone_feature_transform_preserves_structure():
    rng = np.random.default_rng(46)
    X = rng.random((40, 3))
    y = 0.3 * X[:, 0] + 0.7 * X[:, 1] + 0.05 * rng.random(40)
    Xt = X.copy()
    Xt[:, 0] = np.exp(X[:, 0])
    params = ForestParams(n_trees=5, mtry=3, min_leaf=2)
    fa = train(_rows(X, y), params, seed=9)
    fb = train(_rows(Xt, y), params, seed=9)
    # identical partitions, so predictions agree at every training point
    assert np.array_equal(predict_many(fa, X), predict_many(fb, Xt))


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(47)
    X = rng.random((80, 33))
    y = rng.random(80)
    f = train(_rows(X, y), seed=3)
    p = tmp_path / "model.bin"
    save(f, p)
    g = load(p)
    assert g.n_features == 33
    assert g.params == f.params
    assert g.seed == f.seed
    q = rng.random((100, 33))
    assert np.array_equal(predict_many(f, q), predict_many(g, q))


def test_save_is_byte_deterministic(tmp_path):
    rng = np.random.default_rng(48)
    X = rng.random((30, 5))
    y = rng.random(30)
    pa = tmp_path / "a.bin"
    pb = tmp_path / "b.bin"
    save(train(_rows(X, y), seed=7), pa)
    save(train(_rows(X, y), seed=7), pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_load_rejects_bad_files(tmp_path):
    rng = np.random.default_rng(49)
    f = train(_rows(rng.random((10, 3)), rng.random(10)), seed=0)
    p = tmp_path / "model.bin"
    save(f, p)
    data = bytearray(p.read_bytes())

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXX" + bytes(data[4:]))
    with pytest.raises(ForestFormatError):
        load(bad_magic)

    bad_version = tmp_path / "version.bin"
    corrupt = bytearray(data)
    corrupt[4] = 99
    bad_version.write_bytes(bytes(corrupt))
    with pytest.raises(ForestFormatError):
        load(bad_version)

    empty = tmp_path / "empty.bin"
    empty.write_bytes(b"")
    with pytest.raises(ForestFormatError):
        load(empty)

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(bytes(data[:len(data) // 2]))
    with pytest.raises(ForestFormatError):
        load(truncated)


def test_train_rejects_bad_rows():
    with pytest.raises(ValueError):
        train([])
    with pytest.raises(ValueError):
        train([(np.array([1.0]), float("nan"))])


def test_predict_rejects_empty_forest():
    f = Forest([], 3, ForestParams(), 0)
    with pytest.raises(ValueError):
        predict(f, np.zeros(3))

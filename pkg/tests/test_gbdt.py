import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone

from sentibench.gbdt import (GbdtClassifier, GbdtModel, Tree, bin_values, build_bins,
                             gbdt_predict_proba, gbdt_train, split_gain)


def test_quantile_bins_by_hand():
    X = np.array([[0], [0], [1], [2], [3], [4]], dtype=float)
    edges = build_bins(X, max_bins=3)[0]
    np.testing.assert_array_equal(edges, [2.0, 4.0])
    np.testing.assert_array_equal(bin_values(np.array([1.0, 2.0, 3.0, 4.0]), edges), [1, 1, 2, 2])


def test_constant_and_two_bin_cases():
    assert build_bins(np.full((5, 1), 3.0))[0].size == 1
    assert build_bins(np.zeros((5, 1)))[0].size == 0
    edges = build_bins(np.array([[0.0], [1.0], [2.0], [5.0]]), max_bins=2)[0]
    assert edges.size == 1


def test_no_information_split_has_zero_gain():
    assert split_gain(1.0, 2.0, 1.0, 2.0, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_single_split_leaf_values():
    X = np.array([[0.0]] * 4 + [[1.0]] * 4)
    y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    model = gbdt_train(X, y, n_trees=1, max_leaves=2, shrinkage=1.0, lambda_l2=1.0)
    tree = model.trees[0]
    assert tree.n_leaves == 2
    left = tree.value[tree.left[0]]
    right = tree.value[tree.right[0]]
    assert left == pytest.approx(-(4 * 0.5) / (4 * 0.25 + 1.0), abs=1e-12)
    assert right == pytest.approx(-(4 * -0.5) / (4 * 0.25 + 1.0), abs=1e-12)
    assert ((gbdt_predict_proba(model, X) > 0.5) == y).all()


def test_constant_features_predict_prior():
    X = np.ones((10, 3))
    y = np.array([0, 1] * 5)
    model = gbdt_train(X, y, n_trees=5)
    assert model.base_score == 0.0
    np.testing.assert_allclose(gbdt_predict_proba(model, X), 0.5)


def test_zero_tree_model_and_zero_leaf_tree():
    model = GbdtModel([], 0.0, 0.1, [np.array([])], 1)
    np.testing.assert_array_equal(gbdt_predict_proba(model, np.zeros((3, 1))), 0.5)
    rng = np.random.default_rng(0)
    X = rng.random((40, 2))
    fitted = gbdt_train(X, (X[:, 0] > 0.5).astype(int), n_trees=3)
    before = fitted.raw_scores(X)
    zero = Tree(np.array([-1]), np.array([0]), np.array([0.0]), np.array([-1]),
                np.array([-1]), np.array([0.0]), 31)
    fitted.trees.append(zero)
    np.testing.assert_array_equal(fitted.raw_scores(X), before)


def test_hand_tree_walk():
    # root: x0 <= 0.5 ? leaf(1.0) : (x1 <= 2 ? leaf(-0.5) : leaf(0.25))
    tree = Tree(feature=np.array([0, -1, 1, -1, -1]), bin_threshold=np.zeros(5, dtype=int),
                threshold=np.array([0.5, 0, 2.0, 0, 0]), left=np.array([1, -1, 3, -1, -1]),
                right=np.array([2, -1, 4, -1, -1]), value=np.array([0, 1.0, 0, -0.5, 0.25]),
                max_leaves=3)
    model = GbdtModel([tree, tree], 0.1, 0.1, [np.array([]), np.array([])], 2)
    X = np.array([[0.0, 9.0], [1.0, 2.0], [1.0, 3.0]])
    np.testing.assert_allclose(model.raw_scores(X), [0.1 + 2.0, 0.1 - 1.0, 0.1 + 0.5])


def test_loss_monotone_and_leaf_budget():
    rng = np.random.default_rng(7)
    X = rng.random((200, 5))
    X[X < 0.4] = 0
    y = (X[:, 1] - X[:, 2] + rng.normal(0, 0.3, 200) > 0).astype(int)
    model = gbdt_train(sp.csr_matrix(X), y, n_trees=30, max_leaves=8)
    assert all(t.n_leaves <= 8 for t in model.trees)
    assert (np.diff(model.train_loss) <= 1e-12).all()


def test_sparse_dense_identical_and_dict_roundtrip():
    rng = np.random.default_rng(8)
    X = rng.random((80, 4)) * (rng.random((80, 4)) > 0.5)
    y = (X[:, 0] > 0.2).astype(int)
    a = gbdt_train(X, y, n_trees=10)
    b = gbdt_train(sp.csr_matrix(X), y, n_trees=10)
    np.testing.assert_array_equal(a.raw_scores(X), b.raw_scores(X))
    c = GbdtModel.from_dict(a.to_dict())
    np.testing.assert_array_equal(c.raw_scores(X), a.raw_scores(X))


def test_min_child_weight_blocks_tiny_leaves():
    X = np.arange(10, dtype=float)[:, None]
    y = np.array([0] * 5 + [1] * 5)
    model = gbdt_train(X, y, n_trees=1, min_child_weight=100.0)
    assert model.trees[0].n_leaves == 1


def test_estimator_api():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    est = clone(GbdtClassifier(n_trees=5)).fit(X, y)
    assert est.predict_proba(X).shape == (4, 2)
    assert (est.predict(X) == y).all()
    with pytest.raises(TypeError):
        gbdt_train(X, y, depth=3)

import numpy as np
import pytest

from ltrboost.criteria import ConfigError
from ltrboost.objectives import GradientProfile, ObjectiveState, get_objective
from ltrboost.tree import RegressionTree, grow, newton_output


def squared_profile(r):
    r = np.asarray(r, dtype=float)
    return GradientProfile(-r, np.full(len(r), 2.0), derivative_additive=True)


def test_budget_two_is_a_stump():
    X = np.arange(6.0)[:, None]
    tree = grow(X, squared_profile([0, 0, 0, 5, 5, 5]), "se", 2)
    assert tree.leaf_count == 2
    assert (tree.feature[0], tree.threshold[0]) == (0, 2.5)


def test_budget_below_two_rejected():
    with pytest.raises(ConfigError):
        grow(np.zeros((2, 1)), squared_profile([1, 2]), "se", 1)


def test_constant_features_give_single_leaf():
    tree = grow(np.ones((4, 2)), squared_profile([1, 2, 3, 4]), "ole", 5)
    assert tree.n_nodes == 1
    assert tree.value[0] == pytest.approx(10 / 8)


def test_fifo_four_clusters():
    x = np.repeat([0.0, 1.0, 2.0, 3.0], 3)[:, None]
    r = np.repeat([0.0, 10.0, 20.0, 30.0], 3)
    tree = grow(x, squared_profile(r), "se", 4)
    # root, then its left child, then its right child
    assert tree.threshold[0] == 1.5
    assert tree.left[0] == 1 and tree.right[0] == 2
    assert tree.threshold[1] == 0.5 and tree.threshold[2] == 2.5
    assert tree.leaf_count == 4
    assert sorted(tree.predict(x).tolist()) == sorted((r / 2).tolist())


def test_depth_first_expands_newest():
    x = np.arange(8.0)[:, None]
    r = np.array([0, 1, 10, 11, 20, 21, 30, 31], dtype=float)
    width = grow(x, squared_profile(r), "se", 4)
    depth = grow(x, squared_profile(r), "se", 4, growth="depth")
    assert width.leaf_count == depth.leaf_count == 4
    # width-first splits both children of the root; depth-first goes down the left branch
    assert not width.is_leaf[1] and not width.is_leaf[2]
    assert not depth.is_leaf[1] and depth.is_leaf[2] and not depth.is_leaf[3]


def test_newton_leaf_is_half_mean_residual():
    tree = grow(np.array([[0.0], [0.0]]), squared_profile([2.0, 4.0]), "se", 2)
    assert tree.value.tolist() == [1.5]


def test_zero_gradient_leaf_and_guard():
    assert newton_output(0.0, 3.0) == 0.0
    assert newton_output(1.0, 0.0) == 0.0
    assert newton_output(1.0, 1e-13) == 0.0


def test_mcrank_leaf_is_weighted_mean(rng):
    from ltrboost.data import RankingDataset
    n, K = 30, 2
    ds = RankingDataset(rng.normal(size=(n, 2)), rng.integers(0, K + 1, size=n), [0], [0, n])
    st = ObjectiveState(rng.normal(size=(n, K + 1)))
    st.refresh()
    profile = get_objective("mcrank").gradients(ds, st, 1)
    tree = grow(ds.X, profile, "ole", 4)
    leaf_of = tree.apply(ds.X)
    r, w = -profile.g / profile.h, profile.h
    for leaf in np.flatnonzero(tree.is_leaf):
        m = leaf_of == leaf
        assert tree.value[leaf] == pytest.approx(np.sum(w[m] * r[m]) / np.sum(w[m]), rel=1e-12)


def test_prediction_routing():
    stump = RegressionTree(np.array([0, -1, -1]), np.array([0.5, 0, 0]), np.array([1, -1, -1]),
                           np.array([2, -1, -1]), np.array([0.0, -1.0, 1.0]))
    assert stump.predict(np.array([[0.4], [0.5], [0.9]])).tolist() == [-1.0, 1.0, 1.0]
    assert RegressionTree.leaf(2.5).predict(np.zeros((3, 4))).tolist() == [2.5] * 3


def test_training_routing_consistent(rng):
    X = rng.normal(size=(50, 4))
    r = rng.normal(size=50)
    tree = grow(X, squared_profile(r), "ole", 8)
    leaf_of = tree.apply(X)
    assert set(leaf_of.tolist()) <= set(np.flatnonzero(tree.is_leaf).tolist())
    for leaf in np.flatnonzero(tree.is_leaf):
        m = leaf_of == leaf
        assert tree.value[leaf] == pytest.approx(r[m].sum() / (2 * m.sum()))


@pytest.mark.parametrize("seed", range(5))
def test_se_ole_rwse_trees_identical_for_squared_loss(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(60, 5)).astype(float)
    profile = squared_profile(rng.normal(size=60))
    trees = [grow(X, profile, c, 10, objective="mart") for c in ("se", "ole", "rwse", "mart")]
    for t in trees[1:]:
        for name in ("feature", "threshold", "left", "right", "value"):
            assert np.array_equal(getattr(t, name), getattr(trees[0], name))


def test_newton_step_never_increases_squared_loss(rng):
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    f = np.zeros(40)
    before = np.sum((f - y) ** 2)
    tree = grow(X, squared_profile(y - f), "se", 6)
    assert np.sum((f + tree.predict(X) - y) ** 2) <= before

import numpy as np
import pytest

from ltrboost.criteria import (CRITERIA, ConfigError, Node, best_split, check_criterion, score_mart,
                               score_ole, score_rwse, score_se, score_split, score_wse, sweep)
from ltrboost.objectives import ObjectiveState, get_objective
from ltrboost.oracle import naive_criterion_scores
from conftest import single_query

X3 = np.array([[0.0], [1.0], [2.0]])


def squared_node(r, X=X3):
    # squared loss at residual r: g = -r, h = 2
    r = np.asarray(r, dtype=float)
    return Node(np.asarray(X, dtype=float), -r, np.full(len(r), 2.0), objective="mart")


def unit_node(r, X=X3):
    r = np.asarray(r, dtype=float)
    return Node(np.asarray(X, dtype=float), -r, np.ones(len(r)))


def test_se_worked_values():
    node = squared_node([1, 2, 6])
    assert score_se(node, 0, 0.5) == pytest.approx(8.0)
    assert score_se(node, 0, 1.5) == pytest.approx(0.5)


def test_se_degenerate_cases():
    assert score_se(squared_node([1, 1, 1, 1], np.arange(4.0)[:, None]), 0, 1.5) == 0
    assert score_se(squared_node([0, 0, 2, 2], np.arange(4.0)[:, None]), 0, 1.5) == 0


def test_rwse_worked_values():
    node = unit_node([1, 2, 6])
    assert score_rwse(node, 0, 0.5) == pytest.approx(-6.0)
    assert score_rwse(node, 0, 1.5) == pytest.approx(-13.5)
    assert score_rwse(unit_node([0, 0, 0]), 0, 0.5) == 0


def test_se_minus_rwse_constant():
    node = unit_node([1, 2, 6])
    for v in (0.5, 1.5):
        assert score_se(node, 0, v) - score_rwse(node, 0, v) == pytest.approx(41 - 27)


def test_ole_worked_values():
    node = squared_node([1, 2, 6])
    assert score_ole(node, 0, 0.5) == pytest.approx(-16.5)
    assert score_ole(node, 0, 1.5) == pytest.approx(-20.25)
    assert score_ole(squared_node([0, 0, 0]), 0, 0.5) == 0


def test_mart_worked_values():
    node = squared_node([1, 2, 6])
    assert score_mart(node, 0, 1.5) == pytest.approx(-40.5)
    assert score_mart(node, 0, 0.5) == pytest.approx(-33.0)
    single = squared_node([5, 0, 0, 0], np.arange(4.0)[:, None])
    assert score_mart(single, 0, 0.5) == pytest.approx(-25.0)


def test_wse_is_weighted_variance_gain():
    node = unit_node([1, 2, 6])
    # unit weights: WSE equals SE minus the parent's sum of squares
    assert score_wse(node, 0, 1.5) == pytest.approx(0.5 - (41 - 27))


@pytest.mark.parametrize("criterion", ["se", "rwse", "ole", "mart"])
def test_all_pick_second_boundary(criterion):
    best = best_split(squared_node([1, 2, 6]), criterion)
    assert (best.feature, best.threshold) == (0, 1.5)
    assert (best.left_count, best.right_count) == (2, 1)


def test_invalid_splits_return_none():
    node = squared_node([1, 2, 6])
    assert score_se(node, 0, -5.0) is None
    assert best_split(squared_node([1, 2, 3], np.ones((3, 1))), "se") is None


def test_identical_features_lower_index_wins(rng):
    x = rng.normal(size=(12, 1))
    node = squared_node(rng.normal(size=12), np.hstack([x, x]))
    for c in CRITERIA:
        assert best_split(node, c).feature == 0


def test_all_equal_residuals_tie_to_first_threshold():
    node = squared_node([3, 3, 3, 3], np.arange(4.0)[:, None])
    assert best_split(node, "se").threshold == 0.5


def test_min_samples_leaf():
    node = squared_node([1, 2, 6, 7], np.arange(4.0)[:, None])
    best = best_split(node, "se", min_samples_leaf=2)
    assert best.left_count == 2 and best.right_count == 2
    assert best_split(node, "se", min_samples_leaf=3) is None


def test_midpoint_of_adjacent_floats():
    a = 1.0
    b = np.nextafter(a, 2.0)
    node = squared_node([0, 5], np.array([[a], [b]]))
    split = best_split(node, "se")
    assert a < split.threshold <= b
    assert (node.X[:, 0] < split.threshold).tolist() == [True, False]


@pytest.mark.parametrize("criterion", CRITERIA)
def test_sweep_matches_two_pass(criterion, rng):
    for _ in range(20):
        n = int(rng.integers(2, 30))
        X = rng.integers(0, 6, size=(n, 3)).astype(float)
        g = rng.normal(size=n)
        h = rng.uniform(0.1, 2.0, size=n)
        node = Node(X, g, h, objective="mart")
        res = sweep(node, criterion)
        for j in range(3):
            for t, s in zip(*res.feature_candidates(j)):
                assert s == pytest.approx(score_split(node, j, t, criterion), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("criterion", ["se", "wse", "rwse", "ole"])
def test_sweep_matches_independent_oracle(criterion, rng):
    for _ in range(20):
        n = int(rng.integers(2, 25))
        x = rng.integers(0, 5, size=n).astype(float)
        g, h = rng.normal(size=n), rng.uniform(0.1, 1.0, size=n)
        res = sweep(Node(x[:, None], g, h), criterion)
        engine = dict(zip(*res.feature_candidates(0)))
        for t, s in naive_criterion_scores(criterion, x, g, h):
            if s is not None:
                assert engine[t] == pytest.approx(s, rel=1e-9, abs=1e-9)


def test_exact_mode_uses_pair_curvature():
    ds = single_query([2, 1, 0], X=[[0.0], [1.0], [2.0]])
    st = ObjectiveState(np.array([2.0, 1.0, 0.0]))
    profile = get_objective("rankexp").gradients(ds, st)
    exact = Node.from_profile(ds.X, profile, exact=True, objective="rankexp")
    additive = Node.from_profile(ds.X, profile, exact=False, objective="rankexp")
    s2, s3 = np.exp(-2), np.exp(-1)
    g12 = -(s2 + s3)
    h3 = s2 + s3
    g3 = s2 + s3
    expected = -(g12 ** 2 / (s2 + s3) + g3 ** 2 / h3)
    assert score_ole(exact, 0, 1.5) == pytest.approx(expected)
    assert score_ole(additive, 0, 1.5) != pytest.approx(expected)
    res = sweep(exact, "ole")
    assert dict(zip(*res.feature_candidates(0)))[1.5] == pytest.approx(expected)


def test_mart_criterion_requires_squared_loss():
    with pytest.raises(ConfigError):
        check_criterion("mart", "lambdamart")
    with pytest.raises(ConfigError):
        check_criterion("gini")


def test_threads_do_not_change_result(rng):
    X = rng.normal(size=(40, 9))
    node = Node(X, rng.normal(size=40), rng.uniform(0.5, 1, size=40))
    a, b = sweep(node, "ole", n_threads=1), sweep(node, "ole", n_threads=4)
    assert np.array_equal(a.scores[a.valid], b.scores[b.valid])
    assert best_split(node, "ole", n_threads=1) == best_split(node, "ole", n_threads=4)

"""Leaf-budgeted regression trees with one-step Newton leaf outputs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .criteria import CURVATURE_EPS, ConfigError, Node, best_split, check_criterion
from .objectives import GradientProfile

GROWTH_POLICIES = ("width", "depth")


@dataclass
class RegressionTree:
    """Flat binary tree; ``feature[i] == -1`` marks node ``i`` as a leaf.

    Routing: a row goes left iff ``x[feature] < threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def leaf(cls, value: float = 0.0) -> "RegressionTree":
        return cls(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([value]))

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def leaf_count(self) -> int:
        return int(self.is_leaf.sum())

    @property
    def max_feature(self) -> int:
        return int(self.feature.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = ~self.is_leaf[node]
        while active.any():
            idx = rows[active]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] < self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = ~self.is_leaf[node[idx]]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def newton_output(d1: float, d2: float) -> float:
    return -d1 / d2 if d2 > CURVATURE_EPS else 0.0


def assign_leaf_outputs(tree: RegressionTree, X: np.ndarray, profile: GradientProfile,
                        exact: bool = True) -> RegressionTree:
    """Set every leaf to ``-L'(o=0) / L''(o=0)`` over the training rows it holds."""
    leaf_of = tree.apply(X)
    value = tree.value.copy()
    for leaf in np.flatnonzero(tree.is_leaf):
        d1, d2 = profile.group_derivatives(leaf_of == leaf, exact=exact)
        value[leaf] = newton_output(d1, d2)
    return RegressionTree(tree.feature, tree.threshold, tree.left, tree.right, value)


def grow(X: np.ndarray, profile: GradientProfile, criterion: str, leaf_budget: int,
         min_samples_leaf: int = 1, exact: bool = True, growth: str = "width",
         objective: str | None = None, n_threads: int = 1) -> RegressionTree:
    """Grow a tree over all rows of ``X`` and fill its leaves with Newton outputs.

    ``growth="width"`` expands the oldest open leaf first (FIFO);
    ``"depth"`` expands the newest, left child before right. Leaves with no
    valid split are dropped from the frontier. Growth stops at
    ``leaf_budget`` leaves or when nothing is expandable.
    """
    if leaf_budget < 2:
        raise ConfigError("leaf_budget must be at least 2")
    if min_samples_leaf < 1:
        raise ConfigError("min_samples_leaf must be at least 1")
    if growth not in GROWTH_POLICIES:
        raise ConfigError(f"unknown growth policy {growth!r}")
    check_criterion(criterion, objective)
    X = np.asarray(X, dtype=np.float64)

    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    frontier = deque([(0, np.arange(X.shape[0]))])
    leaves = 1
    while leaves < leaf_budget and frontier:
        node_id, index = frontier.popleft() if growth == "width" else frontier.pop()
        node = Node.from_profile(X, profile, index, exact=exact, objective=objective)
        split = best_split(node, criterion, min_samples_leaf, n_threads)
        if split is None:
            continue
        goes_left = X[index, split.feature] < split.threshold
        children = []
        for side in (goes_left, ~goes_left):
            children.append(len(feature))
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
        feature[node_id], threshold[node_id] = split.feature, split.threshold
        left[node_id], right[node_id] = children
        leaves += 1
        pending = [(children[0], index[goes_left]), (children[1], index[~goes_left])]
        frontier.extend(pending if growth == "width" else reversed(pending))

    tree = RegressionTree(np.array(feature, dtype=np.int64), np.array(threshold),
                          np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                          np.zeros(len(feature)))
    return assign_leaf_outputs(tree, X, profile, exact=exact)

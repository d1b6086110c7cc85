import numpy as np
import pytest

from ltrboost.data import RankingDataset, make_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synthetic():
    return make_synthetic(n_queries=20, docs_per_query=8, n_features=5, seed=3)


def single_query(labels, X=None, max_label=None):
    labels = np.asarray(labels)
    n = len(labels)
    X = np.zeros((n, 1)) if X is None else np.asarray(X, dtype=float)
    return RankingDataset(X, labels, [1], [0, n], max_label=max_label)

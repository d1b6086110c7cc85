"""NDCG@k and ERR over graded relevance labels.

Gain is ``2**y - 1``, the discount at 1-based rank ``i`` is ``1 / log2(i + 1)``
and ERR's stop probability is ``(2**y - 1) / 2**K``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import RankingDataset

DEFAULT_CUTOFFS = (1, 3, 10)


def _gains(labels) -> np.ndarray:
    return np.exp2(np.asarray(labels, dtype=np.float64)) - 1.0


def discounts(n: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))


def _ordered_sum(terms: np.ndarray) -> float:
    # accumulate strictly in rank order so results do not depend on SIMD reductions
    return float(np.cumsum(terms)[-1]) if len(terms) else 0.0


def dcg_at_k(labels, k: int | None = None) -> float:
    gains = _gains(labels)[:k]
    return _ordered_sum(gains / np.log2(np.arange(2, len(gains) + 2, dtype=np.float64)))


def ndcg_at_k(labels: Sequence[int], k: int, max_label: int | None = None,
              empty_value: float = 1.0) -> float:
    """NDCG@k of labels listed in ranked order.

    ``max_label`` is accepted for signature symmetry with :func:`err` and is
    unused. A list whose ideal DCG is zero scores ``empty_value``.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label list")
    if k < 1:
        raise ValueError("cutoff k must be >= 1")
    ideal = dcg_at_k(np.sort(labels)[::-1], k)
    if ideal == 0.0:
        return empty_value
    return dcg_at_k(labels, k) / ideal


def err(labels: Sequence[int], max_label: int) -> float:
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label list")
    stop = _gains(labels) / 2.0 ** max_label
    # probability the user is still scanning when reaching each rank
    reach = np.concatenate([[1.0], np.cumprod(1.0 - stop)[:-1]])
    ranks = np.arange(1, len(labels) + 1)
    return _ordered_sum(reach * stop / ranks)


def rank_order(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score; equal scores keep input order."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


@dataclass
class MetricReport:
    ndcg_at: dict[int, float]
    err: float
    per_query: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def as_percentages(self) -> dict[str, float]:
        out = {f"NDCG@{k}": 100.0 * v for k, v in self.ndcg_at.items()}
        out["ERR"] = 100.0 * self.err
        return out

    def format(self) -> str:
        return "  ".join(f"{name} {value:.2f}" for name, value in self.as_percentages().items())


def evaluate(ds: RankingDataset, scores, cutoffs: Sequence[int] = DEFAULT_CUTOFFS,
             empty_value: float = 1.0) -> MetricReport:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (ds.num_docs,):
        raise ValueError(f"expected {ds.num_docs} scores, got {scores.shape}")
    per_query = {f"ndcg@{k}": np.empty(ds.num_queries) for k in cutoffs}
    per_query["err"] = np.empty(ds.num_queries)
    for i, sl in enumerate(ds.query_slices()):
        ranked = ds.y[sl][rank_order(scores[sl])]
        for k in cutoffs:
            per_query[f"ndcg@{k}"][i] = ndcg_at_k(ranked, k, empty_value=empty_value)
        per_query["err"][i] = err(ranked, ds.max_label)
    return MetricReport(
        ndcg_at={k: float(per_query[f"ndcg@{k}"].mean()) for k in cutoffs},
        err=float(per_query["err"].mean()),
        per_query=per_query,
    )

"""Query-grouped ranking datasets and the LETOR/SVMLight rank text format."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class ParseError(ValueError):
    """Raised for malformed LETOR input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class QueryGroup:
    query_id: int
    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class RankingDataset:
    """Documents stored query-contiguously.

    ``offsets`` has one more entry than ``query_ids``; the documents of query
    ``i`` are rows ``offsets[i]:offsets[i + 1]`` of ``X`` and ``y``.
    """

    X: np.ndarray
    y: np.ndarray
    query_ids: np.ndarray
    offsets: np.ndarray
    max_label: int | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        qids = np.asarray(self.query_ids, dtype=np.int64)
        offsets = np.asarray(self.offsets, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n_docs, n_features) matching y")
        if offsets.shape != (qids.shape[0] + 1,) or offsets[0] != 0 or offsets[-1] != len(y):
            raise ValueError("offsets do not partition the documents")
        if np.any(np.diff(offsets) < 1):
            raise ValueError("every query needs at least one document")
        if len(np.unique(qids)) != len(qids):
            raise ValueError("query ids must be unique")
        if self.max_label is None:
            object.__setattr__(self, "max_label", int(y.max()) if len(y) else 0)
        if len(y) and (y.min() < 0 or y.max() > self.max_label):
            raise ValueError(f"labels must lie in [0, {self.max_label}]")
        for name, value in (("X", X), ("y", y), ("query_ids", qids), ("offsets", offsets)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_groups(cls, groups: Sequence[QueryGroup], max_label: int | None = None) -> "RankingDataset":
        if not groups:
            raise ValueError("dataset has no queries")
        X = np.vstack([np.atleast_2d(g.features) for g in groups])
        y = np.concatenate([np.asarray(g.labels, dtype=np.int64) for g in groups])
        offsets = np.concatenate([[0], np.cumsum([len(g) for g in groups])])
        if max_label is None:
            max_label = int(y.max())
        return cls(X, y, np.array([g.query_id for g in groups]), offsets, max_label)

    @property
    def num_docs(self) -> int:
        return self.X.shape[0]

    @property
    def num_features(self) -> int:
        return self.X.shape[1]

    @property
    def num_queries(self) -> int:
        return len(self.query_ids)

    @property
    def queries(self) -> list[QueryGroup]:
        return [self.query(i) for i in range(self.num_queries)]

    def query(self, i: int) -> QueryGroup:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return QueryGroup(int(self.query_ids[i]), self.X[lo:hi], self.y[lo:hi])

    def query_slices(self):
        for i in range(self.num_queries):
            yield slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @cached_property
    def query_index(self) -> np.ndarray:
        """Query position of every document."""
        return np.repeat(np.arange(self.num_queries), np.diff(self.offsets))

    @cached_property
    def preference_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All within-query pairs ``(hi, lo)`` with ``y[hi] > y[lo]``.

        Pairs are listed query by query, then by ``hi`` and ``lo`` in document
        order, which fixes the reduction order of every pair-wise sum.
        """
        his, los = [], []
        for sl in self.query_slices():
            labels = self.y[sl]
            hi, lo = np.nonzero(labels[:, None] > labels[None, :])
            his.append(hi + sl.start)
            los.append(lo + sl.start)
        return np.concatenate(his), np.concatenate(los)

    def with_num_features(self, num_features: int) -> "RankingDataset":
        """Zero-pad the feature matrix to ``num_features`` columns."""
        if num_features < self.num_features:
            raise ValueError(
                f"dataset has {self.num_features} features, more than {num_features}")
        if num_features == self.num_features:
            return self
        X = np.zeros((self.num_docs, num_features))
        X[:, : self.num_features] = self.X
        return RankingDataset(X, self.y, self.query_ids, self.offsets, self.max_label)

    def subset(self, query_positions: Sequence[int]) -> "RankingDataset":
        return RankingDataset.from_groups([self.query(int(i)) for i in query_positions], self.max_label)


def _parse_line(line: str, lineno: int):
    body = line.split("#", 1)[0].split()
    if not body:
        return None
    if len(body) < 2:
        raise ParseError(lineno, "expected '<label> qid:<id> ...'")
    try:
        label = int(body[0])
    except ValueError:
        raise ParseError(lineno, f"label {body[0]!r} is not an integer") from None
    if label < 0:
        raise ParseError(lineno, f"negative label {label}")
    key, _, qid = body[1].partition(":")
    if key != "qid" or not qid:
        raise ParseError(lineno, f"expected qid:<id>, got {body[1]!r}")
    try:
        qid = int(qid)
    except ValueError:
        raise ParseError(lineno, f"query id {qid!r} is not an integer") from None
    feats = {}
    for token in body[2:]:
        idx, sep, val = token.partition(":")
        if not sep:
            raise ParseError(lineno, f"malformed feature {token!r}")
        try:
            idx, val = int(idx), float(val)
        except ValueError:
            raise ParseError(lineno, f"malformed feature {token!r}") from None
        if idx < 0:
            raise ParseError(lineno, f"negative feature index {idx}")
        feats[idx] = val
    return label, qid, feats


def parse_letor(lines: Iterable[str], num_features: int | None = None,
                max_label: int | None = None) -> RankingDataset:
    """Parse LETOR/SVMLight rank lines into a dense dataset.

    Documents are grouped by qid (lines of one query need not be adjacent),
    keeping file order inside each query and ordering queries by first
    appearance. A feature written as ``i:v`` lands in column ``i``; absent
    features are 0.0 and the width is ``1 + max index`` unless
    ``num_features`` fixes it.
    """
    groups: dict[int, list] = {}
    max_index = -1
    for lineno, line in enumerate(lines, start=1):
        parsed = _parse_line(line, lineno)
        if parsed is None:
            continue
        label, qid, feats = parsed
        if feats:
            max_index = max(max_index, max(feats))
        groups.setdefault(qid, []).append((label, feats))
    if not groups:
        raise ValueError("no documents in input")

    width = max_index + 1
    if num_features is not None:
        if width > num_features:
            raise ValueError(f"feature index {max_index} out of range for {num_features} features")
        width = num_features
    out = []
    for qid, docs in groups.items():
        X = np.zeros((len(docs), width))
        for row, (_, feats) in enumerate(docs):
            for idx, val in feats.items():
                X[row, idx] = val
        out.append(QueryGroup(qid, X, np.array([d[0] for d in docs], dtype=np.int64)))
    ds = RankingDataset.from_groups(out, max_label)
    return ds


def load_letor(path: str | os.PathLike, num_features: int | None = None,
               max_label: int | None = None) -> RankingDataset:
    with open(path, encoding="utf-8") as fh:
        return parse_letor(fh, num_features=num_features, max_label=max_label)


def serialize_letor(ds: RankingDataset) -> str:
    """Write every column explicitly so the width survives a round trip."""
    buf = io.StringIO()
    for i in range(ds.num_queries):
        q = ds.query(i)
        for row, label in zip(q.features, q.labels):
            feats = " ".join(f"{j}:{float(v)!r}" for j, v in enumerate(row))
            buf.write(f"{int(label)} qid:{q.query_id} {feats}\n")
    return buf.getvalue()


@dataclass(frozen=True)
class DatasetStats:
    num_queries: int
    num_docs: int
    docs_per_query: int
    num_features: int

    def as_tuple(self):
        return (self.num_queries, self.num_docs, self.docs_per_query, self.num_features)


def dataset_stats(ds: RankingDataset) -> DatasetStats:
    return DatasetStats(ds.num_queries, ds.num_docs,
                        int(round(ds.num_docs / ds.num_queries)), ds.num_features)


def split_queries(ds: RankingDataset, fractions: Sequence[float], seed: int = 0) -> list[RankingDataset]:
    """Shuffle queries with a seeded generator and cut them by ``fractions``."""
    fractions = np.asarray(fractions, dtype=float)
    if np.any(fractions <= 0) or not np.isclose(fractions.sum(), 1.0):
        raise ValueError("fractions must be positive and sum to 1")
    order = np.random.default_rng(seed).permutation(ds.num_queries)
    cuts = np.round(np.cumsum(fractions)[:-1] * ds.num_queries).astype(int)
    parts = np.split(order, cuts)
    if any(len(p) == 0 for p in parts):
        raise ValueError("a split would be empty")
    return [ds.subset(np.sort(p)) for p in parts]


def make_synthetic(n_queries: int = 200, docs_per_query: int = 10, n_features: int = 20,
                   max_label: int = 4, seed: int = 0, noise: float = 0.5) -> RankingDataset:
    """Random dataset whose labels depend on a hidden linear score plus noise."""
    rng = np.random.default_rng(seed)
    n = n_queries * docs_per_query
    X = rng.normal(size=(n, n_features))
    w = rng.normal(size=n_features)
    latent = X @ w / np.sqrt(n_features) + noise * rng.normal(size=n)
    # per-query quantile bins keep every label value in play
    y = np.empty(n, dtype=np.int64)
    for q in range(n_queries):
        sl = slice(q * docs_per_query, (q + 1) * docs_per_query)
        ranks = np.argsort(np.argsort(latent[sl]))
        y[sl] = (ranks * (max_label + 1)) // docs_per_query
    offsets = np.arange(0, n + 1, docs_per_query)
    return RankingDataset(X, y, np.arange(1, n_queries + 1), offsets, max_label)

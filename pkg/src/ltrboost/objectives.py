"""Objective losses with per-document derivatives at a zero score offset.

Every objective reports, for the current scores ``f``, the first and second
derivative ``g(d)``, ``h(d)`` of the loss when document ``d`` alone is shifted
by ``o`` and ``o = 0``. For derivative-additive losses the derivative of a
whole group shifted together is the sum over the group. The pair-wise losses
are not additive: a pair whose two documents receive the same shift does not
change the loss, so exact group curvature subtracts ``2 * c`` for every such
pair with pair curvature ``c``. :class:`GradientProfile` keeps the pair terms
needed for that correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RankingDataset
from .metrics import rank_order

PROB_CLAMP = 1e-12


class StaleStateError(RuntimeError):
    pass


class ObjectiveState:
    """Current scores, one column per boosted function.

    McRank keeps ``K + 1`` columns and a cached softmax; the cache must be
    refreshed after scores change before gradients can be taken.
    """

    def __init__(self, scores: np.ndarray):
        self.scores = np.array(scores, dtype=np.float64)
        if self.scores.ndim == 1:
            self.scores = self.scores[:, None].copy()
        self._version = 0
        self._prob_version = -1
        self._probs = None

    def add(self, column: int, delta: np.ndarray):
        self.scores[:, column] += delta
        self._version += 1

    def refresh(self):
        self._probs = softmax(self.scores)
        self._prob_version = self._version

    @property
    def probabilities(self) -> np.ndarray:
        if self._prob_version != self._version:
            raise StaleStateError("class probabilities are stale; call refresh()")
        return self._probs


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class PairTerms:
    """Pair-wise loss terms: ``hi`` is preferred over ``lo``.

    ``d1`` is the derivative of the pair's loss with respect to the score of
    ``hi`` (the derivative for ``lo`` is ``-d1``); ``curvature`` is the
    second derivative, equal for both documents.
    """

    hi: np.ndarray
    lo: np.ndarray
    d1: np.ndarray
    curvature: np.ndarray


@dataclass
class GradientProfile:
    g: np.ndarray
    h: np.ndarray
    derivative_additive: bool
    pairs: PairTerms | None = None

    def __len__(self):
        return len(self.g)

    def group_derivatives(self, group, exact: bool = True) -> tuple[float, float]:
        """Derivatives of the loss when every document of ``group`` is shifted by one common ``o``."""
        mask = _as_mask(group, len(self.g))
        d1 = float(np.sum(self.g[mask]))
        d2 = float(np.sum(self.h[mask]))
        if exact and self.pairs is not None:
            inside = mask[self.pairs.hi] & mask[self.pairs.lo]
            d2 -= 2.0 * float(np.sum(self.pairs.curvature[inside]))
        return d1, d2


def _as_mask(group, n: int) -> np.ndarray:
    group = np.asarray(group)
    if group.dtype == bool:
        if group.shape != (n,):
            raise ValueError("boolean group mask has the wrong length")
        return group
    mask = np.zeros(n, dtype=bool)
    mask[group] = True
    return mask


def _profile_from_pairs(n: int, pairs: PairTerms) -> GradientProfile:
    g = np.bincount(pairs.hi, weights=pairs.d1, minlength=n) \
        + np.bincount(pairs.lo, weights=-pairs.d1, minlength=n)
    h = np.bincount(pairs.hi, weights=pairs.curvature, minlength=n) \
        + np.bincount(pairs.lo, weights=pairs.curvature, minlength=n)
    return GradientProfile(g, h, derivative_additive=False, pairs=pairs)


def _column(state: ObjectiveState | np.ndarray, column: int = 0) -> np.ndarray:
    scores = state.scores if isinstance(state, ObjectiveState) else np.asarray(state, dtype=np.float64)
    return scores[:, column] if scores.ndim == 2 else scores


# -- per-objective derivative rules ----------------------------------------

def mart_gradients(state, ds: RankingDataset) -> GradientProfile:
    f = _column(state)
    g = 2.0 * (f - ds.y)
    return GradientProfile(g, np.full_like(g, 2.0), derivative_additive=True)


def mcrank_gradients(state: ObjectiveState, ds: RankingDataset, class_c: int) -> GradientProfile:
    if not 0 <= class_c <= ds.max_label:
        raise ValueError(f"class {class_c} outside [0, {ds.max_label}]")
    p = state.probabilities[:, class_c]
    g = p - (ds.y == class_c)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return GradientProfile(g, pc * (1.0 - pc), derivative_additive=True)


def exp_pair_terms(scores: np.ndarray, ds: RankingDataset) -> PairTerms:
    hi, lo = ds.preference_pairs
    s = np.exp(scores[lo] - scores[hi])
    return PairTerms(hi, lo, -s, s)


def pairwise_exp_gradients(state, ds: RankingDataset) -> GradientProfile:
    return _profile_from_pairs(ds.num_docs, exp_pair_terms(_column(state), ds))


def delta_ndcg(scores: np.ndarray, ds: RankingDataset, cutoff: int | None = None) -> np.ndarray:
    """``|ΔNDCG|`` of swapping each preference pair at the current ranking."""
    gain = np.exp2(ds.y.astype(np.float64)) - 1.0
    disc = np.zeros(ds.num_docs)
    inv_ideal = np.zeros(ds.num_docs)
    for sl in ds.query_slices():
        n = sl.stop - sl.start
        ranks = np.empty(n, dtype=np.int64)
        ranks[rank_order(scores[sl])] = np.arange(1, n + 1)
        d = 1.0 / np.log2(1.0 + ranks)
        if cutoff is not None:
            d[ranks > cutoff] = 0.0
        disc[sl] = d
        ideal_gain = np.sort(gain[sl])[::-1][:cutoff]
        ideal = float(np.dot(ideal_gain, 1.0 / np.log2(np.arange(2, len(ideal_gain) + 2))))
        inv_ideal[sl] = 1.0 / ideal if ideal > 0 else 0.0
    hi, lo = ds.preference_pairs
    return np.abs(gain[hi] - gain[lo]) * np.abs(disc[hi] - disc[lo]) * inv_ideal[hi]


def lambda_pair_terms(scores: np.ndarray, ds: RankingDataset, cutoff: int | None = None,
                      anchor: np.ndarray | None = None) -> PairTerms:
    """Pair rule with ``sigma = 1``; ``|ΔNDCG|`` is taken at ``anchor`` (default: ``scores``)."""
    hi, lo = ds.preference_pairs
    weight = delta_ndcg(scores if anchor is None else anchor, ds, cutoff)
    rho = _sigmoid(scores[lo] - scores[hi])
    return PairTerms(hi, lo, -weight * rho, weight * rho * (1.0 - rho))


def lambdamart_gradients(state, ds: RankingDataset, cutoff: int | None = None) -> GradientProfile:
    return _profile_from_pairs(ds.num_docs, lambda_pair_terms(_column(state), ds, cutoff))


# -- objective objects ------------------------------------------------------

class Objective:
    name = ""
    derivative_additive = True
    squared_loss = False

    def n_columns(self, ds: RankingDataset) -> int:
        return 1

    def init_state(self, ds: RankingDataset) -> ObjectiveState:
        state = ObjectiveState(np.zeros((ds.num_docs, self.n_columns(ds))))
        state.refresh()
        return state

    def loss(self, ds: RankingDataset, scores: np.ndarray, anchor: np.ndarray | None = None) -> float:
        raise NotImplementedError

    def gradients(self, ds: RankingDataset, state: ObjectiveState, column: int = 0) -> GradientProfile:
        raise NotImplementedError

    def ranking_scores(self, raw: np.ndarray) -> np.ndarray:
        return raw[:, 0] if raw.ndim == 2 else raw


class SquaredLoss(Objective):
    name = "mart"
    squared_loss = True

    def loss(self, ds, scores, anchor=None):
        return float(np.sum((_column(scores) - ds.y) ** 2))

    def gradients(self, ds, state, column=0):
        return mart_gradients(state, ds)


class McRankLoss(Objective):
    """Multi-class logistic loss over labels ``0..K``; ranks by expected label."""

    name = "mcrank"

    def n_columns(self, ds):
        return ds.max_label + 1

    def loss(self, ds, scores, anchor=None):
        scores = np.asarray(scores, dtype=np.float64)
        m = scores.max(axis=1)
        lse = m + np.log(np.exp(scores - m[:, None]).sum(axis=1))
        return float(np.sum(lse - scores[np.arange(len(scores)), ds.y]))

    def gradients(self, ds, state, column=0):
        return mcrank_gradients(state, ds, column)

    def ranking_scores(self, raw):
        p = softmax(np.asarray(raw, dtype=np.float64))
        return p @ np.arange(p.shape[1], dtype=np.float64)


class PairwiseExpLoss(Objective):
    name = "rankexp"
    derivative_additive = False

    def loss(self, ds, scores, anchor=None):
        f = _column(scores)
        hi, lo = ds.preference_pairs
        return float(np.sum(np.exp(f[lo] - f[hi])))

    def gradients(self, ds, state, column=0):
        return pairwise_exp_gradients(state, ds)


class LambdaMARTLoss(Objective):
    """LambdaMART's implicit loss: ``sum |ΔNDCG| * log(1 + exp(-(s_hi - s_lo)))``.

    The ``|ΔNDCG|`` weights depend on the ranking, so ``loss`` freezes them
    at ``anchor``; with the anchor equal to the evaluated scores this is the
    tracked training loss, and with a fixed anchor it is the smooth pair
    potential whose derivatives the gradients reproduce.
    """

    name = "lambdamart"
    derivative_additive = False

    def __init__(self, cutoff: int | None = None):
        self.cutoff = cutoff

    def loss(self, ds, scores, anchor=None):
        f = _column(scores)
        base = f if anchor is None else _column(anchor)
        hi, lo = ds.preference_pairs
        weight = delta_ndcg(base, ds, self.cutoff)
        return float(np.sum(weight * np.logaddexp(0.0, f[lo] - f[hi])))

    def gradients(self, ds, state, column=0):
        return lambdamart_gradients(state, ds, self.cutoff)


OBJECTIVES = {cls.name: cls for cls in (SquaredLoss, McRankLoss, PairwiseExpLoss, LambdaMARTLoss)}


def get_objective(name: str, **kwargs) -> Objective:
    try:
        cls = OBJECTIVES[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(OBJECTIVES)}") from None
    return cls(**kwargs)


def exact_group_derivatives(objective: Objective, state: ObjectiveState, ds: RankingDataset,
                            group, column: int = 0) -> tuple[float, float]:
    """``(L'(o=0), L''(o=0))`` when ``group`` is shifted by one common offset."""
    return objective.gradients(ds, state, column).group_derivatives(group, exact=True)

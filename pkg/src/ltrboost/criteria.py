"""Node-splitting criteria and the incremental threshold sweep.

All scores are "lower is better". Per document a node carries the objective's
derivatives ``g`` and ``h`` at a zero offset; the criteria derive their
responses from them:

* ``se``   -- squared error of ``r = -g`` around each side's plain mean.
* ``wse``  -- weighted squared error with ``r = -g/h``, ``w = h``, minus the
  parent's weighted squared error.
* ``rwse`` -- the robust form ``-[(Σwr)²/Σw]_left - [..]_right + (Σwr)²/Σw``.
* ``ole``  -- the second-order loss reduction ``-[L'²/L'']_left - [..]_right``,
  where the side derivatives are exact group derivatives when the node carries
  pair terms and plain sums otherwise.
* ``mart`` -- ``-[(Σr)²/n]_left - [..]_right``, the squared-loss shortcut
  (``ole`` divided by two under the squared loss).

Equal feature values are never separated; a threshold sits at the midpoint
of two adjacent distinct values and a document goes left iff its value is
below the threshold.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .objectives import GradientProfile

CRITERIA = ("se", "wse", "rwse", "ole", "mart")
CURVATURE_EPS = 1e-12
# candidates within this fraction of their terms' magnitude count as tied
TIE_RTOL = 1e-12


class ConfigError(ValueError):
    pass


def check_criterion(criterion: str, objective: str | None = None):
    if criterion not in CRITERIA:
        raise ConfigError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    if criterion == "mart" and objective is not None and objective != "mart":
        raise ConfigError("the 'mart' criterion requires the squared-loss (mart) objective")


@dataclass
class Node:
    """Documents of one tree node.

    ``pairs`` holds ``(a, b, c)``: local indices of both ends of every
    preference pair lying inside the node and the pair curvature ``c``.
    It is ``None`` for derivative-additive objectives or additive mode.
    """

    X: np.ndarray
    g: np.ndarray
    h: np.ndarray
    pairs: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
    objective: str | None = None

    @classmethod
    def from_profile(cls, X, profile: GradientProfile, index=None, exact: bool = True,
                     objective: str | None = None) -> "Node":
        n_total = len(profile.g)
        index = np.arange(n_total) if index is None else np.asarray(index)
        pairs = None
        if exact and profile.pairs is not None:
            local = np.full(n_total, -1, dtype=np.int64)
            local[index] = np.arange(len(index))
            a, b = local[profile.pairs.hi], local[profile.pairs.lo]
            keep = (a >= 0) & (b >= 0)
            pairs = (a[keep], b[keep], profile.pairs.curvature[keep])
        return cls(np.asarray(X)[index], profile.g[index], profile.h[index], pairs, objective)

    @property
    def size(self) -> int:
        return len(self.g)

    @property
    def se_response(self) -> np.ndarray:
        return -self.g

    def weighted_response(self) -> tuple[np.ndarray, np.ndarray]:
        w = self.h
        r = np.divide(-self.g, w, out=np.zeros_like(self.g), where=w > 0)
        return r, w


@dataclass(frozen=True)
class SideStats:
    count: int
    sum_g: float
    sum_h: float
    sum_r: float
    sum_r2: float
    sum_w: float
    sum_wr: float
    sum_wr2: float


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    left_count: int
    right_count: int
    left: SideStats
    right: SideStats
    score: float


def side_stats(node: Node, mask: np.ndarray) -> SideStats:
    r = node.se_response[mask]
    rw, w = (a[mask] for a in node.weighted_response())
    return SideStats(int(mask.sum()), float(node.g[mask].sum()), float(node.h[mask].sum()),
                     float(r.sum()), float((r * r).sum()), float(w.sum()),
                     float((w * rw).sum()), float((w * rw * rw).sum()))


# -- from-scratch scoring ----------------------------------------------------

def _sq_dev(r, w=None):
    if w is None:
        return float(np.sum((r - r.mean()) ** 2))
    mean = np.sum(w * r) / np.sum(w)
    return float(np.sum(w * (r - mean) ** 2))


def score_split(node: Node, feature: int, threshold: float, criterion: str) -> float | None:
    """Two-pass score of one threshold, or ``None`` when the split is invalid."""
    check_criterion(criterion, node.objective)
    left = node.X[:, feature] < threshold
    right = ~left
    if not left.any() or not right.any():
        return None
    if criterion == "se":
        r = node.se_response
        return _sq_dev(r[left]) + _sq_dev(r[right])
    if criterion == "mart":
        r = node.se_response
        return float(-(r[left].sum() ** 2 / left.sum() + r[right].sum() ** 2 / right.sum()))
    if criterion in ("wse", "rwse"):
        r, w = node.weighted_response()
        if w[left].sum() < CURVATURE_EPS or w[right].sum() < CURVATURE_EPS:
            return None
        if criterion == "wse":
            return _sq_dev(r[left], w[left]) + _sq_dev(r[right], w[right]) - _sq_dev(r, w)
        wr = w * r
        return float(-(wr[left].sum() ** 2 / w[left].sum() + wr[right].sum() ** 2 / w[right].sum())
                     + wr.sum() ** 2 / w.sum())
    total = 0.0
    for side in (left, right):
        d1, d2 = node_group_derivatives(node, side)
        if d2 <= CURVATURE_EPS:
            return None
        total -= d1 * d1 / d2
    return total


def node_group_derivatives(node: Node, mask: np.ndarray) -> tuple[float, float]:
    d1 = float(node.g[mask].sum())
    d2 = float(node.h[mask].sum())
    if node.pairs is not None:
        a, b, c = node.pairs
        d2 -= 2.0 * float(c[mask[a] & mask[b]].sum())
    return d1, d2


def score_se(node, feature, threshold):
    return score_split(node, feature, threshold, "se")


def score_wse(node, feature, threshold):
    return score_split(node, feature, threshold, "wse")


def score_rwse(node, feature, threshold):
    return score_split(node, feature, threshold, "rwse")


def score_ole(node, feature, threshold):
    return score_split(node, feature, threshold, "ole")


def score_mart(node, feature, threshold):
    return score_split(node, feature, threshold, "mart")


# -- incremental sweep -------------------------------------------------------

@dataclass
class SweepResult:
    """Scores of every boundary for a block of features.

    Arrays are ``(n - 1, n_features)``; row ``k - 1`` puts the ``k`` smallest
    values on the left. ``valid`` marks boundaries between distinct values
    that respect the leaf-size limit and the curvature guard.
    """

    features: np.ndarray
    thresholds: np.ndarray
    scores: np.ndarray
    magnitudes: np.ndarray
    valid: np.ndarray

    def feature_candidates(self, j: int):
        """``(thresholds, scores)`` of the valid boundaries of column ``j``."""
        keep = self.valid[:, j]
        return self.thresholds[keep, j], self.scores[keep, j]


def _midpoints(lo, hi):
    mid = 0.5 * (lo + hi)
    # adjacent floats: the midpoint may round onto the lower value
    return np.where((mid > lo) & (mid <= hi), mid, hi)


def _pair_inside_sums(pairs, order, n):
    """Curvature of pairs fully left / fully right for every boundary."""
    a, b, c = pairs
    fb = order.shape[1]
    pos = np.empty_like(order)
    np.put_along_axis(pos, order, np.arange(n)[:, None].repeat(fb, axis=1), axis=0)
    pa, pb = pos[a], pos[b]
    cols = np.arange(fb) * n
    weights = np.repeat(c, fb)

    def by_position(p):
        flat = (p + cols).ravel()
        return np.bincount(flat, weights=weights, minlength=n * fb).reshape(fb, n).T

    left = np.cumsum(by_position(np.maximum(pa, pb)), axis=0)[:-1]
    right = float(np.sum(c)) - np.cumsum(by_position(np.minimum(pa, pb)), axis=0)[:-1]
    return left, right


def _sweep_block(node: Node, criterion: str, features: np.ndarray, min_samples_leaf: int) -> SweepResult:
    n = node.size
    X = node.X[:, features]
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    k = np.arange(1, n)[:, None].astype(np.float64)
    nl, nr = k, n - k

    def left_sums(values):
        return np.cumsum(values[order], axis=0)[:-1]

    valid = xs[1:] > xs[:-1]
    valid &= (k >= min_samples_leaf) & (nr >= min_samples_leaf)

    with np.errstate(divide="ignore", invalid="ignore"):
        if criterion in ("se", "mart"):
            r = node.se_response
            total = float(np.sum(r))
            s_l = left_sums(r)
            s_r = total - s_l
            fit = s_l * s_l / nl + s_r * s_r / nr
            if criterion == "se":
                total_sq = float(np.sum(r * r))
                scores, mags = total_sq - fit, total_sq + fit
            else:
                scores, mags = -fit, fit
        elif criterion in ("wse", "rwse"):
            r, w = node.weighted_response()
            wr = w * r
            t_w, t_wr = float(np.sum(w)), float(np.sum(wr))
            w_l = left_sums(w)
            wr_l = left_sums(wr)
            w_r, wr_r = t_w - w_l, t_wr - wr_l
            valid &= (w_l >= CURVATURE_EPS) & (w_r >= CURVATURE_EPS) & (t_w >= CURVATURE_EPS)
            fit = wr_l * wr_l / w_l + wr_r * wr_r / w_r
            parent = t_wr * t_wr / t_w
            if criterion == "rwse":
                scores, mags = parent - fit, parent + fit
            else:
                t_wr2 = float(np.sum(wr * r))
                wr2_l = left_sums(wr * r)
                dev_l = wr2_l - wr_l * wr_l / w_l
                dev_r = (t_wr2 - wr2_l) - wr_r * wr_r / w_r
                scores = dev_l + dev_r - (t_wr2 - parent)
                mags = 2.0 * t_wr2 + fit + parent
        elif criterion == "ole":
            t_g, t_h = float(np.sum(node.g)), float(np.sum(node.h))
            g_l = left_sums(node.g)
            h_l = left_sums(node.h)
            g_r, h_r = t_g - g_l, t_h - h_l
            if node.pairs is not None and len(node.pairs[2]):
                inside_l, inside_r = _pair_inside_sums(node.pairs, order, n)
                h_l = h_l - 2.0 * inside_l
                h_r = h_r - 2.0 * inside_r
            valid &= (h_l > CURVATURE_EPS) & (h_r > CURVATURE_EPS)
            fit = g_l * g_l / h_l + g_r * g_r / h_r
            scores, mags = -fit, fit
        else:
            raise ConfigError(f"unknown criterion {criterion!r}")

    valid &= np.isfinite(scores)
    return SweepResult(features, _midpoints(xs[:-1], xs[1:]), scores, np.abs(mags), valid)


def sweep(node: Node, criterion: str, features=None, min_samples_leaf: int = 1,
          n_threads: int = 1) -> SweepResult:
    """Score every boundary of every feature with one left-to-right pass each."""
    check_criterion(criterion, node.objective)
    features = np.arange(node.X.shape[1]) if features is None else np.asarray(features)
    if node.size < 2 or len(features) == 0:
        shape = (max(node.size - 1, 0), len(features))
        empty = np.zeros(shape)
        return SweepResult(features, empty, empty, empty, np.zeros(shape, dtype=bool))
    blocks = [b for b in np.array_split(features, max(1, min(n_threads, len(features)))) if len(b)]
    if len(blocks) == 1:
        parts = [_sweep_block(node, criterion, blocks[0], min_samples_leaf)]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(lambda b: _sweep_block(node, criterion, b, min_samples_leaf), blocks))
    return SweepResult(
        features,
        np.hstack([p.thresholds for p in parts]),
        np.hstack([p.scores for p in parts]),
        np.hstack([p.magnitudes for p in parts]),
        np.hstack([p.valid for p in parts]),
    )


def select_best(scores: np.ndarray, magnitudes: np.ndarray) -> int:
    """Index of the lowest score, preferring the earliest among rounding-level ties."""
    best = int(np.argmin(scores))
    slack = TIE_RTOL * np.maximum(magnitudes, magnitudes[best])
    return int(np.flatnonzero(scores - scores[best] <= slack)[0])


def best_split(node: Node, criterion: str, min_samples_leaf: int = 1,
               n_threads: int = 1) -> SplitCandidate | None:
    """Lowest-scoring split over all features, ties to lower feature then lower threshold."""
    if node.size < 2 * min_samples_leaf:
        return None
    res = sweep(node, criterion, min_samples_leaf=min_samples_leaf, n_threads=n_threads)
    # feature-major order so that the first tied candidate wins
    valid = res.valid.T
    if not valid.any():
        return None
    scores = res.scores.T[valid]
    best = select_best(scores, res.magnitudes.T[valid])
    col, row = np.argwhere(valid)[best]
    feature = int(res.features[col])
    threshold = float(res.thresholds[row, col])
    left = node.X[:, feature] < threshold
    return SplitCandidate(feature, threshold, int(left.sum()), int((~left).sum()),
                          side_stats(node, left), side_stats(node, ~left), float(scores[best]))

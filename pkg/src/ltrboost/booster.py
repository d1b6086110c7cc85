"""Gradient boosting outer loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .criteria import CRITERIA, ConfigError, check_criterion
from .data import RankingDataset
from .metrics import DEFAULT_CUTOFFS, evaluate
from .objectives import OBJECTIVES, Objective, get_objective
from .tree import GROWTH_POLICIES, RegressionTree, grow

logger = logging.getLogger(__name__)

NEWTON_MODES = ("exact", "additive")
DEFAULT_ITERATIONS = {"lambdamart": 1000, "mcrank": 2500, "mart": 1000, "rankexp": 1000}


@dataclass
class BoostConfig:
    objective: str = "lambdamart"
    criterion: str = "ole"
    leaves: int = 10
    learning_rate: float = 0.1
    iterations: int | None = None
    # "exact" keeps pair terms for non-additive losses in OLE and leaf outputs
    newton: str = "exact"
    growth: str = "width"
    min_samples_leaf: int = 1
    ndcg_cutoff: int | None = None
    threads: int = 1
    cutoffs: Sequence[int] = DEFAULT_CUTOFFS

    def __post_init__(self):
        if self.iterations is None:
            self.iterations = DEFAULT_ITERATIONS.get(self.objective, 1000)

    def validate(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; choose from {sorted(OBJECTIVES)}")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"unknown criterion {self.criterion!r}; choose from {CRITERIA}")
        check_criterion(self.criterion, self.objective)
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.leaves < 2:
            raise ConfigError("leaves must be at least 2")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.newton not in NEWTON_MODES:
            raise ConfigError(f"newton must be one of {NEWTON_MODES}")
        if self.growth not in GROWTH_POLICIES:
            raise ConfigError(f"growth must be one of {GROWTH_POLICIES}")
        if self.min_samples_leaf < 1 or self.threads < 1:
            raise ConfigError("min_samples_leaf and threads must be at least 1")
        if self.ndcg_cutoff is not None and self.ndcg_cutoff < 1:
            raise ConfigError("ndcg_cutoff must be at least 1")

    def make_objective(self) -> Objective:
        if self.objective == "lambdamart":
            return get_objective("lambdamart", cutoff=self.ndcg_cutoff)
        return get_objective(self.objective)


@dataclass
class TrainingLog:
    initial_loss: float | None = None
    train_loss: list[float] = field(default_factory=list)
    valid: list[dict[str, float]] = field(default_factory=list)


@dataclass
class Ensemble:
    """Boosted trees; ``trees[c][t]`` is iteration ``t``'s tree for score column ``c``.

    Leaf values are stored unscaled; predictions add ``learning_rate`` times
    each tree's output.
    """

    objective: str
    criterion: str
    learning_rate: float
    max_label: int
    num_features: int
    trees: list[list[RegressionTree]]
    newton: str = "exact"
    ndcg_cutoff: int | None = None
    log: TrainingLog = field(default_factory=TrainingLog)

    @property
    def n_columns(self) -> int:
        return len(self.trees)

    @property
    def n_iterations(self) -> int:
        return len(self.trees[0]) if self.trees else 0

    def objective_fn(self) -> Objective:
        if self.objective == "lambdamart":
            return get_objective("lambdamart", cutoff=self.ndcg_cutoff)
        return get_objective(self.objective)

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.num_features:
            raise ValueError(f"expected {self.num_features} feature columns, got shape {X.shape}")
        raw = np.zeros((X.shape[0], self.n_columns))
        for t in range(self.n_iterations):
            for c in range(self.n_columns):
                raw[:, c] += self.learning_rate * self.trees[c][t].predict(X)
        return raw

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.objective_fn().ranking_scores(self.raw_scores(X))


def predict_scores(ens: Ensemble, ds: RankingDataset | np.ndarray) -> np.ndarray:
    X = ds.X if isinstance(ds, RankingDataset) else ds
    return ens.predict(X)


def train(ds: RankingDataset, config: BoostConfig, valid_ds: RankingDataset | None = None,
          callback: Callable[[int, float, dict], None] | None = None,
          return_state: bool = False):
    """Fit ``config.iterations`` boosting rounds; each round fits one tree per score column."""
    config.validate()
    if valid_ds is not None and valid_ds.num_features != ds.num_features:
        raise ValueError("validation data has a different number of features")
    objective = config.make_objective()
    n_columns = objective.n_columns(ds)
    exact = config.newton == "exact"
    state = objective.init_state(ds)
    ens = Ensemble(config.objective, config.criterion, config.learning_rate, ds.max_label,
                   ds.num_features, [[] for _ in range(n_columns)], config.newton, config.ndcg_cutoff)
    ens.log.initial_loss = objective.loss(ds, state.scores)
    valid_raw = None if valid_ds is None else np.zeros((valid_ds.num_docs, n_columns))

    for t in range(config.iterations):
        # all columns take gradients at the same f_t
        profiles = [objective.gradients(ds, state, c) for c in range(n_columns)]
        trees = [grow(ds.X, p, config.criterion, config.leaves, config.min_samples_leaf,
                      exact=exact, growth=config.growth, objective=config.objective,
                      n_threads=config.threads)
                 for p in profiles]
        for c, tree in enumerate(trees):
            ens.trees[c].append(tree)
            state.add(c, config.learning_rate * tree.predict(ds.X))
            if valid_raw is not None:
                valid_raw[:, c] += config.learning_rate * tree.predict(valid_ds.X)
        state.refresh()
        loss = objective.loss(ds, state.scores)
        ens.log.train_loss.append(loss)
        metrics = {}
        if valid_raw is not None:
            report = evaluate(valid_ds, objective.ranking_scores(valid_raw), config.cutoffs)
            metrics = {f"ndcg@{k}": v for k, v in report.ndcg_at.items()}
            metrics["err"] = report.err
            ens.log.valid.append(metrics)
        logger.debug("iteration %d loss %.6g %s", t + 1, loss, metrics)
        if callback is not None:
            callback(t + 1, loss, metrics)
    if return_state:
        return ens, state
    return ens


def training_curves(ens: Ensemble) -> dict[str, np.ndarray]:
    curves = {
        "iteration": np.arange(1, len(ens.log.train_loss) + 1),
        "train_loss": np.asarray(ens.log.train_loss),
    }
    for key in (ens.log.valid[0] if ens.log.valid else {}):
        curves[key] = np.array([row[key] for row in ens.log.valid])
    return curves


def difference_curve(a: Ensemble, b: Ensemble, key: str = "train_loss") -> np.ndarray:
    """Pointwise ``a - b`` of one training curve, e.g. OLE minus SE."""
    ca, cb = training_curves(a)[key], training_curves(b)[key]
    if ca.shape != cb.shape:
        raise ValueError("curves have different lengths")
    return ca - cb


def final_loss_gap(candidate: Ensemble, baseline: Ensemble) -> float:
    """Relative reduction of the final training loss: positive when ``candidate`` is lower."""
    base = baseline.log.train_loss[-1]
    return (base - candidate.log.train_loss[-1]) / abs(base)

"""Gradient-boosted regression trees for learning to rank, with pluggable split criteria."""

from .booster import BoostConfig, Ensemble, difference_curve, final_loss_gap, predict_scores, train, training_curves
from .criteria import CRITERIA, ConfigError, Node, best_split, score_split, sweep
from .data import (ParseError, RankingDataset, dataset_stats, load_letor, make_synthetic, parse_letor,
                   serialize_letor, split_queries)
from .metrics import MetricReport, dcg_at_k, err, evaluate, ndcg_at_k
from .model_io import ModelFormatError, load_model, save_model
from .objectives import OBJECTIVES, StaleStateError, get_objective
from .tree import RegressionTree, grow

__version__ = "0.1.0"

__all__ = [
    "BoostConfig", "Ensemble", "train", "predict_scores", "training_curves", "difference_curve",
    "final_loss_gap", "CRITERIA", "ConfigError", "Node", "best_split", "score_split", "sweep",
    "ParseError", "RankingDataset", "parse_letor", "load_letor", "serialize_letor", "dataset_stats",
    "split_queries", "make_synthetic", "MetricReport", "dcg_at_k", "ndcg_at_k", "err", "evaluate",
    "ModelFormatError", "load_model", "save_model", "OBJECTIVES", "StaleStateError", "get_objective",
    "RegressionTree", "grow",
]

"""Versioned JSON model files.

The header fields come first, then one tree per line, so two models diff
line by line. Floats are written with ``repr`` precision and load back
bit-for-bit.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .booster import Ensemble
from .tree import RegressionTree

FORMAT_NAME = "ltrboost-model"
FORMAT_VERSION = 1
HEADER_FIELDS = ("objective", "criterion", "learning_rate", "max_label", "num_features",
                 "newton", "ndcg_cutoff")


class ModelFormatError(ValueError):
    pass


def _tree_to_dict(tree: RegressionTree) -> dict:
    return {
        "feature": [int(v) for v in tree.feature],
        "threshold": [float(v) for v in tree.threshold],
        "left": [int(v) for v in tree.left],
        "right": [int(v) for v in tree.right],
        "value": [float(v) for v in tree.value],
    }


def _tree_from_dict(d: dict) -> RegressionTree:
    tree = RegressionTree(
        np.array(d["feature"], dtype=np.int64),
        np.array(d["threshold"], dtype=np.float64),
        np.array(d["left"], dtype=np.int64),
        np.array(d["right"], dtype=np.int64),
        np.array(d["value"], dtype=np.float64),
    )
    n = tree.n_nodes
    if not (len(tree.threshold) == len(tree.left) == len(tree.right) == len(tree.value) == n):
        raise ModelFormatError("tree arrays differ in length")
    internal = np.flatnonzero(~tree.is_leaf)
    children = np.concatenate([tree.left[internal], tree.right[internal]])
    parents = np.concatenate([internal, internal])
    # children are numbered after their parent, which also rules out cycles
    if np.any(children <= parents) or np.any(children >= n):
        raise ModelFormatError("child index out of range")
    return tree


def dumps(ens: Ensemble) -> str:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    header.update({key: getattr(ens, key) for key in HEADER_FIELDS})
    lines = ["{"]
    for key, value in header.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value)},")
    lines.append('  "trees": [')
    for c, column in enumerate(ens.trees):
        lines.append("    [")
        for t, tree in enumerate(column):
            sep = "," if t < len(column) - 1 else ""
            lines.append("      " + json.dumps(_tree_to_dict(tree)) + sep)
        lines.append("    ]" + ("," if c < len(ens.trees) - 1 else ""))
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Ensemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a model file: {exc}") from None
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("missing or wrong format tag")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    missing = [key for key in HEADER_FIELDS + ("trees",) if key not in doc]
    if missing:
        raise ModelFormatError(f"missing fields: {missing}")
    trees = [[_tree_from_dict(t) for t in column] for column in doc["trees"]]
    if len({len(column) for column in trees}) > 1:
        raise ModelFormatError("tree sequences differ in length")
    for column in trees:
        for tree in column:
            if tree.max_feature >= doc["num_features"]:
                raise ModelFormatError("tree uses a feature beyond num_features")
    return Ensemble(trees=trees, **{key: doc[key] for key in HEADER_FIELDS})


def save_model(ens: Ensemble, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(ens))


def load_model(path: str | os.PathLike) -> Ensemble:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())

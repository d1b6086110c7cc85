import json

import numpy as np
import pytest

from ltrboost.booster import BoostConfig, train
from ltrboost.data import make_synthetic
from ltrboost.model_io import ModelFormatError, dumps, load_model, loads, save_model


@pytest.fixture(scope="module", params=["mart", "mcrank", "lambdamart"])
def ens(request):
    ds = make_synthetic(n_queries=10, docs_per_query=5, n_features=3, max_label=2, seed=1)
    return train(ds, BoostConfig(objective=request.param, criterion="ole", iterations=4, leaves=6,
                                 learning_rate=0.12, ndcg_cutoff=3 if request.param == "lambdamart" else None))


def test_round_trip_bit_identical(ens, tmp_path):
    path = tmp_path / "m.json"
    save_model(ens, path)
    back = load_model(path)
    probe = np.random.default_rng(0).normal(scale=2.0, size=(1000, 3))
    assert np.array_equal(back.predict(probe), ens.predict(probe))
    assert dumps(back) == dumps(ens)
    assert back.ndcg_cutoff == ens.ndcg_cutoff


def test_one_tree_per_line(ens):
    text = dumps(ens)
    tree_lines = [ln for ln in text.splitlines() if ln.strip().startswith('{"feature"')]
    assert len(tree_lines) == ens.n_columns * ens.n_iterations


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other"),
    lambda d: d.update(version=99),
    lambda d: d.pop("criterion"),
    lambda d: d["trees"][0][0].update(left=[0] + d["trees"][0][0]["left"][1:]),
    lambda d: d["trees"][0][0].update(right=[999] + d["trees"][0][0]["right"][1:]),
    lambda d: d.update(num_features=0),
])
def test_corrupt_files_rejected(ens, mutate):
    doc = json.loads(dumps(ens))
    mutate(doc)
    with pytest.raises(ModelFormatError):
        loads(json.dumps(doc))


def test_not_json():
    with pytest.raises(ModelFormatError):
        loads("trees: none")

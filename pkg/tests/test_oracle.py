import json

import numpy as np
import pytest

from ltrboost.data import RankingDataset
from ltrboost.oracle import (OracleNode, engine_node, pairwise_toy_values, exhaustive_split_oracle,
                             finite_diff_check, naive_thresholds, rankings_agree, theorem_suite)

CHECKS = {"squared_loss_argmin", "ole_rwse_constant_offset", "wse_rwse_rank_order", "sweep_matches_oracle",
          "newton_weighted_mean", "exhaustive_oracle_squared", "exhaustive_oracle_mcrank_top3",
          "finite_differences", "pairwise_curvature_counterexample"}


@pytest.fixture(scope="module")
def report():
    return theorem_suite(seed=0, cases=30)


def test_suite_passes_on_this_build(report):
    assert {c.name for c in report.checks} == CHECKS
    assert report.passed, report.to_text()


def test_report_text_sorted_and_json(report):
    names = [ln.split()[1] for ln in report.to_text().splitlines()[:-1]]
    assert names == sorted(names)
    doc = json.loads(report.to_json())
    assert doc["passed"] is True and len(doc["checks"]) == len(CHECKS)


def test_report_carries_counterexample_numbers(report):
    line = next(ln for ln in report.to_text().splitlines() if "pairwise_curvature" in ln)
    assert "0.503215" in line and "1.238974" in line


def test_suite_deterministic():
    a = theorem_suite(seed=5, cases=10, mcrank_oracle_cases=20).to_json()
    b = theorem_suite(seed=5, cases=10, mcrank_oracle_cases=20).to_json()
    assert a == b


def test_perturbed_criterion_is_caught():
    rep = theorem_suite(seed=0, cases=30, perturb={"ole": 1e-3}, mcrank_oracle_cases=20)
    assert not rep.passed
    failed = set(rep.failed())
    assert {"ole_rwse_constant_offset", "sweep_matches_oracle"} <= failed
    assert "FAIL" in rep.to_text()


def test_pairwise_toy_values():
    v = pairwise_toy_values()
    assert v["exact_d2"] == pytest.approx(0.503215, abs=1e-4)
    assert v["additive_d2"] == pytest.approx(1.238974, abs=1e-4)
    assert v["numeric_d2"] == pytest.approx(0.503215, abs=1e-4)
    assert v["exact_d1"] == pytest.approx(-0.503215, abs=1e-4)
    assert v["additive_d1"] == v["exact_d1"]


def test_finite_diff_squared_loss_tight():
    ds = RankingDataset(np.zeros((3, 1)), [0, 2, 1], [0], [0, 3])
    res = finite_diff_check("mart", [0.3, -1.0, 0.5], ds, [1])
    assert res.passed
    for r, n in zip(res.residuals, res.numeric):
        assert r <= 1e-6 * max(1.0, abs(n))


def test_finite_diff_zero_gradient():
    ds = RankingDataset(np.zeros((2, 1)), [1, 1], [0], [0, 2])
    res = finite_diff_check("rankexp", [0.0, 0.0], ds, [0])
    assert res.analytic == (0.0, 0.0)
    assert res.passed


def test_finite_diff_rejects_bad_step():
    ds = RankingDataset(np.zeros((2, 1)), [1, 0], [0], [0, 2])
    with pytest.raises(ValueError):
        finite_diff_check("mart", [0.0, 0.0], ds, [0], step=0.0)


def test_oracle_size_limit():
    node = OracleNode("mart", np.arange(65.0), np.zeros(65), np.zeros(65, dtype=int))
    with pytest.raises(ValueError):
        exhaustive_split_oracle(node)


def test_two_document_node():
    node = OracleNode("mart", np.array([0.0, 1.0]), np.zeros(2), np.array([0, 3]))
    out = exhaustive_split_oracle(node)
    assert len(out) == 1 and out[0].threshold == 0.5
    assert out[0].true_loss == pytest.approx(0.0)


def test_squared_oracle_matches_ole_ranking(rng):
    from ltrboost.criteria import sweep
    for _ in range(10):
        n = int(rng.integers(3, 20))
        node = OracleNode("mart", rng.integers(0, 6, size=n).astype(float), rng.normal(size=n),
                          rng.integers(0, 4, size=n))
        res = sweep(engine_node(node), "ole")
        thresholds, scores = res.feature_candidates(0)
        outcomes = exhaustive_split_oracle(node)
        assert [o.threshold for o in outcomes] == thresholds.tolist()
        base = np.sum((node.scores - node.labels) ** 2)
        # true loss = base + OLE / 2 for the squared loss (h = 2)
        assert np.allclose([o.true_loss for o in outcomes], base + scores / 2, rtol=1e-12, atol=1e-10)


def test_naive_thresholds():
    assert naive_thresholds([3.0, 1.0, 1.0, 2.0]) == [1.5, 2.5]


def test_rankings_agree():
    assert rankings_agree([1.0, 2.0, 3.0], [10.0, 20.0, 30.0])
    assert not rankings_agree([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])

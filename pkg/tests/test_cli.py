import csv
import json

import pytest

from ltrboost.cli import main
from ltrboost.data import make_synthetic, serialize_letor
from ltrboost.model_io import load_model


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    train = d / "train.txt"
    valid = d / "valid.txt"
    train.write_text(serialize_letor(make_synthetic(12, 5, 4, max_label=2, seed=1)))
    valid.write_text(serialize_letor(make_synthetic(4, 5, 4, max_label=2, seed=2)))
    return d, train, valid


def _train(files, out, *extra):
    d, train, valid = files
    return main(["train", "--data", str(train), "--valid", str(valid), "--objective", "lambdamart",
                 "--criterion", "ole", "--leaves", "4", "--learning-rate", "0.1", "--trees", "3",
                 "--threads", "2", "--out", str(out), *extra])


def test_train_writes_model_and_log(files):
    d = files[0]
    assert _train(files, d / "m.json") == 0
    rows = list(csv.reader(open(d / "m.log.csv")))
    assert rows[0] == ["iter", "train_loss", "ndcg1", "ndcg3", "ndcg10", "err"]
    assert len(rows) == 1 + 3
    assert all(cell != "" for cell in rows[1])
    assert load_model(d / "m.json").n_iterations == 3


def test_train_is_deterministic(files):
    d = files[0]
    _train(files, d / "a.json")
    _train(files, d / "b.json", "--threads", "1")
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()


def test_log_without_validation_has_blank_metrics(files):
    d, train, _ = files
    assert main(["train", "--data", str(train), "--objective", "mart", "--criterion", "se", "--trees", "2",
                 "--out", str(d / "nv.json"), "--log", str(d / "nv.csv")]) == 0
    rows = list(csv.reader(open(d / "nv.csv")))
    assert rows[1][2:] == ["", "", "", ""]


def test_zero_trees_gives_empty_model(files):
    d, train, _ = files
    assert main(["train", "--data", str(train), "--objective", "mart", "--criterion", "se", "--trees", "0",
                 "--out", str(d / "empty.json")]) == 0
    assert load_model(d / "empty.json").n_iterations == 0


def test_incompatible_criterion(files, capsys):
    d, train, _ = files
    code = main(["train", "--data", str(train), "--objective", "mcrank", "--criterion", "mart",
                 "--out", str(d / "x.json")])
    assert code == 2
    assert "requires" in capsys.readouterr().err


def test_unreadable_data(files):
    assert main(["train", "--data", str(files[0] / "missing.txt"), "--out", str(files[0] / "y.json")]) == 2


def test_grid_emits_six_configurations(files):
    d, train, _ = files
    out = d / "grid"
    assert main(["grid", "--data", str(train), "--objective", "mart", "--criterion", "ole", "--trees", "2",
                 "--out-dir", str(out)]) == 0
    assert len(list(out.glob("*.log.csv"))) == 6
    assert len(list(out.glob("*.model.json"))) == 6
    rates = sorted(json.loads(p.read_text())["learning_rate"] for p in out.glob("*.model.json"))
    assert rates == [0.06, 0.06, 0.1, 0.1, 0.12, 0.12]


def test_predict_and_eval(files, capsys):
    d, _, valid = files
    _train(files, d / "p.json")
    capsys.readouterr()
    assert main(["predict", "--model", str(d / "p.json"), "--data", str(valid)]) == 0
    scores = [float(v) for v in capsys.readouterr().out.split()]
    assert len(scores) == 20
    assert main(["eval", "--model", str(d / "p.json"), "--data", str(valid), "--cutoffs", "1,5"]) == 0
    out = capsys.readouterr().out
    assert "NDCG@1" in out and "NDCG@5" in out and "ERR" in out


def test_eval_empty_model_input_order(tmp_path, capsys):
    data = tmp_path / "q.txt"
    data.write_text("2 qid:1 1:0.1\n1 qid:1 1:0.2\n0 qid:1 1:0.3\n")
    assert main(["train", "--data", str(data), "--objective", "mart", "--criterion", "se", "--trees", "0",
                 "--out", str(tmp_path / "m.json")]) == 0
    capsys.readouterr()
    main(["eval", "--model", str(tmp_path / "m.json"), "--data", str(data)])
    assert "NDCG@3 100.00" in capsys.readouterr().out


def test_eval_feature_mismatch(files, tmp_path):
    d = files[0]
    _train(files, d / "f.json")
    wide = tmp_path / "wide.txt"
    wide.write_text("1 qid:1 9:1.0\n")
    assert main(["eval", "--model", str(d / "f.json"), "--data", str(wide)]) == 2


def test_bad_cutoffs():
    with pytest.raises(SystemExit):
        main(["eval", "--model", "m", "--data", "d", "--cutoffs", "0,x"])


def test_verify_exit_code_and_report(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["verify", "--seed", "1", "--cases", "10", "--report", str(report)]) == 0
    assert "overall: PASS" in capsys.readouterr().out
    assert json.loads(report.read_text())["passed"] is True


def test_stats(tmp_path, capsys):
    data = tmp_path / "s.txt"
    data.write_text("0 qid:1 4:1\n1 qid:1 1:1\n2 qid:1 2:1\n")
    assert main(["stats", "--data", str(data)]) == 0
    assert capsys.readouterr().out.split() == ["queries", "1", "docs", "3", "docs/query", "3", "features", "5"]

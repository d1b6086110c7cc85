"""Command-line interface: ``ltrboost {train,grid,predict,eval,verify,stats}``."""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .booster import BoostConfig, train
from .criteria import CRITERIA, ConfigError
from .data import dataset_stats, load_letor
from .metrics import DEFAULT_CUTOFFS, evaluate
from .model_io import load_model, save_model
from .objectives import OBJECTIVES
from .oracle import theorem_suite

GRID_LEAVES = (10, 20)
GRID_RATES = (0.06, 0.10, 0.12)
LOG_HEADER = ["iter", "train_loss", "ndcg1", "ndcg3", "ndcg10", "err"]


def _cutoffs(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cutoff list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("cutoffs must be positive integers")
    return values


def _add_training_flags(p: argparse.ArgumentParser):
    p.add_argument("--data", required=True, help="training data in LETOR format")
    p.add_argument("--valid", help="validation data, evaluated after every iteration")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="lambdamart")
    p.add_argument("--criterion", choices=CRITERIA, default="ole")
    p.add_argument("--trees", type=int, default=None,
                   help="boosting iterations (default 1000; 2500 for mcrank)")
    p.add_argument("--newton", choices=("exact", "additive"), default="exact",
                   help="group derivatives for pair-wise losses")
    p.add_argument("--growth", choices=("width", "depth"), default="width")
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--ndcg-cutoff", type=int, default=None,
                   help="truncate |ΔNDCG| in LambdaMART at this rank")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0,
                   help="accepted for reproducibility records; training draws no random numbers")


def _config(args, leaves, rate) -> BoostConfig:
    return BoostConfig(objective=args.objective, criterion=args.criterion, leaves=leaves,
                       learning_rate=rate, iterations=args.trees, newton=args.newton,
                       growth=args.growth, min_samples_leaf=args.min_samples_leaf,
                       ndcg_cutoff=args.ndcg_cutoff, threads=args.threads)


def _load_training_data(args):
    ds = load_letor(args.data)
    valid = None
    if args.valid:
        valid = load_letor(args.valid)
        if valid.max_label > ds.max_label and args.objective == "mcrank":
            raise ValueError("validation labels exceed the training label range")
        width = max(ds.num_features, valid.num_features)
        # ERR on the validation set uses the training label scale
        valid = replace(valid.with_num_features(width), max_label=max(ds.max_label, valid.max_label))
        ds = ds.with_num_features(width)
    return ds, valid


def _fit_and_write(ds, valid, config: BoostConfig, model_path: Path, log_path: Path):
    config.validate()
    rows = []

    def record(it, loss, metrics):
        rows.append([it, repr(loss)] + [repr(metrics[k]) if k in metrics else ""
                                        for k in ("ndcg@1", "ndcg@3", "ndcg@10", "err")])

    config.cutoffs = DEFAULT_CUTOFFS
    ens = train(ds, config, valid_ds=valid, callback=record)
    save_model(ens, model_path)
    with open(log_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_HEADER)
        writer.writerows(rows)
    return ens


def cmd_train(args) -> int:
    ds, valid = _load_training_data(args)
    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.csv")
    config = _config(args, args.leaves, args.learning_rate)
    ens = _fit_and_write(ds, valid, config, out, log_path)
    print(f"wrote {out} ({ens.n_iterations} iterations x {ens.n_columns} trees) and {log_path}")
    return 0


def cmd_grid(args) -> int:
    ds, valid = _load_training_data(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for leaves, rate in itertools.product(GRID_LEAVES, GRID_RATES):
        stem = f"{args.objective}-{args.criterion}-leaves{leaves}-lr{rate:.2f}"
        _fit_and_write(ds, valid, _config(args, leaves, rate),
                       out_dir / f"{stem}.model.json", out_dir / f"{stem}.log.csv")
        print(f"wrote {stem}")
    return 0


def _data_for_model(path, ens):
    ds = load_letor(path)
    if ds.num_features > ens.num_features:
        raise ValueError(f"data has {ds.num_features} feature columns; model expects {ens.num_features}")
    return replace(ds.with_num_features(ens.num_features), max_label=max(ds.max_label, ens.max_label))


def cmd_predict(args) -> int:
    ens = load_model(args.model)
    ds = _data_for_model(args.data, ens)
    scores = ens.predict(ds.X)
    text = "".join(f"{s!r}\n" for s in scores.tolist())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    ens = load_model(args.model)
    ds = _data_for_model(args.data, ens)
    report = evaluate(ds, ens.predict(ds.X), args.cutoffs)
    print(report.format())
    return 0


def cmd_verify(args) -> int:
    report = theorem_suite(seed=args.seed, cases=args.cases)
    print(report.to_text())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    return 0 if report.passed else 1


def cmd_stats(args) -> int:
    s = dataset_stats(load_letor(args.data))
    print(f"queries {s.num_queries}  docs {s.num_docs}  docs/query {s.docs_per_query}  "
          f"features {s.num_features}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltrboost", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one ensemble")
    _add_training_flags(p)
    p.add_argument("--leaves", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--log", help="CSV training log (default: <out>.log.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid", help="train the six leaves x learning-rate configurations")
    _add_training_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("predict", help="score documents, one score per line")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="NDCG@k and ERR in percent")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--cutoffs", type=_cutoffs, default=DEFAULT_CUTOFFS)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run the theorem and oracle checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=100)
    p.add_argument("--report", help="also write the report as JSON")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="dataset summary")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"ltrboost {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: gen-graphs, label, train, predict, bench."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .ppn import TrainConfig, load_model, save_model
from .schedules import DEFAULT_DELTA_T
from .simulator import ParameterSet


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_graphs(args) -> int:
    entries = pipeline.gen_graphs(args.n_graphs, args.n_nodes, args.edge_prob, args.train_count, args.seed)
    path = _out(args) / "dataset.json"
    pipeline.write_dataset(entries, path)
    n_train = sum(e.split == "train" for e in entries)
    print(f"wrote {path}: {n_train} train, {len(entries) - n_train} test")
    return 0


def cmd_label(args) -> int:
    entries = [e for e in pipeline.read_dataset(args.dataset) if e.split == "train"]
    if not entries:
        raise ValueError("dataset has no train graphs")
    instances = pipeline.label_graphs(
        entries, args.max_depth, args.restarts, args.higher_restarts, args.seed, args.threads
    )
    out = _out(args)
    pipeline.write_labels(instances, out / "labels.json")
    msg = f"wrote {out / 'labels.json'}: {len(instances)} graphs x {args.max_depth} depths"
    if len(instances) >= 2:
        rec = pipeline.recommended_from_labels(instances)
        (out / "recommended.json").write_text(json.dumps(rec.to_dict(), indent=1) + "\n")
        msg += f"; depth-1 pearson {pipeline.depth1_correlation(instances):.4f}"
    print(msg)
    return 0


def cmd_train(args) -> int:
    cfg = TrainConfig(
        epochs_phase1=args.epochs1,
        epochs_phase2=args.epochs2,
        lr_phase1=args.lr1,
        lr_phase2=args.lr2,
        batch_phase1=args.batch1,
        batch_phase2=args.batch2,
        seed=args.seed,
        s=args.start_depth,
        T=args.horizon,
    )
    cfg.validate()
    model, history = pipeline.train_model(pipeline.read_labels(args.labels), cfg, args.blocks)
    out = _out(args)
    save_model(model, out / "model.ppn")
    pipeline.write_loss_history(history, out / "loss_history.csv")
    final = f"{history[-1]:.6g}" if history else "n/a"
    print(f"wrote {out / 'model.ppn'} after {len(history)} epochs, final loss {final}")
    return 0


def cmd_predict(args) -> int:
    text = args.params
    if Path(text).is_file():
        text = Path(text).read_text()
    params = ParameterSet.from_dict(json.loads(text))
    pred = pipeline.predict(load_model(args.model), params, args.steps)
    print(json.dumps(pred.to_dict()))
    return 0


def cmd_bench(args) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    report = pipeline.bench_files(
        args.dataset,
        _out(args),
        model_path=args.model,
        labels_path=args.labels,
        strategies=strategies,
        target_depth=args.target_depth,
        delta_t=args.delta_t,
        seed=args.seed,
        threads=args.threads,
        probe_depth=args.probe_depth,
    )
    print(pipeline.report_csv(report["rows"]), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes for per-graph work")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ppnqaoa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-graphs", parents=[common], help="generate an Erdos-Renyi dataset")
    s.add_argument("--n-graphs", type=int, default=330)
    s.add_argument("--n-nodes", type=int, default=8)
    s.add_argument("--edge-prob", type=float, default=0.5)
    s.add_argument("--train-count", type=int, default=66)
    s.set_defaults(func=cmd_gen_graphs)

    s = sub.add_parser("label", parents=[common], help="optimize training graphs at depths 1..max")
    s.add_argument("--dataset", required=True)
    s.add_argument("--max-depth", type=int, default=5)
    s.add_argument("--restarts", type=int, default=10, help="starts at depth 1")
    s.add_argument("--higher-restarts", type=int, default=5, help="starts per deeper level")
    s.set_defaults(func=cmd_label)

    s = sub.add_parser("train", parents=[common], help="train the PPN on a labels file")
    s.add_argument("--labels", required=True)
    s.add_argument("--blocks", type=int, default=4)
    s.add_argument("--epochs1", type=int, default=3000)
    s.add_argument("--epochs2", type=int, default=1000)
    s.add_argument("--lr1", type=float, default=1e-5)
    s.add_argument("--lr2", type=float, default=1e-6)
    s.add_argument("--batch1", type=int, default=11)
    s.add_argument("--batch2", type=int, default=6)
    s.add_argument("--start-depth", type=int, default=1)
    s.add_argument("--horizon", type=int, default=4)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="predict deeper angles from a parameter set")
    s.add_argument("--model", required=True)
    s.add_argument("--params", required=True, help='JSON text or file: {"p":..,"gamma":[..],"beta":[..]}')
    s.add_argument("--steps", type=int, default=1)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("bench", parents=[common], help="run strategies on the test split")
    s.add_argument("--dataset", required=True)
    s.add_argument("--model")
    s.add_argument("--labels", help="labels file used to fit the depth-1 recommended list")
    s.add_argument("--strategies", default="ppn1,ppn2,tqa,random")
    s.add_argument("--target-depth", type=int, default=10)
    s.add_argument("--delta-t", type=float, default=DEFAULT_DELTA_T)
    s.add_argument("--probe-depth", type=int, default=12, help="depths in the prediction-error probe; 0 disables")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - the CLI reports every failure as one line
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

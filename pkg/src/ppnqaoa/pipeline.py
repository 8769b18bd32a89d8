"""Dataset generation, labeling, training and benchmarking over files.

Every stage is deterministic given its seed. Per-graph randomness comes from
``SeedSequence([seed, graph_id])`` so results do not depend on worker count
or scheduling order.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .graphs import Graph, erdos_renyi, max_cut_brute_force
from .optimize import RecommendedList, depth1_solve, fit_depth1_regression, generate_labels, pearson
from .ppn import (
    PpnModel,
    TrainConfig,
    denormalize,
    load_model,
    normalize,
    ppn_forward,
    prediction_error,
    train,
)
from .schedules import DEFAULT_DELTA_T, random_params, tqa_params
from .simulator import EvalCounter, ParameterSet, expected_value
from .strategies import run_baseline, strategy_ppn1, strategy_ppn2

log = logging.getLogger(__name__)

STRATEGIES = ("ppn1", "ppn2", "tqa", "random")


@dataclass
class DatasetEntry:
    graph_id: int
    graph: Graph
    split: str


@dataclass
class LabeledInstance:
    graph_id: int
    graph: Graph
    params_by_depth: dict[int, ParameterSet]
    values_by_depth: dict[int, float]
    n_evals: int = 0

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "graph": self.graph.to_dict(),
            "params_by_depth": {str(d): p.to_dict() for d, p in sorted(self.params_by_depth.items())},
            "values_by_depth": {str(d): v for d, v in sorted(self.values_by_depth.items())},
            "n_evals": self.n_evals,
        }

    @classmethod
    def from_dict(cls, d: dict) -> LabeledInstance:
        return cls(
            graph_id=int(d["graph_id"]),
            graph=Graph.from_dict(d["graph"]),
            params_by_depth={int(k): ParameterSet.from_dict(v) for k, v in d["params_by_depth"].items()},
            values_by_depth={int(k): float(v) for k, v in d.get("values_by_depth", {}).items()},
            n_evals=int(d.get("n_evals", 0)),
        )


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _graph_rng(seed: int, graph_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(graph_id)]))


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


# ---- datasets -------------------------------------------------------------


def gen_graphs(
    n_graphs: int = 330, n_nodes: int = 8, edge_prob: float = 0.5, train_count: int = 66, seed: int = 0
) -> list[DatasetEntry]:
    if n_graphs < 1 or not 0 <= train_count < n_graphs:
        raise ValueError(f"need 0 <= train_count < n_graphs, got {train_count} and {n_graphs}")
    rng = np.random.default_rng(seed)
    return [
        DatasetEntry(i, erdos_renyi(n_nodes, edge_prob, rng), "train" if i < train_count else "test")
        for i in range(n_graphs)
    ]


def write_dataset(entries: Iterable[DatasetEntry], path) -> None:
    _dump_json([{"graph_id": e.graph_id, **e.graph.to_dict(), "split": e.split} for e in entries], path)


def read_dataset(path) -> list[DatasetEntry]:
    raw = json.loads(Path(path).read_text())
    out = []
    for i, d in enumerate(raw):
        split = d.get("split")
        if split not in ("train", "test"):
            raise ValueError(f"{path}: entry {i} has split {split!r}")
        out.append(DatasetEntry(int(d.get("graph_id", i)), Graph.from_dict(d), split))
    return out


# ---- labels ---------------------------------------------------------------


@dataclass(frozen=True)
class _LabelJob:
    entry: DatasetEntry
    max_depth: int
    restarts: int
    higher_restarts: int
    seed: int
    delta_t: float | None


def _label_one(job: _LabelJob) -> LabeledInstance:
    counter = EvalCounter()
    res = generate_labels(
        job.entry.graph,
        job.max_depth,
        job.restarts,
        counter,
        _graph_rng(job.seed, job.entry.graph_id),
        higher_restarts=job.higher_restarts,
        delta_t=job.delta_t,
    )
    return LabeledInstance(
        job.entry.graph_id,
        job.entry.graph,
        {d + 1: r.best_params for d, r in enumerate(res)},
        {d + 1: r.best_value for d, r in enumerate(res)},
        counter.count,
    )


def label_graphs(
    entries: Sequence[DatasetEntry],
    max_depth: int = 5,
    restarts: int = 10,
    higher_restarts: int = 5,
    seed: int = 0,
    threads: int = 1,
    delta_t: float | None = DEFAULT_DELTA_T,
) -> list[LabeledInstance]:
    jobs = [_LabelJob(e, max_depth, restarts, higher_restarts, seed, delta_t) for e in entries]
    return _map(_label_one, jobs, threads)


def write_labels(instances: Iterable[LabeledInstance], path) -> None:
    _dump_json([inst.to_dict() for inst in instances], path)


def read_labels(path) -> list[LabeledInstance]:
    return [LabeledInstance.from_dict(d) for d in json.loads(Path(path).read_text())]


def depth1_optima(instances: Sequence[LabeledInstance]) -> np.ndarray:
    return np.array([[i.params_by_depth[1].gammas[0], i.params_by_depth[1].betas[0]] for i in instances])


def recommended_from_labels(instances: Sequence[LabeledInstance], k: int = 10) -> RecommendedList:
    return fit_depth1_regression(depth1_optima(instances), k)


def depth1_correlation(instances: Sequence[LabeledInstance]) -> float:
    pts = depth1_optima(instances)
    return pearson(pts[:, 0], pts[:, 1])


def label_tensors(instances: Sequence[LabeledInstance], s: int = 1, T: int = 4) -> list[np.ndarray]:
    """Stack normalized labels: element k has shape (N, 1, 2, s + k)."""
    out = []
    for depth in range(s, s + T + 1):
        missing = [i.graph_id for i in instances if depth not in i.params_by_depth]
        if missing:
            raise ValueError(f"graphs {missing[:5]} have no label at depth {depth}")
        out.append(np.stack([normalize(i.params_by_depth[depth]) for i in instances]))
    return out


# ---- training -------------------------------------------------------------


def train_model(
    instances: Sequence[LabeledInstance], cfg: TrainConfig, n_blocks: int = 4, init_seed: int | None = None
) -> tuple[PpnModel, list[float]]:
    if not instances:
        raise ValueError("no labeled instances to train on")
    model = PpnModel.initialize(n_blocks, cfg.seed if init_seed is None else init_seed)
    every = max(1, (cfg.epochs_phase1 + cfg.epochs_phase2) // 20)

    def progress(epoch, loss):
        if epoch % every == 0:
            log.info("epoch %d loss %.6g", epoch, loss)

    return train(model, label_tensors(instances, cfg.s, cfg.T), cfg, log=progress)


def write_loss_history(history: Sequence[float], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "loss"])
    for i, v in enumerate(history):
        w.writerow([i, repr(float(v))])
    Path(path).write_text(buf.getvalue())


# ---- benchmark ------------------------------------------------------------


@dataclass(frozen=True)
class _BenchJob:
    entry: DatasetEntry
    strategy: str
    model: PpnModel | None
    rec: RecommendedList | None
    target_depth: int
    delta_t: float
    seed: int


def _run_one(job: _BenchJob) -> dict:
    g = job.entry.graph
    counter = EvalCounter()
    if job.strategy == "ppn1":
        out = strategy_ppn1(g, job.model, job.target_depth, job.rec, counter)
    elif job.strategy == "ppn2":
        out = strategy_ppn2(g, job.model, job.rec, counter)
    elif job.strategy == "tqa":
        out = run_baseline(g, tqa_params(job.target_depth, job.delta_t), counter)
    elif job.strategy == "random":
        out = run_baseline(g, random_params(job.target_depth, _graph_rng(job.seed, job.entry.graph_id)), counter)
    else:
        raise ValueError(f"unknown strategy {job.strategy!r}")
    if out.total_calls != counter.count:
        raise AssertionError("stage accounting does not match the evaluation counter")
    rec = {
        "graph_id": job.entry.graph_id,
        "strategy": job.strategy,
        "target_depth": None if job.strategy == "ppn2" else job.target_depth,
        "chosen_depth": out.chosen_depth,
        "approx_ratio": out.approx_ratio,
        "final_value": out.final_value,
        "calls_by_stage": out.calls_by_stage,
        "total_calls": counter.count,
        "params": out.final_params.to_dict(),
    }
    if job.strategy == "ppn2":
        rec["loop_iterations"] = out.loop_iterations
        rec["visited_values"] = out.visited_values
    return rec


def aggregate(records: Sequence[dict]) -> dict:
    """Table-style rows: mean ratio, mean calls per stage, extra and total."""
    rows = {}
    for name in dict.fromkeys(r["strategy"] for r in records):
        rs = [r for r in records if r["strategy"] == name]
        stages = sorted({k for r in rs for k in r["calls_by_stage"]})
        stage_means = {k: float(np.mean([r["calls_by_stage"].get(k, 0) for r in rs])) for k in stages}
        extra = sum(v for k, v in stage_means.items() if k != "depth1")
        row = {
            "n_graphs": len(rs),
            "target_depth": rs[0]["target_depth"],
            "approx_ratio": float(np.mean([r["approx_ratio"] for r in rs])),
            "min_approx_ratio": float(np.min([r["approx_ratio"] for r in rs])),
            "mean_calls_by_stage": stage_means,
            "mean_depth1_calls": stage_means.get("depth1", 0.0),
            "mean_extra_calls": extra,
            "mean_total_calls": float(np.mean([r["total_calls"] for r in rs])),
        }
        if name == "ppn2":
            row["mean_chosen_depth"] = float(np.mean([r["chosen_depth"] for r in rs]))
            row["mean_loop_iterations"] = float(np.mean([r["loop_iterations"] for r in rs]))
        rows[name] = row
    return rows


def report_csv(rows: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "target_depth", "n_graphs", "approx_ratio", "calls_p1", "extra", "total"])
    for name, r in rows.items():
        w.writerow(
            [
                name,
                "" if r["target_depth"] is None else r["target_depth"],
                r["n_graphs"],
                f"{r['approx_ratio']:.6f}",
                f"{r['mean_depth1_calls']:.2f}",
                f"{r['mean_extra_calls']:.2f}",
                f"{r['mean_total_calls']:.2f}",
            ]
        )
    return buf.getvalue()


def depth_probe(
    g: Graph, model: PpnModel, rec: RecommendedList, max_depth: int = 12, seed: int = 0, restarts: int = 5
) -> list[dict]:
    """Predicted ratio and prediction error versus freshly optimized angles, per depth.

    Evaluations here are bookkeeping and are not charged to any strategy.
    """
    best, _ = max_cut_brute_force(g)
    counter = EvalCounter()
    start = depth1_solve(g, rec, counter).best_params
    optimal = generate_labels(g, max_depth, restarts, counter, np.random.default_rng(seed), higher_restarts=restarts)
    rows = []
    x = normalize(start)
    for depth in range(1, max_depth + 1):
        pred = denormalize(x)
        truth = optimal[depth - 1]
        rows.append(
            {
                "depth": depth,
                "predicted_ratio": expected_value(g, pred) / best,
                "optimal_ratio": truth.best_value / best,
                "prediction_error": prediction_error(x, normalize(truth.best_params)),
            }
        )
        x = ppn_forward(model, x)
    return rows


def run_benchmark(
    entries: Sequence[DatasetEntry],
    model: PpnModel | None,
    rec: RecommendedList | None,
    strategies: Sequence[str] = STRATEGIES,
    target_depth: int = 10,
    delta_t: float = DEFAULT_DELTA_T,
    seed: int = 0,
    threads: int = 1,
) -> list[dict]:
    for name in strategies:
        if name not in STRATEGIES:
            raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
        if name in ("ppn1", "ppn2") and (model is None or rec is None):
            raise ValueError(f"strategy {name} needs a model and depth-1 labels")
    tests = [e for e in entries if e.split == "test"]
    if not tests:
        raise ValueError("dataset has no test graphs")
    jobs = [_BenchJob(e, name, model, rec, target_depth, delta_t, seed) for name in strategies for e in tests]
    return _map(_run_one, jobs, threads)


def bench_files(
    dataset_path,
    out_dir,
    *,
    model_path=None,
    labels_path=None,
    strategies: Sequence[str] = STRATEGIES,
    target_depth: int = 10,
    delta_t: float = DEFAULT_DELTA_T,
    seed: int = 0,
    threads: int = 1,
    probe_depth: int = 12,
) -> dict:
    """Run the benchmark and write report.json, report.csv, records.json, depth_probe.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = read_dataset(dataset_path)
    model = load_model(model_path) if model_path is not None else None
    rec = recommended_from_labels(read_labels(labels_path)) if labels_path is not None else None
    records = run_benchmark(entries, model, rec, strategies, target_depth, delta_t, seed, threads)
    rows = aggregate(records)
    report = {
        "metadata": {
            "seed": seed,
            "target_depth": target_depth,
            "delta_t": delta_t,
            "strategies": list(strategies),
            "dataset_sha256": sha256_file(dataset_path),
            "model_sha256": sha256_file(model_path) if model_path else None,
            "labels_sha256": sha256_file(labels_path) if labels_path else None,
            "recommended_list": rec.to_dict() if rec else None,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        },
        "rows": rows,
    }
    _dump_json(report, out_dir / "report.json")
    (out_dir / "report.csv").write_text(report_csv(rows))
    _dump_json(records, out_dir / "records.json")
    if model is not None and rec is not None and probe_depth > 0:
        g = next(e for e in entries if e.split == "test").graph
        probe = depth_probe(g, model, rec, probe_depth, seed)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(probe[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(probe)
        (out_dir / "depth_probe.csv").write_text(buf.getvalue())
    return report


def predict(model: PpnModel, params: ParameterSet, steps: int) -> ParameterSet:
    """``steps`` single-step predictions in angle space.

    Each step round-trips through normalization, so chaining k calls of one
    step reproduces one k-step call bit for bit.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    for _ in range(steps):
        params = denormalize(ppn_forward(model, normalize(params)))
    return params


def strip_timestamps(report: dict) -> dict:
    out = json.loads(json.dumps(report))
    out.get("metadata", {}).pop("timestamp", None)
    return out

"""
Warm starts versus cold starts at depth 10
==========================================

Four ways to reach a depth-10 QAOA circuit on a few test graphs:

* ppn1: solve depth 1, let the network extrapolate to depth 10, optimize once
* ppn2: solve depth 1, then keep predicting deeper angles while F rises
* tqa:  start from the linear annealing ramp
* random: start from uniform random angles

Pass a trained model file as the first argument (for example the
``model.ppn`` written by ``ppnqaoa train``) and its labels file as the
second; otherwise a small model is trained on the spot.
"""
import sys

import numpy as np

from ppnqaoa import EvalCounter, PpnModel, TrainConfig, load_model, random_params, tqa_params, train
from ppnqaoa.pipeline import gen_graphs, label_graphs, label_tensors, read_labels, recommended_from_labels
from ppnqaoa.strategies import run_baseline, strategy_ppn1, strategy_ppn2

if len(sys.argv) >= 3:
    model = load_model(sys.argv[1])
    rec = recommended_from_labels(read_labels(sys.argv[2]))
else:
    print("no model given; training a quick one on 12 graphs ...")
    train_set = [e for e in gen_graphs(16, 8, 0.5, 12, seed=11) if e.split == "train"]
    labels = label_graphs(train_set, max_depth=5, restarts=6, higher_restarts=3, seed=11)
    rec = recommended_from_labels(labels)
    model, _ = train(PpnModel.initialize(2, 0), label_tensors(labels),
                     TrainConfig(epochs_phase1=300, epochs_phase2=100, lr_phase1=3e-4, lr_phase2=3e-5,
                                 batch_phase1=4, batch_phase2=4))

tests = [e for e in gen_graphs(8, 8, 0.5, 2, seed=123) if e.split == "test"]
results = {name: [] for name in ("ppn1", "ppn2", "tqa", "random")}
for e in tests:
    g = e.graph
    rng = np.random.default_rng(e.graph_id)
    results["ppn1"].append(strategy_ppn1(g, model, 10, rec, EvalCounter()))
    results["ppn2"].append(strategy_ppn2(g, model, rec, EvalCounter()))
    results["tqa"].append(run_baseline(g, tqa_params(10), EvalCounter()))
    results["random"].append(run_baseline(g, random_params(10, rng), EvalCounter()))

print(f"\n{'strategy':8s} {'ratio':>8s} {'depth1':>8s} {'extra':>8s} {'total':>8s}")
for name, outs in results.items():
    d1 = np.mean([o.calls_by_stage.get("depth1", 0) for o in outs])
    total = np.mean([o.total_calls for o in outs])
    ratio = np.mean([o.approx_ratio for o in outs])
    print(f"{name:8s} {ratio:8.4f} {d1:8.1f} {total - d1:8.1f} {total:8.1f}")

depths = [o.chosen_depth for o in results["ppn2"]]
print("\ndepths chosen by the ppn2 search:", depths)

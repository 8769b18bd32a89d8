"""
Training a small parameter-to-parameter network
===============================================

Labels at depths 1..4 come from multi-start optimization. The network
learns to map the depth-p angles of a graph to its depth-(p+1) angles,
trained on the composed loss over several prediction steps.

This run is deliberately tiny (12 graphs, a 1-block network, a few
hundred epochs) so it finishes in about a minute. The command-line
``train`` subcommand runs the full schedule.
"""
import numpy as np

from ppnqaoa import PpnModel, TrainConfig, denormalize, normalize, ppn_compose, prediction_error, train
from ppnqaoa.pipeline import gen_graphs, label_graphs, label_tensors
from ppnqaoa.simulator import expected_value

entries = gen_graphs(16, 8, 0.5, 12, seed=5)
labels = label_graphs([e for e in entries if e.split == "train"], max_depth=4, restarts=6, higher_restarts=3, seed=5)

# The optima drift smoothly with depth: gamma ramps up, beta ramps down.
inst = labels[0]
for d in range(1, 5):
    ps = inst.params_by_depth[d]
    print(f"depth {d}: gamma={np.round(ps.gammas, 3)} beta={np.round(ps.betas, 3)}  F={inst.values_by_depth[d]:.4f}")

tensors = label_tensors(labels, s=1, T=3)
print("\ntraining tensors:", [t.shape for t in tensors])

model = PpnModel.initialize(n_blocks=1, seed=0)
cfg = TrainConfig(epochs_phase1=300, epochs_phase2=100, lr_phase1=3e-4, lr_phase2=3e-5,
                  batch_phase1=4, batch_phase2=4, T=3)
model, history = train(model, tensors, cfg)
for e in (0, 50, 100, 200, 300, 399):
    print(f"epoch {e:3d}  composed loss {history[e]:.5f}")

# Predict depth 4 from depth 1 for each training graph and score the guess.
print("\ngraph  predicted F / optimal F at depth 4   squared error")
for inst in labels[:6]:
    pred = ppn_compose(model, normalize(inst.params_by_depth[1]), 3)
    f_pred = expected_value(inst.graph, denormalize(pred))
    err = prediction_error(pred, normalize(inst.params_by_depth[4]))
    print(f"{inst.graph_id:5d}  {f_pred / inst.values_by_depth[4]:.4f}{'':24s}{err:.4f}")

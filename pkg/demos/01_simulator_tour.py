"""
A first look at the Max-Cut QAOA simulator
==========================================

Build a random 8-node graph, find its maximum cut by enumeration, then
watch the expected cut value move as we sweep depth-1 angles.
"""
import math

import numpy as np

from ppnqaoa import (
    EvalCounter,
    Graph,
    ParameterSet,
    approximation_ratio,
    erdos_renyi,
    expected_value,
    max_cut_brute_force,
    optimize_qaoa,
)

g = erdos_renyi(8, 0.5, seed=2024)
best, z = max_cut_brute_force(g)
print(f"graph: {g.n_nodes} nodes, {g.n_edges} edges")
print(f"maximum cut {best:.0f} with assignment {''.join(map(str, z.bits))}")

# With every angle at zero the state is the uniform superposition, which
# cuts each edge half the time.
print("F at zero angles:", expected_value(g, ParameterSet([0.0], [0.0])), "=", g.n_edges / 2)

# A coarse depth-1 landscape; rows are gamma, columns beta.
gammas = np.linspace(0, math.pi, 7, endpoint=False)
betas = np.linspace(0, math.pi / 2, 7, endpoint=False)
print("\ndepth-1 approximation ratio")
print("gamma\\beta " + " ".join(f"{b:6.3f}" for b in betas))
for gam in gammas:
    row = [approximation_ratio(g, ParameterSet([gam], [b])) for b in betas]
    print(f"{gam:10.3f} " + " ".join(f"{r:6.3f}" for r in row))

# Local optimization from a rough guess. Every evaluation of F, including
# finite-difference probes, goes through the counter.
counter = EvalCounter()
res = optimize_qaoa(g, ParameterSet([0.5], [0.3]), counter)
print(f"\noptimized depth 1: gamma={res.best_params.gammas[0]:.4f} beta={res.best_params.betas[0]:.4f}")
print(f"ratio {res.best_value / best:.4f} after {counter.count} evaluations")

# One edge is the smallest case with a closed form: F = 1/2 + 1/2 sin(4 beta) sin(gamma).
edge = Graph(2, [(1, 2)])
print("single edge at (pi/2, pi/8):", expected_value(edge, ParameterSet([math.pi / 2], [math.pi / 8])))

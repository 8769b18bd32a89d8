"""Initialization and depth-search strategies built on the PPN, plus baselines.

Only F evaluations are charged to the counter; PPN inference is free.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .graphs import Graph, max_cut_brute_force
from .optimize import RecommendedList, depth1_solve, optimize_qaoa
from .ppn import PpnModel, denormalize, normalize, ppn_compose, ppn_forward
from .schedules import random_params, tqa_params
from .simulator import EvalCounter, ParameterSet, expected_value

__all__ = [
    "MAX_SEARCH_DEPTH",
    "StrategyOutcome",
    "random_params",
    "run_baseline",
    "strategy_ppn1",
    "strategy_ppn2",
    "tqa_params",
]

MAX_SEARCH_DEPTH = 50


class DepthSearchError(RuntimeError):
    pass


@dataclass
class StrategyOutcome:
    final_params: ParameterSet
    final_value: float
    approx_ratio: float
    calls_by_stage: dict[str, int]
    chosen_depth: int | None = None
    loop_iterations: int | None = None
    visited_values: list[float] = field(default_factory=list)

    @property
    def total_calls(self) -> int:
        return sum(self.calls_by_stage.values())


def _ratio(g: Graph, value: float) -> float:
    best, _ = max_cut_brute_force(g)
    return value / best


def strategy_ppn1(
    g: Graph, model: PpnModel, target_depth: int, rec: RecommendedList, counter: EvalCounter
) -> StrategyOutcome:
    """Optimize depth 1, predict up to ``target_depth`` with the PPN, optimize once more."""
    if target_depth < 2:
        raise ValueError("target depth must be at least 2")
    c0 = counter.count
    first = depth1_solve(g, rec, counter)
    c1 = counter.count
    pred = ppn_compose(model, normalize(first.best_params), target_depth - 1)
    res = optimize_qaoa(g, denormalize(pred), counter)
    return StrategyOutcome(
        final_params=res.best_params,
        final_value=res.best_value,
        approx_ratio=_ratio(g, res.best_value),
        calls_by_stage={"depth1": c1 - c0, "final_opt": counter.count - c1},
        chosen_depth=target_depth,
    )


def strategy_ppn2(
    g: Graph, model: PpnModel, rec: RecommendedList, counter: EvalCounter, max_depth: int = MAX_SEARCH_DEPTH
) -> StrategyOutcome:
    """Depth search: keep predicting one layer deeper while F strictly increases.

    Returns the last parameters before the first non-increase. The depth-1
    optimum is re-evaluated once before the loop, so the extra calls are the
    loop iterations plus one.
    """
    c0 = counter.count
    first = depth1_solve(g, rec, counter)
    c1 = counter.count

    best_output = 0.0
    phi = normalize(first.best_params)
    best_phi = phi
    temp_output = expected_value(g, denormalize(phi), counter)
    visited = [temp_output]
    iterations = 0
    while temp_output > best_output:
        best_output, best_phi = temp_output, phi
        if phi.shape[-1] >= max_depth:
            raise DepthSearchError(f"depth search still improving at depth {max_depth}")
        phi = ppn_forward(model, phi)
        temp_output = expected_value(g, denormalize(phi), counter)
        visited.append(temp_output)
        iterations += 1
    final = denormalize(best_phi)
    return StrategyOutcome(
        final_params=final,
        final_value=best_output,
        approx_ratio=_ratio(g, best_output),
        calls_by_stage={"depth1": c1 - c0, "extra": counter.count - c1},
        chosen_depth=final.depth,
        loop_iterations=iterations,
        visited_values=visited,
    )


def run_baseline(g: Graph, init: ParameterSet, counter: EvalCounter) -> StrategyOutcome:
    """One local optimization from a fixed start; all calls are booked as extra."""
    c0 = counter.count
    res = optimize_qaoa(g, init, counter)
    return StrategyOutcome(
        final_params=res.best_params,
        final_value=res.best_value,
        approx_ratio=_ratio(g, res.best_value),
        calls_by_stage={"extra": counter.count - c0},
        chosen_depth=init.depth,
    )

"""Closed-form initial angles: the annealing-inspired linear ramp and uniform draws."""
from __future__ import annotations

import numpy as np

from .simulator import BETA_MAX, GAMMA_MAX, ParameterSet

DEFAULT_DELTA_T = 0.625


def tqa_params(target_depth: int, delta_t: float = DEFAULT_DELTA_T) -> ParameterSet:
    """gamma_i = (i/p) dt, beta_i = (1 - i/p) dt for i = 1..p."""
    if target_depth < 1:
        raise ValueError("target depth must be at least 1")
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    frac = np.arange(1, target_depth + 1) / target_depth
    ps = ParameterSet(frac * delta_t, (1.0 - frac) * delta_t)
    if not ps.in_bounds():
        raise ValueError(f"delta_t = {delta_t} pushes the schedule outside the parameter box")
    return ps


def random_params(depth: int, seed=None) -> ParameterSet:
    """Uniform angles over [0, pi) x [0, pi/2)."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ParameterSet(rng.uniform(0.0, GAMMA_MAX, depth), rng.uniform(0.0, BETA_MAX, depth))

"""Bounded local optimization of the QAOA objective and depth-1 seeding.

Gradients are central finite differences, and every probe counts as one
objective evaluation: the cost metric is the number of F evaluations, not
the number of optimizer iterations.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .graphs import Graph
from .schedules import DEFAULT_DELTA_T, random_params, tqa_params
from .simulator import (
    BETA_MAX,
    GAMMA_MAX,
    EvalCounter,
    ParameterSet,
    QaoaObjective,
    parameter_bounds,
)

FD_STEP = 1e-6
F_TOL_ABS = 1e-8
PG_TOL = 1e-6
MAX_ITER = 500
RECOMMENDED_SIZE = 10
TIE_TOL = 1e-12


@dataclass
class OptimizeResult:
    best_params: object  # np.ndarray for bounded_minimize, ParameterSet for QAOA
    best_value: float
    n_evals: int
    converged: bool
    n_iter: int = 0


@dataclass
class RecommendedList:
    """Points on the fitted line beta = slope * gamma + intercept."""

    slope: float
    intercept: float
    points: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "points": [list(p) for p in self.points],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RecommendedList:
        return cls(float(d["slope"]), float(d["intercept"]), [tuple(map(float, p)) for p in d["points"]])


class _Counted:
    """Wraps an objective, counting evaluations and supporting batched stencils."""

    def __init__(self, objective: Callable):
        self.objective = objective
        self.n_evals = 0
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf

    def batch(self, X: np.ndarray) -> np.ndarray:
        if hasattr(self.objective, "batch"):
            f = np.asarray(self.objective.batch(X), dtype=np.float64)
        else:
            f = np.array([float(self.objective(x)) for x in X])
        self.n_evals += len(X)
        if not np.all(np.isfinite(f)):
            raise FloatingPointError(f"objective returned a non-finite value at {X[~np.isfinite(f)][0]}")
        return f

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        d = x.size
        steps = FD_STEP * np.eye(d)
        stencil = np.vstack([x[None, :], x + steps, x - steps])
        f = self.batch(stencil)
        if f[0] < self.best_f:
            self.best_f, self.best_x = float(f[0]), x.copy()
        return float(f[0]), (f[1 : d + 1] - f[d + 1 :]) / (2 * FD_STEP)


def bounded_minimize(
    objective: Callable,
    x0: Sequence[float],
    bounds: Sequence[tuple[float, float]],
) -> OptimizeResult:
    """L-BFGS-B from ``x0`` with counted central-difference gradients.

    ``objective`` maps a flat vector to a float; if it also has a
    ``batch(X)`` method the gradient stencil is evaluated in one call.
    Stops when an iteration improves the objective by less than ~1e-8, the
    projected gradient drops below 1e-6 (inf-norm), or after 500 iterations.
    The returned point is the best non-probe point visited and always lies
    inside ``bounds``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    if x0.shape != lo.shape:
        raise ValueError(f"x0 has {x0.size} entries but {lo.size} bounds were given")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("bounds must be finite")
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError(f"x0 = {x0} lies outside the bounds")

    counted = _Counted(objective)
    first = counted.value_and_grad(x0)
    pending = [first]

    def fun(x):
        # scipy's first call is at x0, already paid for above
        if pending and np.array_equal(x, x0):
            return pending.pop()
        pending.clear()
        return counted.value_and_grad(x)

    # scipy's ftol is relative to max(|f|, 1); scale so the test is ~absolute.
    ftol = F_TOL_ABS / max(abs(first[0]), 1.0)
    res = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(lo, hi)),
        options={"ftol": ftol, "gtol": PG_TOL, "maxiter": MAX_ITER, "maxcor": 10},
    )
    x = np.clip(counted.best_x, lo, hi)
    return OptimizeResult(x, counted.best_f, counted.n_evals, bool(res.success), int(res.nit))


class _NegatedQaoa:
    def __init__(self, obj: QaoaObjective):
        self.obj = obj

    def batch(self, X):
        return -self.obj.batch(X)

    def __call__(self, x):
        return -self.obj(x)


def optimize_qaoa(g: Graph, init: ParameterSet, counter: EvalCounter) -> OptimizeResult:
    """Maximize F from ``init`` over the parameter box; every evaluation hits ``counter``."""
    init.check_bounds()
    start = counter.count
    obj = QaoaObjective(g, counter)
    res = bounded_minimize(_NegatedQaoa(obj), init.vector, parameter_bounds(init.depth))
    assert counter.count - start == res.n_evals
    return OptimizeResult(
        ParameterSet.from_vector(res.best_params), -res.best_value, res.n_evals, res.converged, res.n_iter
    )


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two equal-length sequences of at least 2 values")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(dx @ dx), math.sqrt(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise ValueError("pearson undefined for a constant sequence")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def fit_depth1_regression(optima: Sequence[tuple[float, float]], k: int = RECOMMENDED_SIZE) -> RecommendedList:
    """Least-squares line beta ~ gamma through depth-1 optima, plus ``k`` points on it.

    Points are evenly spaced in gamma over the observed gamma range, trimmed
    to the part of the line that stays inside the parameter box.
    """
    pts = np.asarray(optima, dtype=np.float64).reshape(-1, 2)
    if len(np.unique(pts, axis=0)) < 2:
        raise ValueError("need at least two distinct optima")
    gam, bet = pts[:, 0], pts[:, 1]
    dg = gam - gam.mean()
    var = dg @ dg
    if var == 0.0:
        raise ValueError("all optima share one gamma; slope undefined")
    slope = float(dg @ (bet - bet.mean()) / var)
    intercept = float(bet.mean() - slope * gam.mean())

    g_lo, g_hi = float(gam.min()), float(gam.max())
    g_hi = min(g_hi, math.nextafter(GAMMA_MAX, 0.0))
    g_lo = max(g_lo, 0.0)
    b_top = math.nextafter(BETA_MAX, 0.0)
    if slope != 0.0:
        ends = sorted(((0.0 - intercept) / slope, (b_top - intercept) / slope))
        g_lo, g_hi = max(g_lo, ends[0]), min(g_hi, ends[1])
    elif not 0.0 <= intercept < BETA_MAX:
        raise ValueError("fitted line never enters the parameter box")
    if g_lo > g_hi:
        raise ValueError("fitted line never enters the parameter box over the observed range")
    gs = np.linspace(g_lo, g_hi, k) if k > 1 else np.array([0.5 * (g_lo + g_hi)])
    points = []
    for gv in gs:
        bv = slope * gv + intercept
        # guard the open upper ends against rounding on the line
        bv = min(max(bv, 0.0), b_top)
        points.append((float(gv), float(bv)))
    return RecommendedList(slope, intercept, points)


def depth1_solve(g: Graph, rec: RecommendedList, counter: EvalCounter) -> OptimizeResult:
    """Evaluate every recommended point, then refine the best one."""
    if not rec.points:
        raise ValueError("recommended list is empty")
    start = counter.count
    obj = QaoaObjective(g, counter)
    vals = obj.batch(np.array(rec.points, dtype=np.float64))
    best = int(np.argmax(vals))
    res = optimize_qaoa(g, ParameterSet([rec.points[best][0]], [rec.points[best][1]]), counter)
    res.n_evals = counter.count - start
    return res


def grid_depth1(g: Graph, resolution: int, counter: EvalCounter | None = None) -> tuple[ParameterSet, float]:
    """Best point of a ``resolution x resolution`` grid over the depth-1 box."""
    gs = np.arange(resolution) * (GAMMA_MAX / resolution)
    bs = np.arange(resolution) * (BETA_MAX / resolution)
    G, B = np.meshgrid(gs, bs, indexing="ij")
    X = np.column_stack([G.ravel(), B.ravel()])
    vals = QaoaObjective(g, counter).batch(X)
    i = int(np.argmax(vals))
    return ParameterSet.from_vector(X[i]), float(vals[i])


def _keep_best(results: list[OptimizeResult]) -> OptimizeResult:
    best = results[0]
    for r in results[1:]:
        if r.best_value > best.best_value + TIE_TOL:
            best = r
    return best


def generate_labels(
    g: Graph,
    max_depth: int,
    restarts: int,
    counter: EvalCounter,
    rng=None,
    *,
    rec: RecommendedList | None = None,
    higher_restarts: int = 5,
    grid_resolution: int = 24,
    delta_t: float | None = DEFAULT_DELTA_T,
) -> list[OptimizeResult]:
    """Depth-progressive multi-start optima for depths ``1..max_depth``.

    Depth 1 starts from ``depth1_solve`` when ``rec`` is given, otherwise from
    the best point of a coarse grid, plus ``restarts - 1`` random starts.
    Each deeper level starts from the previous optimum with a zero layer
    appended, then from the linear ramp schedule (unless ``delta_t`` is
    None), then from random points, ``higher_restarts`` starts in total.
    Because the zero layer reproduces the previous state, values never
    decrease with depth. Returns one result per depth, index 0 being depth 1.

    The zero-layer start is a stationary point of the objective (the new
    mixer angle merges with the previous one), so on its own it only
    guarantees monotonicity; the ramp start is what usually finds the
    smooth, best-known optimum.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    if restarts < 1 or higher_restarts < 1:
        raise ValueError("restart counts must be positive")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    if rec is not None:
        first = depth1_solve(g, rec, counter)
    else:
        start, _ = grid_depth1(g, grid_resolution, counter)
        first = optimize_qaoa(g, start, counter)
    runs = [first] + [optimize_qaoa(g, random_params(1, rng), counter) for _ in range(restarts - 1)]
    labels = [_keep_best(runs)]
    for depth in range(2, max_depth + 1):
        warm = labels[-1].best_params.append_layer(0.0, 0.0)
        starts = [warm]
        if delta_t is not None and higher_restarts > 1:
            starts.append(tqa_params(depth, delta_t))
        starts += [random_params(depth, rng) for _ in range(higher_restarts - len(starts))]
        runs = [optimize_qaoa(g, s, counter) for s in starts]
        labels.append(_keep_best(runs))
    return labels

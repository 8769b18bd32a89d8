"""Exact statevector simulation of depth-p Max-Cut QAOA.

Amplitude index ``z`` follows the bit order of :mod:`ppnqaoa.graphs`
(node 1 is the most significant bit). All arithmetic is complex128.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, max_cut_brute_force

GAMMA_MAX = math.pi
BETA_MAX = math.pi / 2


@dataclass(frozen=True)
class ParameterSet:
    """QAOA angles for one depth. ``gammas[j]``/``betas[j]`` drive layer j+1.

    Construction only checks shape and finiteness; use :meth:`in_bounds` or
    :meth:`canonical` for the ``[0, pi) x [0, pi/2)`` box.
    """

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __init__(self, gammas: Sequence[float], betas: Sequence[float]):
        gammas = tuple(float(x) for x in np.ravel(gammas))
        betas = tuple(float(x) for x in np.ravel(betas))
        if len(gammas) != len(betas):
            raise ValueError(f"{len(gammas)} gammas but {len(betas)} betas")
        if not gammas:
            raise ValueError("depth must be at least 1")
        if not all(math.isfinite(x) for x in gammas + betas):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def depth(self) -> int:
        return len(self.gammas)

    def in_bounds(self) -> bool:
        return all(0.0 <= g < GAMMA_MAX for g in self.gammas) and all(
            0.0 <= b < BETA_MAX for b in self.betas
        )

    def check_bounds(self) -> ParameterSet:
        if not self.in_bounds():
            raise ValueError(f"angles outside [0, pi) x [0, pi/2): {self}")
        return self

    def canonical(self) -> ParameterSet:
        """Equivalent angles (same expected value on unit-weight graphs) in the box.

        gamma is 2pi-periodic, beta is pi/2-periodic, and the expectation is
        invariant under (gamma, beta) -> (-gamma, -beta). The mirror acts on
        all layers at once, so some sets have no in-box representative;
        those raise ValueError.
        """
        g = np.mod(self.vector[: self.depth], 2 * math.pi)
        b = np.mod(self.vector[self.depth :], BETA_MAX)
        for cand in (ParameterSet(g, b), ParameterSet(np.mod(-g, 2 * math.pi), np.mod(-b, BETA_MAX))):
            if cand.in_bounds():
                return cand
        raise ValueError(f"no equivalent angle set inside the box for {self}")

    @property
    def vector(self) -> np.ndarray:
        """Flat ``[gamma_1..gamma_p, beta_1..beta_p]``."""
        return np.array(self.gammas + self.betas, dtype=np.float64)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> ParameterSet:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size % 2:
            raise ValueError("parameter vector must be flat with even length")
        p = x.size // 2
        return cls(x[:p], x[p:])

    def append_layer(self, gamma: float = 0.0, beta: float = 0.0) -> ParameterSet:
        return ParameterSet(self.gammas + (gamma,), self.betas + (beta,))

    def to_dict(self) -> dict:
        return {"p": self.depth, "gamma": list(self.gammas), "beta": list(self.betas)}

    @classmethod
    def from_dict(cls, d: dict) -> ParameterSet:
        ps = cls(d["gamma"], d["beta"])
        if "p" in d and int(d["p"]) != ps.depth:
            raise ValueError(f"declared depth {d['p']} but {ps.depth} angle pairs given")
        return ps


def parameter_bounds(depth: int) -> list[tuple[float, float]]:
    """Closed optimizer box whose upper ends sit one ulp inside the open bounds."""
    g_hi = math.nextafter(GAMMA_MAX, 0.0)
    b_hi = math.nextafter(BETA_MAX, 0.0)
    return [(0.0, g_hi)] * depth + [(0.0, b_hi)] * depth


class EvalCounter:
    """Counts expected-value evaluations. Not thread-safe; one per run."""

    def __init__(self, count: int = 0):
        self.count = count

    def increment(self, k: int = 1) -> None:
        if k < 0:
            raise ValueError("counter only moves forward")
        self.count += k

    def __repr__(self):
        return f"EvalCounter({self.count})"


def plus_state(n_qubits: int) -> np.ndarray:
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    dim = 1 << n_qubits
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)


def _n_qubits(state: np.ndarray) -> int:
    n = int(state.shape[0]).bit_length() - 1
    if state.shape[0] != 1 << n or n < 1:
        raise ValueError(f"state length {state.shape[0]} is not a power of two")
    return n


def apply_cost_unitary(state: np.ndarray, g: Graph, gamma: float) -> np.ndarray:
    """Multiply amplitude z by exp(-i gamma C(z))."""
    if _n_qubits(state) != g.n_nodes:
        raise ValueError(f"state has {_n_qubits(state)} qubits, graph has {g.n_nodes} nodes")
    return state * np.exp(-1j * gamma * g.cut_values)


def apply_mixer_unitary(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply exp(-i beta X) to every qubit."""
    n = _n_qubits(state)
    c, s = math.cos(beta), math.sin(beta)
    out = np.asarray(state, dtype=np.complex128)
    for q in range(n):
        a = out.reshape(1 << q, 2, -1)
        lo, hi = a[:, 0], a[:, 1]
        out = np.stack((c * lo - 1j * s * hi, c * hi - 1j * s * lo), axis=1).reshape(-1)
    return out


def prepare_state(g: Graph, params: ParameterSet) -> np.ndarray:
    state = plus_state(g.n_nodes)
    for gamma, beta in zip(params.gammas, params.betas):
        state = apply_cost_unitary(state, g, gamma)
        state = apply_mixer_unitary(state, beta)
    return state


def expected_value(g: Graph, params: ParameterSet, counter: EvalCounter | None = None) -> float:
    """F(gamma, beta) = sum_z |<z|psi>|^2 C(z). Counts one evaluation."""
    state = prepare_state(g, params)
    if counter is not None:
        counter.increment()
    return float(np.dot(np.abs(state) ** 2, g.cut_values))


def approximation_ratio(g: Graph, params: ParameterSet, counter: EvalCounter | None = None) -> float:
    if g.n_edges == 0:
        raise ValueError("approximation ratio undefined for an edgeless graph")
    best, _ = max_cut_brute_force(g)
    return expected_value(g, params, counter) / best


def _walsh_hadamard(a: np.ndarray, n: int) -> np.ndarray:
    """Normalized H^{(x)n} on axis 0 of a (2**n, B) array."""
    shape = a.shape
    for k in range(n):
        a = a.reshape(1 << k, 2, -1)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
    return a.reshape(shape) * (2.0 ** (-n / 2))


class QaoaObjective:
    """Batched F evaluator over flat angle vectors ``[gammas, betas]``.

    Uses exp(-i beta sum X) = H exp(-i beta sum Z) H so a whole batch of
    parameter vectors (e.g. a finite-difference stencil) runs as a few array
    operations. Every row evaluated increments ``counter`` by one. Angles are
    not range-checked here.
    """

    def __init__(self, g: Graph, counter: EvalCounter | None = None):
        self.graph = g
        self.counter = counter if counter is not None else EvalCounter()
        n = g.n_nodes
        self._n = n
        self._cost = np.asarray(g.cut_values)
        popcount = np.array([(z).bit_count() for z in range(1 << n)], dtype=np.float64)
        self._mix_diag = n - 2.0 * popcount

    def states(self, X: np.ndarray) -> np.ndarray:
        """Prepared states as columns, shape (2**n, B)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        p = X.shape[1] // 2
        dim = 1 << self._n
        psi = np.full((dim, X.shape[0]), dim ** -0.5, dtype=np.complex128)
        for j in range(p):
            psi *= np.exp(-1j * np.outer(self._cost, X[:, j]))
            psi = _walsh_hadamard(psi, self._n)
            psi *= np.exp(-1j * np.outer(self._mix_diag, X[:, p + j]))
            psi = _walsh_hadamard(psi, self._n)
        return psi

    def batch(self, X: np.ndarray) -> np.ndarray:
        psi = self.states(X)
        self.counter.increment(psi.shape[1])
        return self._cost @ (psi.real ** 2 + psi.imag ** 2)

    def __call__(self, x: np.ndarray) -> float:
        return float(self.batch(np.asarray(x, dtype=np.float64)[None, :])[0])

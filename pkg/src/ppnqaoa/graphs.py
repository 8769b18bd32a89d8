"""Max-Cut problem instances on unweighted graphs.

Node indices are 1-based. A cut assignment ``z_1 z_2 ... z_n`` maps to the
integer ``z`` with ``z_1`` as the most significant bit; the same convention
indexes statevector amplitudes in :mod:`ppnqaoa.simulator`.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_ENUMERATION_NODES = 24


@dataclass(frozen=True)
class Graph:
    """Undirected graph with unit edge weights."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, n_nodes: int, edges: Iterable[Sequence[int]]):
        n_nodes = int(n_nodes)
        if n_nodes < 1:
            raise ValueError(f"n_nodes must be positive, got {n_nodes}")
        canon = set()
        for e in edges:
            u, v = (int(e[0]), int(e[1]))
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (1 <= u <= n_nodes and 1 <= v <= n_nodes):
                raise ValueError(f"edge ({u}, {v}) outside node range [1, {n_nodes}]")
            pair = (min(u, v), max(u, v))
            if pair in canon:
                raise ValueError(f"duplicate edge {pair}")
            canon.add(pair)
        object.__setattr__(self, "n_nodes", n_nodes)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def cut_values(self) -> np.ndarray:
        """C(z) for every basis index z in [0, 2**n), as float64."""
        if self.n_nodes > MAX_ENUMERATION_NODES:
            raise ValueError(f"{self.n_nodes} nodes is too many to enumerate")
        bits = _index_bits(self.n_nodes)
        out = np.zeros(1 << self.n_nodes, dtype=np.int64)
        for u, v in self.edges:
            out += bits[u - 1] ^ bits[v - 1]
        vals = out.astype(np.float64)
        vals.setflags(write=False)
        return vals

    def to_dict(self) -> dict:
        return {"n": self.n_nodes, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> Graph:
        return cls(d["n"], d["edges"])

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)])

    @classmethod
    def cycle(cls, n: int) -> Graph:
        return cls(n, [(k, k % n + 1) for k in range(1, n + 1)])


def _index_bits(n: int) -> np.ndarray:
    """Row j holds bit z_{j+1} of every index, MSB first."""
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[None, :] >> shifts[:, None]) & 1


@dataclass(frozen=True)
class CutAssignment:
    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("cut assignment bits must be 0 or 1")

    @property
    def index(self) -> int:
        z = 0
        for b in self.bits:
            z = (z << 1) | b
        return z

    @classmethod
    def from_index(cls, z: int, n: int) -> CutAssignment:
        if not 0 <= z < (1 << n):
            raise ValueError(f"index {z} out of range for {n} nodes")
        return cls(tuple((z >> (n - 1 - j)) & 1 for j in range(n)))

    @classmethod
    def from_string(cls, s: str) -> CutAssignment:
        return cls(tuple(int(c) for c in s))

    def complement(self) -> CutAssignment:
        return CutAssignment(tuple(1 - b for b in self.bits))

    def __len__(self) -> int:
        return len(self.bits)


def erdos_renyi(n_nodes: int, edge_prob: float, seed=None) -> Graph:
    """Sample G(n, p), redrawing until the graph has at least one edge.

    ``seed`` may be an int, ``None`` or a ``numpy.random.Generator``; a
    generator is advanced in place, which is how datasets draw many graphs
    from one stream.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    if not 0.0 < edge_prob <= 1.0:
        raise ValueError(f"edge probability must lie in (0, 1], got {edge_prob}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pairs = [(u, v) for u in range(1, n_nodes + 1) for v in range(u + 1, n_nodes + 1)]
    while True:
        keep = rng.random(len(pairs)) < edge_prob
        if keep.any():
            return Graph(n_nodes, [e for e, k in zip(pairs, keep) if k])


def cut_value(g: Graph, z) -> float:
    """Number of edges crossing the cut ``z`` (a CutAssignment or bit sequence)."""
    bits = z.bits if isinstance(z, CutAssignment) else tuple(int(b) for b in z)
    if len(bits) != g.n_nodes:
        raise ValueError(f"assignment has {len(bits)} bits, graph has {g.n_nodes} nodes")
    total = 0.0
    for u, v in g.edges:
        total += 0.5 * (1 - (-1) ** bits[u - 1] * (-1) ** bits[v - 1])
    return total


def max_cut_brute_force(g: Graph) -> tuple[float, CutAssignment]:
    """Exhaustive Max-Cut; ties go to the smallest integer encoding."""
    if g.n_nodes > MAX_ENUMERATION_NODES:
        raise ValueError(
            f"{g.n_nodes} nodes exceeds the enumeration limit of {MAX_ENUMERATION_NODES}"
        )
    vals = g.cut_values
    z = int(np.argmax(vals))
    return float(vals[z]), CutAssignment.from_index(z, g.n_nodes)

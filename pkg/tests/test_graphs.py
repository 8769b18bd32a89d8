import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import cut_by_bitstring

from ppnqaoa.graphs import CutAssignment, Graph, cut_value, erdos_renyi, max_cut_brute_force

TRIANGLE = Graph(3, [(1, 2), (2, 3), (1, 3)])
SQUARE = Graph.cycle(4)


def test_complete_graph_at_prob_one():
    g = erdos_renyi(8, 1.0, seed=123)
    assert g.n_edges == 28


def test_erdos_renyi_deterministic():
    assert erdos_renyi(8, 0.5, 7) == erdos_renyi(8, 0.5, 7)


def test_erdos_renyi_mean_edges():
    counts = np.array([erdos_renyi(8, 0.5, s).n_edges for s in range(1000)])
    # binomial(28, 1/2): sd = sqrt(7); a few empty draws are resampled, negligible
    se = np.sqrt(28 * 0.25) / np.sqrt(len(counts))
    assert abs(counts.mean() - 14) < 3 * se


def test_erdos_renyi_never_empty():
    for s in range(200):
        assert erdos_renyi(2, 0.05, s).n_edges == 1


@pytest.mark.parametrize("n, p", [(1, 0.5), (8, 0.0), (8, 1.5), (8, -0.1)])
def test_erdos_renyi_rejects(n, p):
    with pytest.raises(ValueError):
        erdos_renyi(n, p, 0)


@pytest.mark.parametrize(
    "edges",
    [[(1, 1)], [(1, 2), (2, 1)], [(0, 1)], [(1, 5)]],
)
def test_graph_validation(edges):
    with pytest.raises(ValueError):
        Graph(4, edges)


def test_graph_edges_canonical():
    g = Graph(4, [(3, 1), (2, 4)])
    assert g.edges == ((1, 3), (2, 4))
    assert Graph.from_dict(g.to_dict()) == g


@pytest.mark.parametrize(
    "g, z, expected",
    [(TRIANGLE, "000", 0), (TRIANGLE, "100", 2), (SQUARE, "0101", 4)],
)
def test_cut_value_examples(g, z, expected):
    assert cut_value(g, CutAssignment.from_string(z)) == expected
    assert cut_value(g, [int(c) for c in z]) == expected


def test_cut_value_length_mismatch():
    with pytest.raises(ValueError):
        cut_value(TRIANGLE, [0, 1])


def test_brute_force_examples():
    assert max_cut_brute_force(TRIANGLE)[0] == 2
    assert max_cut_brute_force(SQUARE)[0] == 4


def test_brute_force_matches_recount():
    g = erdos_renyi(8, 0.5, 2024)
    value, z = max_cut_brute_force(g)
    recount = [cut_by_bitstring(8, g.edges, bits) for bits in itertools.product((0, 1), repeat=8)]
    assert value == max(recount)
    # smallest integer encoding among optima; product() enumerates in index order
    assert z.index == recount.index(max(recount))


def test_brute_force_guard():
    with pytest.raises(ValueError):
        max_cut_brute_force(Graph(25, [(1, 2)]))


def test_bit_order_msb_is_node_one():
    z = CutAssignment.from_index(0b100, 3)
    assert z.bits == (1, 0, 0)
    assert z.index == 4
    # node 1 alone on one side of the triangle cuts 2 edges
    assert TRIANGLE.cut_values[4] == 2


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 8), p=st.floats(0.1, 1.0))
def test_cut_properties(seed, n, p):
    g = erdos_renyi(n, p, seed)
    vals = g.cut_values
    assert np.all(vals == np.round(vals))
    assert vals.min() >= 0 and vals.max() <= g.n_edges
    assert max_cut_brute_force(g)[0] >= g.n_edges / 2
    for z in range(0, 1 << n, max(1, (1 << n) // 16)):
        a = CutAssignment.from_index(z, n)
        assert CutAssignment.from_index(a.index, n) == a
        assert cut_value(g, a) == cut_value(g, a.complement()) == vals[z]

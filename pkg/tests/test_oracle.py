import itertools

import numpy as np
import pytest

from coded_multicast.coloring import is_proper
from coded_multicast.conflict_graph import ConflictGraph
from coded_multicast.oracle import MAX_VERTICES, chromatic_number


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return ConflictGraph.from_edges(10, outer + spokes + inner)


def brute_chi(adj):
    V = len(adj)
    for k in range(1, V + 1):
        for cols in itertools.product(range(k), repeat=V):
            if all(cols[i] != cols[j] for i in range(V) for j in range(i + 1, V) if adj[i, j]):
                return k
    return 0


@pytest.mark.parametrize("graph, chi", [
    (ConflictGraph.from_adjacency(~np.eye(4, dtype=bool)), 4),
    (ConflictGraph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)]), 2),
    (ConflictGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)]), 3),
    (petersen(), 3),
    (ConflictGraph.from_adjacency(np.zeros((3, 3), bool)), 1),
])
def test_known_chromatic_numbers(graph, chi):
    res = chromatic_number(graph)
    assert res.chi == chi
    assert is_proper(graph, res.witness) and res.witness.num_colors == chi


def test_empty_graph():
    assert chromatic_number(np.zeros((0, 0), bool)).chi == 0


@pytest.mark.parametrize("seed", range(30))
def test_agrees_with_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    V = int(rng.integers(1, 8))
    upper = np.triu(rng.random((V, V)) < rng.uniform(0.2, 0.8), k=1)
    adj = upper | upper.T
    assert chromatic_number(adj).chi == brute_chi(adj)


def test_refuses_large_graphs():
    with pytest.raises(ValueError):
        chromatic_number(np.zeros((MAX_VERTICES + 1,) * 2, bool))

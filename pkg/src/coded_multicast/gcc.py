"""Greedy constrained coloring.

``gcc1`` grows independent sets whose members share the same user set K
(users caching or requesting the packet); ``gcc2`` is plain uncoded
multicast, one color per distinct packet; ``gcc`` keeps the smaller one.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .coloring import Coloring
from .conflict_graph import ConflictGraph


def gcc1(graph: ConflictGraph, K: Sequence[frozenset[int]], rng: np.random.Generator | None = None) -> Coloring:
    """With ``rng=None`` the pivot is always the lowest remaining vertex."""
    V = len(graph)
    if len(K) != V:
        raise ValueError(f"need one user set per vertex: got {len(K)} for {V} vertices")
    group_of: dict[frozenset[int], list[int]] = {}
    for i, k in enumerate(K):
        group_of.setdefault(k, []).append(i)

    colors = np.full(V, -1, dtype=np.int64)
    remaining = np.ones(V, dtype=bool)
    next_color = 0
    left = V
    while left:
        if rng is None:
            pivot = int(np.argmax(remaining))
        else:
            pivot = int(rng.choice(np.flatnonzero(remaining)))
        members = [pivot]
        blocked = graph.adj[pivot].copy()
        for v in group_of[K[pivot]]:
            if v != pivot and remaining[v] and not blocked[v]:
                members.append(v)
                blocked |= graph.adj[v]
        colors[members] = next_color
        remaining[members] = False
        left -= len(members)
        next_color += 1
    return Coloring(colors)


def gcc2(graph: ConflictGraph) -> Coloring:
    if len(graph) == 0:
        return Coloring(np.zeros(0, dtype=np.int64))
    _, colors = np.unique(graph.packet_keys(), return_inverse=True)
    return Coloring(colors.reshape(-1))


def gcc(graph: ConflictGraph, K: Sequence[frozenset[int]], rng: np.random.Generator | None = None) -> Coloring:
    first = gcc1(graph, K, rng)
    second = gcc2(graph)
    return first if first.num_colors <= second.num_colors else second

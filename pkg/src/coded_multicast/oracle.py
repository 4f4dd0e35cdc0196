"""Exact chromatic number by branch and bound, for checking heuristics on tiny graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coloring import Coloring
from .conflict_graph import ConflictGraph

MAX_VERTICES = 20


@dataclass(frozen=True)
class OracleResult:
    chi: int
    witness: Coloring


def _adjacency(graph) -> np.ndarray:
    return np.asarray(graph.adj if isinstance(graph, ConflictGraph) else graph, dtype=bool)


def greedy_clique(adj: np.ndarray, order: list[int]) -> list[int]:
    clique: list[int] = []
    for v in order:
        if all(adj[v, w] for w in clique):
            clique.append(v)
    return clique


def first_fit(adj: np.ndarray, order: list[int]) -> np.ndarray:
    colors = np.full(len(adj), -1, dtype=np.int64)
    for v in order:
        used = set(colors[adj[v]].tolist())
        colors[v] = next(c for c in range(len(adj)) if c not in used)
    return colors


def chromatic_number(graph: ConflictGraph | np.ndarray) -> OracleResult:
    """Accepts a ConflictGraph or a square boolean adjacency matrix."""
    adj = _adjacency(graph)
    V = len(adj)
    if V > MAX_VERTICES:
        raise ValueError(f"oracle limited to {MAX_VERTICES} vertices, got {V}")
    if V == 0:
        return OracleResult(0, Coloring(np.zeros(0, dtype=np.int64)))

    order = sorted(range(V), key=lambda v: (-int(adj[v].sum()), v))
    best = first_fit(adj, order)
    best_k = int(best.max()) + 1
    lower = len(greedy_clique(adj, order))
    colors = np.full(V, -1, dtype=np.int64)

    def search(pos: int, used: int) -> bool:
        nonlocal best, best_k
        if used >= best_k:
            return False
        if pos == V:
            best, best_k = colors.copy(), used
            return best_k == lower
        v = order[pos]
        blocked = set(colors[adj[v]].tolist())
        # one fresh color suffices: fresh colors are interchangeable
        for c in range(min(used + 1, best_k - 1)):
            if c in blocked:
                continue
            colors[v] = c
            if search(pos + 1, max(used, c + 1)):
                return True
            colors[v] = -1
        return False

    if best_k > lower:
        search(0, 0)
    return OracleResult(best_k, Coloring(best))

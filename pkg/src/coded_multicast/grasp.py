"""GRASP for conflict-graph coloring.

Each iteration builds a coloring greedily with a randomized candidate list
(RCL) over vertex degrees, then runs a redundant-color local search; the
coloring with the fewest colors over all iterations wins.

Vertices are relabelled once, by non-ascending degree (stable), and that
order is the tie-break order for everything downstream. The hot loops are
numba kernels over a CSR adjacency; random draws are produced up front from
a per-iteration generator seeded with ``(seed, iteration)``, so a run is
reproducible and iterations are independent of one another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .coloring import Coloring, check_proper
from .conflict_graph import ConflictGraph

ADAPTIVE = "adaptive"
STATIC = "static"


@dataclass(frozen=True)
class GraspParams:
    max_iterations: int = 100
    beta: float | None = None  # None draws beta uniformly in [0, 1] per iteration
    seed: int = 0
    greedy: str = ADAPTIVE

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.greedy not in (ADAPTIVE, STATIC):
            raise ValueError(f"greedy must be '{ADAPTIVE}' or '{STATIC}'")


@dataclass(frozen=True)
class RclState:
    g_min: float
    g_max: float
    tau: float
    rcl: tuple[int, ...]


@dataclass
class GraspRun:
    best: Coloring
    constructed: list[int] = field(default_factory=list)
    improved: list[int] = field(default_factory=list)
    best_so_far: list[int] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    best_iteration: int = 0


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _lowest_free(indptr, indices, i, colors, active, ncolors, skip, mark, stamp):
    """Lowest active color other than ``skip`` unused by ``i``'s neighbours, or -1."""
    for k in range(indptr[i], indptr[i + 1]):
        c = colors[indices[k]]
        if c >= 0:
            mark[c] = stamp
    for c in range(ncolors):
        if active[c] and c != skip and mark[c] != stamp:
            return c
    return -1


@numba.njit(cache=True)
def _construct(indptr, indices, beta, draws, adaptive):
    V = indptr.size - 1
    g = np.empty(V, dtype=np.int64)
    for i in range(V):
        g[i] = indptr[i + 1] - indptr[i]
    colors = np.full(V, -1, dtype=np.int64)
    active = np.ones(V + 1, dtype=np.bool_)
    mark = np.zeros(V + 1, dtype=np.int64)
    ncolors = 0
    for step in range(V):
        gmin = np.iinfo(np.int64).max
        gmax = np.iinfo(np.int64).min
        for i in range(V):
            if colors[i] < 0:
                if g[i] < gmin:
                    gmin = g[i]
                if g[i] > gmax:
                    gmax = g[i]
        tau = gmin + beta * (gmax - gmin)
        size = 0
        for i in range(V):
            if colors[i] < 0 and g[i] >= tau:
                size += 1
        pick = min(int(draws[step] * size), size - 1)
        chosen = -1
        for i in range(V):
            if colors[i] < 0 and g[i] >= tau:
                if pick == 0:
                    chosen = i
                    break
                pick -= 1
        c = _lowest_free(indptr, indices, chosen, colors, active, ncolors, -1, mark, step + 1)
        if c < 0:
            c = ncolors
            ncolors += 1
        colors[chosen] = c
        if adaptive:
            for k in range(indptr[chosen], indptr[chosen + 1]):
                g[indices[k]] -= 1
    return colors, ncolors


@numba.njit(cache=True)
def _local_search(indptr, indices, colors, ncolors):
    V = indptr.size - 1
    colors = colors.copy()
    active = np.ones(ncolors, dtype=np.bool_)
    mark = np.zeros(ncolors + 1, dtype=np.int64)
    stamp = 0
    removed = True
    while removed:
        removed = False
        for c in range(ncolors):
            if not active[c]:
                continue
            emptied = True
            for i in range(V):
                if colors[i] != c:
                    continue
                stamp += 1
                alt = _lowest_free(indptr, indices, i, colors, active, ncolors, c, mark, stamp)
                if alt >= 0:
                    colors[i] = alt
                else:
                    emptied = False
            if emptied:
                active[c] = False
                removed = True
    return colors


# ---------------------------------------------------------------- helpers


def canonical_order(graph: ConflictGraph) -> np.ndarray:
    """Vertex indices sorted by non-ascending degree, lower index first on ties."""
    return np.argsort(-graph.degree, kind="stable")


def _relabel(graph: ConflictGraph, order: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    adj = graph.adj[np.ix_(order, order)]
    rows, cols = np.nonzero(adj)
    indptr = np.zeros(len(order) + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=len(order)), out=indptr[1:])
    return indptr, cols.astype(np.int64)


def _restore(order: np.ndarray, relabelled: np.ndarray) -> Coloring:
    colors = np.empty_like(relabelled)
    colors[order] = relabelled
    return Coloring(colors)


def make_rcl(beta: float, uncolored, greedy_values) -> RclState:
    """Candidates whose greedy value reaches ``g_min + beta*(g_max - g_min)``.

    ``greedy_values`` is indexable by vertex; ``uncolored`` lists the candidates.
    """
    cand = [int(i) for i in uncolored]
    if not cand:
        raise ValueError("RCL needs at least one uncolored vertex")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    vals = [greedy_values[i] for i in cand]
    g_min, g_max = min(vals), max(vals)
    tau = g_min + beta * (g_max - g_min)
    return RclState(g_min, g_max, tau, tuple(i for i, g in zip(cand, vals) if g >= tau))


def get_color(graph: ConflictGraph, i: int, colors: np.ndarray, palette: int) -> int:
    """Color for vertex ``i`` given partial ``colors`` (-1 = uncolored) and palette ``0..palette-1``.

    Returns the lowest palette color absent from the neighbourhood, or
    ``palette`` itself (a fresh color) when every palette color is blocked.
    """
    colors = np.asarray(colors, dtype=np.int64)
    mark = np.zeros(max(palette, 1) + 1, dtype=np.int64)
    active = np.ones(max(palette, 1), dtype=np.bool_)
    c = _lowest_free(graph.indptr, graph.indices, i, colors, active, palette, -1, mark, 1)
    return palette if c < 0 else int(c)


def _iteration_draws(params: GraspParams, k: int, V: int) -> tuple[float, np.ndarray]:
    rng = np.random.default_rng([params.seed, k])
    beta = rng.random() if params.beta is None else params.beta
    return float(beta), rng.random(V)


def construct_solution(beta: float, graph: ConflictGraph, rng: np.random.Generator, greedy: str = ADAPTIVE) -> Coloring:
    if len(graph) == 0:
        return Coloring(np.zeros(0, dtype=np.int64))
    order = canonical_order(graph)
    indptr, indices = _relabel(graph, order)
    colors, _ = _construct(indptr, indices, float(beta), rng.random(len(graph)), greedy == ADAPTIVE)
    out = _restore(order, colors)
    check_proper(graph, out, "construction")
    return out


def local_search(graph: ConflictGraph, coloring: Coloring) -> Coloring:
    """Recolor vertices away from redundant colors until no color can be dropped."""
    check_proper(graph, coloring, "local search input")
    if len(graph) == 0:
        return coloring
    order = canonical_order(graph)
    indptr, indices = _relabel(graph, order)
    ids, dense = np.unique(coloring.colors[order], return_inverse=True)
    improved = _local_search(indptr, indices, dense.reshape(-1).astype(np.int64), ids.size)
    out = _restore(order, ids[improved])
    check_proper(graph, out, "local search output")
    return out


def grasp_run(graph: ConflictGraph, params: GraspParams = GraspParams(), check: bool = True) -> GraspRun:
    V = len(graph)
    if V == 0:
        empty = Coloring(np.zeros(0, dtype=np.int64))
        return GraspRun(empty, [0] * params.max_iterations, [0] * params.max_iterations,
                        [0] * params.max_iterations, [0.0] * params.max_iterations)
    order = canonical_order(graph)
    indptr, indices = _relabel(graph, order)
    adaptive = params.greedy == ADAPTIVE
    best_colors, best_count = None, np.inf
    trace = GraspRun(best=None)  # type: ignore[arg-type]
    for k in range(params.max_iterations):
        beta, draws = _iteration_draws(params, k, V)
        built, ncolors = _construct(indptr, indices, beta, draws, adaptive)
        improved = _local_search(indptr, indices, built, ncolors)
        count = int(np.unique(improved).size)
        if check:
            check_proper(graph, _restore(order, built), f"construction {k}")
            check_proper(graph, _restore(order, improved), f"local search {k}")
        trace.betas.append(beta)
        trace.constructed.append(int(ncolors))
        trace.improved.append(count)
        if count < best_count:
            best_colors, best_count = improved, count
            trace.best_iteration = k
        trace.best_so_far.append(int(best_count))
    trace.best = _restore(order, best_colors).renumbered()
    return trace


def grasp(graph: ConflictGraph, params: GraspParams = GraspParams()) -> Coloring:
    return grasp_run(graph, params).best

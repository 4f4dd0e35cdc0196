import time

import numpy as np
import pytest

from coded_multicast.coloring import Coloring, is_proper
from coded_multicast.conflict_graph import ConflictGraph, build
from coded_multicast.grasp import (
    GraspParams,
    canonical_order,
    construct_solution,
    get_color,
    grasp,
    grasp_run,
    local_search,
    make_rcl,
)
from coded_multicast.model import DemandVector, SystemConfig
from coded_multicast.oracle import chromatic_number
from coded_multicast.placement import CachePlacement


def complete(k):
    return ConflictGraph.from_adjacency(~np.eye(k, dtype=bool))


def cycle(k):
    return ConflictGraph.from_edges(k, [(i, (i + 1) % k) for i in range(k)])


def path(k):
    return ConflictGraph.from_edges(k, [(i, i + 1) for i in range(k - 1)])


def test_rcl_threshold_halfway():
    g = {0: 1, 1: 3, 2: 5}
    rcl = make_rcl(0.5, [0, 1, 2], g)
    assert (rcl.g_min, rcl.g_max, rcl.tau) == (1, 5, 3.0)
    assert rcl.rcl == (1, 2)


def test_rcl_extremes():
    g = {0: 1, 1: 3, 2: 5}
    assert make_rcl(1.0, [0, 1, 2], g).rcl == (2,)
    assert make_rcl(0.0, [0, 1, 2], g).rcl == (0, 1, 2)


def test_rcl_never_empty():
    rng = np.random.default_rng(0)
    for _ in range(200):
        vals = rng.integers(0, 10, 6)
        assert make_rcl(float(rng.random()), range(6), vals).rcl


def test_rcl_rejects_bad_input():
    with pytest.raises(ValueError):
        make_rcl(0.5, [], {})
    with pytest.raises(ValueError):
        make_rcl(1.5, [0], {0: 1})


def test_get_color_no_colored_neighbours_takes_lowest():
    g = path(3)
    assert get_color(g, 1, np.array([-1, -1, -1]), palette=2) == 0


def test_get_color_skips_blocked_colors():
    g = path(3)
    assert get_color(g, 1, np.array([0, -1, 2]), palette=3) == 1


def test_get_color_fresh_when_palette_exhausted():
    g = path(3)
    assert get_color(g, 1, np.array([0, -1, 1]), palette=2) == 2


def test_get_color_empty_palette():
    g = path(2)
    assert get_color(g, 0, np.array([-1, -1]), palette=0) == 0


def test_edgeless_graph_one_color():
    g = ConflictGraph.from_adjacency(np.zeros((6, 6), bool))
    assert grasp(g, GraspParams(max_iterations=5)).num_colors == 1


@pytest.mark.parametrize("k", [1, 2, 5, 8])
def test_complete_graph_needs_k(k):
    assert grasp(complete(k), GraspParams(max_iterations=5)).num_colors == k


def test_local_search_merges_path_colors():
    out = local_search(path(3), Coloring(np.array([0, 1, 2])))
    assert out.num_colors == 2
    assert is_proper(path(3), out)


def test_local_search_cannot_shrink_triangle():
    assert local_search(complete(3), Coloring(np.array([0, 1, 2]))).num_colors == 3


@pytest.mark.parametrize("k", [4, 6, 8])
def test_local_search_on_even_cycle_keeps_proper(k):
    g = cycle(k)
    start = Coloring(np.arange(k))
    out = local_search(g, start)
    assert is_proper(g, out) and out.num_colors < k


def test_local_search_rejects_improper_input():
    with pytest.raises(AssertionError):
        local_search(path(2), Coloring(np.array([0, 0])))


def test_canonical_order_breaks_ties_by_index():
    g = ConflictGraph.from_edges(4, [(1, 2), (2, 3)])
    assert canonical_order(g).tolist() == [2, 1, 3, 0]


def random_graph(seed, V=12, p=0.4):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((V, V)) < p, k=1)
    return ConflictGraph.from_adjacency(upper | upper.T)


@pytest.mark.parametrize("seed", range(10))
def test_single_iteration_matches_manual_pipeline(seed):
    g = random_graph(seed)
    rng = np.random.default_rng([seed, 0])
    beta = rng.random()
    manual = local_search(g, construct_solution(beta, g, rng))
    run = grasp_run(g, GraspParams(max_iterations=1, seed=seed))
    assert run.betas == [beta]
    assert run.best.num_colors == manual.num_colors
    assert run.best == manual.renumbered()


@pytest.mark.parametrize("seed", range(10))
def test_run_trace_invariants(seed):
    g = random_graph(seed, V=20)
    run = grasp_run(g, GraspParams(max_iterations=30, seed=seed))
    assert all(a >= b for a, b in zip(run.best_so_far, run.best_so_far[1:]))
    assert all(i <= c for i, c in zip(run.improved, run.constructed))
    assert run.best.num_colors == min(run.improved) == run.best_so_far[-1]
    assert run.best.num_colors <= g.max_degree + 1
    assert is_proper(g, run.best)
    assert sorted(run.best.palette) == list(range(1, run.best.num_colors + 1))


def test_same_seed_same_coloring():
    g = random_graph(5, V=30)
    assert grasp(g, GraspParams(20, seed=3)) == grasp(g, GraspParams(20, seed=3))


def test_static_greedy_variant():
    g = random_graph(2, V=25)
    col = grasp(g, GraspParams(20, greedy="static"))
    assert is_proper(g, col)
    with pytest.raises(ValueError):
        GraspParams(greedy="other")


def test_fixed_beta():
    run = grasp_run(random_graph(1), GraspParams(5, beta=0.3))
    assert run.betas == [0.3] * 5


def test_usually_optimal_on_small_graphs():
    hits = 0
    for seed in range(50):
        g = random_graph(100 + seed, V=10, p=0.45)
        hits += grasp(g, GraspParams(50, seed=seed)).num_colors == chromatic_number(g).chi
    assert hits >= 45


def test_grasp_on_conflict_graph_runs_fast():
    rng = np.random.default_rng(0)
    n, m, B = 10, 40, 50
    C = CachePlacement(rng.random((n, m, B)) < 0.3)
    d = DemandVector(tuple(int(x) for x in rng.integers(1, m + 1, n)))
    g = build(C, d, SystemConfig.homogeneous(n, m, B, 0))
    grasp(g, GraspParams(2))  # compile
    start = time.perf_counter()
    col = grasp(g, GraspParams(100))
    assert time.perf_counter() - start < 20.0
    assert is_proper(g, col)

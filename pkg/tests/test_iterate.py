import numpy as np
import pytest

from distwcc import metric
from distwcc.engine import EngineConfig
from distwcc.errors import ConfigError
from distwcc.graph import Graph
from distwcc.iterate import (
    CommunityStats,
    GlobalStats,
    IterationConfig,
    MoveDecision,
    VertexMoveContext,
    apply_moves,
    compute_partition_wcc,
    evaluate_move_exact,
    evaluate_move_heuristic,
    gather_community_stats,
    partition_wcc_details,
    run_wcc_iteration,
)
from distwcc.partition import Partitioning
from distwcc.preprocess import count_triangles

import oracles
from helpers import A, B, C, D, E, complete, er_graph

stay, remove, transfer = MoveDecision.stay(), MoveDecision.remove(), MoveDecision.transfer


# -- community statistics ------------------------------------------------------


def test_stats_k3(k3):
    stats, glob = gather_community_stats(count_triangles(k3), Partitioning.single(3))
    assert stats == {0: CommunityStats(3, 3, 0)}
    assert stats[0].density == 1.0
    assert glob.omega == 1.0


def test_stats_bowtie(bowtie):
    p = Partitioning.from_groups([[C, A, B], [D, E]], 5)
    stats, _ = gather_community_stats(count_triangles(bowtie), p, EngineConfig(worker_count=2))
    assert stats[0] == CommunityStats(3, 3, 2)
    assert stats[1] == CommunityStats(2, 1, 2)


def test_stats_singleton(k3):
    stats, _ = gather_community_stats(count_triangles(k3), Partitioning(np.array([7, 3, 3])))
    assert stats[7].r == 1 and stats[7].density == 0.0
    assert stats[3] == CommunityStats(2, 1, 2)


@pytest.mark.parametrize("seed", range(5))
def test_stats_match_edge_scan(seed):
    rng = np.random.default_rng(seed)
    fg = count_triangles(er_graph(60, 0.15, seed))
    labels = rng.integers(0, 6, 60)
    stats, _ = gather_community_stats(fg, Partitioning(labels), EngineConfig(worker_count=3))
    for c, s in stats.items():
        members = set(np.flatnonzero(labels == c).tolist())
        internal = boundary = 0
        for u, v in fg.graph.edges().tolist():
            inside = (u in members) + (v in members)
            internal += inside == 2
            boundary += inside == 1
        assert (s.r, s.internal_edges, s.boundary_edges) == (len(members), internal, boundary)
        assert s.internal_edges <= s.r * (s.r - 1) // 2
    assert sum(s.boundary_edges for s in stats.values()) % 2 == 0


# -- exact evaluator -----------------------------------------------------------


def test_exact_bowtie_stays(bowtie):
    assert evaluate_move_exact(count_triangles(bowtie), Partitioning.single(5), D) == stay


def test_exact_k3_singletons_transfers_to_lowest(k3):
    fg = count_triangles(k3)
    p = Partitioning.singletons(3)
    decision = evaluate_move_exact(fg, p, 0)
    assert decision == transfer(1)
    # the true change in WCC for this move is zero: a pair closes no triangle
    assert metric.global_wcc(fg.graph, apply_moves(p, {0: decision})) == 0.0


def test_exact_isolated_singleton_stays():
    g = Graph.from_adjacency(4, [(0, 1), (1, 2), (0, 2)])
    fg = count_triangles(g)
    assert evaluate_move_exact(fg, Partitioning.singletons(4), 3) == stay


def test_exact_isolated_member_leaves():
    # an isolated vertex only inflates its community's size, so removing it helps
    g = Graph.from_adjacency(4, [(0, 1), (1, 2), (0, 2)])
    fg = count_triangles(g)
    assert evaluate_move_exact(fg, Partitioning.single(4), 3) == remove


def _true_delta(fg, p, x, d):
    n = fg.graph.vertex_count
    return (metric.global_wcc(fg.graph, apply_moves(p, {x: d})) - metric.global_wcc(fg.graph, p)) * n


@pytest.mark.parametrize("seed", range(8))
def test_exact_is_argmax_of_true_deltas(seed):
    rng = np.random.default_rng(seed)
    fg = count_triangles(er_graph(25, 0.3, seed))
    p = Partitioning(rng.integers(0, 4, 25))
    for x in range(25):
        chosen = _true_delta(fg, p, x, evaluate_move_exact(fg, p, x))
        options = [0.0]
        if len(p.members(p.community_of[x])) > 1:
            options.append(_true_delta(fg, p, x, remove))
        own = p.community_of[x]
        for c in set(p.community_of[fg.graph.neighbors(x)].tolist()) - {own}:
            options.append(_true_delta(fg, p, x, transfer(c)))
        assert chosen == pytest.approx(max(options), abs=1e-9)


# -- heuristic evaluator -------------------------------------------------------


def test_heuristic_k3_singletons_transfers(k3):
    fg = count_triangles(k3)
    stats, glob = gather_community_stats(fg, Partitioning.singletons(3))
    x = VertexMoveContext(community=0, degree=2, t_global=1, edges_into={1: 1, 2: 1})
    decision = evaluate_move_heuristic(x, stats, glob)
    assert decision == transfer(1) == evaluate_move_exact(fg, Partitioning.singletons(3), 0)


def test_heuristic_moves_to_only_neighbour_community():
    # K4 on {0,1,2,3} with 0 parked in its own community; all of 0's edges go to community 9
    fg = count_triangles(complete(4))
    p = Partitioning(np.array([5, 9, 9, 9]))
    stats, glob = gather_community_stats(fg, p)
    x = VertexMoveContext(community=5, degree=3, t_global=3, edges_into={9: 3})
    assert evaluate_move_heuristic(x, stats, glob) == transfer(9)
    assert evaluate_move_exact(fg, p, 0) == transfer(9)


def test_heuristic_triangle_free_singleton_stays():
    stats = {0: CommunityStats(1, 0, 2), 1: CommunityStats(1, 0, 1), 2: CommunityStats(1, 0, 1)}
    x = VertexMoveContext(community=0, degree=2, t_global=0, edges_into={1: 1, 2: 1})
    assert evaluate_move_heuristic(x, stats, GlobalStats(0.0)) == stay


def test_heuristic_requires_stats():
    x = VertexMoveContext(community=0, degree=1, t_global=0, edges_into={4: 1})
    with pytest.raises(KeyError):
        evaluate_move_heuristic(x, {0: CommunityStats(1, 0, 1)}, GlobalStats(0.0))


# -- applying moves ------------------------------------------------------------


def test_apply_all_stay():
    p = Partitioning(np.array([3, 3, 1]))
    assert apply_moves(p, {v: stay for v in range(3)}) == p


def test_apply_k3_merge(k3):
    p = Partitioning.singletons(3)
    out = apply_moves(p, {0: transfer(1), 1: stay, 2: transfer(1)}, graph=k3)
    assert len(out.communities) == 1


def test_apply_swap_uses_old_snapshot(k3):
    p = Partitioning(np.array([0, 1, 1]))
    out = apply_moves(p, {0: transfer(1), 1: transfer(0)}, graph=k3)
    assert out.community_of.tolist() == [1, 0, 1]


def test_apply_rejects_non_neighbour_target(path3):
    p = Partitioning.singletons(3)
    with pytest.raises(ValueError, match="not a neighbour community"):
        apply_moves(p, {0: transfer(2)}, graph=path3)


def test_remove_takes_own_id_when_free():
    p = Partitioning(np.array([1, 1, 1]))
    assert apply_moves(p, {0: remove}).community_of.tolist() == [0, 1, 1]


def test_remove_by_founder_gets_fresh_id():
    # vertex 1 founded community 1 but others stay in it
    p = Partitioning(np.array([1, 1, 1]))
    out = apply_moves(p, {1: remove})
    assert out.community_of[1] not in (out.community_of[0], out.community_of[2])
    assert out.community_of[0] == out.community_of[2] == 1


@pytest.mark.parametrize("seed", range(5))
def test_apply_preserves_totality(seed):
    rng = np.random.default_rng(seed)
    g = er_graph(40, 0.2, seed)
    p = Partitioning(rng.integers(0, 40, 40))
    decisions = {}
    for v in range(40):
        r = rng.random()
        nbrs = g.neighbors(v)
        if r < 0.3:
            decisions[v] = remove
        elif r < 0.6 and len(nbrs):
            decisions[v] = transfer(p.community_of[rng.choice(nbrs)])
    out = apply_moves(p, decisions, graph=g)
    assert len(out) == 40
    assert sum(len(m) for m in out.communities.values()) == 40
    for v, d in decisions.items():
        if d.kind == "transfer":
            assert out.community_of[v] == d.target
        else:
            assert len(out.members(out.community_of[v])) == 1


# -- distributed WCC -----------------------------------------------------------


def test_partition_wcc_examples(k3, bowtie):
    assert compute_partition_wcc(count_triangles(k3), Partitioning.single(3)) == 1.0
    p = Partitioning.from_groups([[C, A, B], [D, E]], 5)
    fg = count_triangles(bowtie)
    assert compute_partition_wcc(fg, p) == pytest.approx(0.5, abs=1e-12)
    assert compute_partition_wcc(fg, Partitioning.singletons(5)) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_partition_wcc_against_oracles(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 60))
    g = er_graph(n, float(rng.uniform(0.05, 0.3)), seed)
    fg = count_triangles(g)
    labels = rng.integers(0, int(rng.integers(1, 8)), n)
    p = Partitioning(labels)
    got = compute_partition_wcc(fg, p, EngineConfig(worker_count=1 + seed % 4))
    assert got == pytest.approx(metric.global_wcc(fg.graph, p), rel=1e-12, abs=1e-15)
    assert got == pytest.approx(oracles.wcc(g, labels.tolist()), rel=1e-12, abs=1e-15)


def test_partition_wcc_intra_counts():
    g = er_graph(40, 0.25, 3)
    fg = count_triangles(g)
    labels = np.random.default_rng(0).integers(0, 3, 40)
    p = Partitioning(labels)
    d = partition_wcc_details(fg, p, EngineConfig(worker_count=2))
    members = [set(np.flatnonzero(labels == labels[x]).tolist()) for x in range(40)]
    assert d.t_in.tolist() == [metric.t(fg.graph, x, members[x]) for x in range(40)]
    assert d.vt_in.tolist() == [metric.vt(fg.graph, x, members[x]) for x in range(40)]


def test_partition_wcc_worker_invariance():
    fg = count_triangles(er_graph(150, 0.06, 2))
    p = Partitioning(np.random.default_rng(1).integers(0, 10, 150))
    values = {compute_partition_wcc(fg, p, EngineConfig(worker_count=w)) for w in (1, 2, 4, 8)}
    assert len(values) == 1


# -- the loop ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        IterationConfig(evaluator="greedy")
    with pytest.raises(ConfigError):
        IterationConfig(epsilon=0)
    with pytest.raises(ConfigError):
        IterationConfig(patience=0)


def test_optimal_start_halts_after_patience(k3):
    trace = run_wcc_iteration(count_triangles(k3), Partitioning.single(3), IterationConfig(patience=3))
    assert trace.best_wcc == 1.0
    assert trace.iterations == 3
    assert trace.status == "converged"


@pytest.mark.parametrize("evaluator", ["exact", "heuristic"])
def test_k3_from_singletons(k3, evaluator):
    trace = run_wcc_iteration(
        count_triangles(k3), Partitioning.singletons(3), IterationConfig(evaluator=evaluator)
    )
    assert trace.best_wcc == 1.0
    assert len(trace.best_partitioning.communities) == 1


def test_triangle_free_stays_zero(path3):
    trace = run_wcc_iteration(count_triangles(path3), Partitioning.singletons(3))
    assert [r.wcc for r in trace.rows] == [0.0] * 4
    assert trace.status == "converged"


def test_max_iterations_status():
    fg = count_triangles(er_graph(40, 0.3, 1))
    trace = run_wcc_iteration(fg, Partitioning.singletons(40), IterationConfig(max_iterations=1))
    assert trace.status == "max_iterations"
    assert trace.iterations == 1
    assert trace.best_partitioning is not None


@pytest.mark.parametrize("evaluator", ["exact", "heuristic"])
@pytest.mark.parametrize("seed", range(4))
def test_trace_properties(evaluator, seed):
    fg = count_triangles(er_graph(60, 0.15, seed))
    trace = run_wcc_iteration(fg, Partitioning.singletons(60), IterationConfig(evaluator=evaluator))
    best = [r.best_wcc for r in trace.rows]
    assert best == list(np.maximum.accumulate([r.wcc for r in trace.rows]))
    assert trace.best_wcc == pytest.approx(
        metric.global_wcc(fg.graph, trace.best_partitioning), rel=1e-12
    )
    lines = trace.to_csv().splitlines()
    assert lines[0] == "iteration,wcc,best_wcc,moves,wall_ms"
    assert len(lines) == len(trace.rows) + 1


@pytest.mark.parametrize("seed", range(4))
def test_single_mover_never_decreases(seed):
    fg = count_triangles(er_graph(30, 0.25, seed))
    config = IterationConfig(single_mover=True, patience=5, max_iterations=60)
    trace = run_wcc_iteration(fg, Partitioning.singletons(30), config)
    values = [r.wcc for r in trace.rows]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    assert all(r.moves <= 1 for r in trace.rows)


@pytest.mark.parametrize("evaluator", ["exact", "heuristic"])
def test_loop_worker_count_invariance(evaluator):
    fg = count_triangles(er_graph(120, 0.08, 5))
    config = IterationConfig(evaluator=evaluator)
    traces = [
        run_wcc_iteration(fg, Partitioning.singletons(120), config, EngineConfig(worker_count=w))
        for w in (1, 2, 4, 8)
    ]
    for t in traces[1:]:
        assert t.best_partitioning == traces[0].best_partitioning
        assert [r.wcc for r in t.rows] == [r.wcc for r in traces[0].rows]
        assert [r.moves for r in t.rows] == [r.moves for r in traces[0].rows]

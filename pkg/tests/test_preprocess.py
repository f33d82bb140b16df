import numpy as np
import pytest

from distwcc import metric
from distwcc.engine import EngineConfig
from distwcc.errors import ConfigError
from distwcc.graph import Graph
from distwcc.partition import Partitioning
from distwcc.preprocess import (
    FilteredGraph,
    PreprocessConfig,
    PreprocessPlan,
    count_triangles,
    higher_degree_neighbors,
    phase_slices,
)

import oracles
from helpers import C, er_graph


def _same(a: FilteredGraph, b: FilteredGraph) -> bool:
    return (
        np.array_equal(a.graph.indptr, b.graph.indptr)
        and np.array_equal(a.graph.indices, b.graph.indices)
        and np.array_equal(a.t, b.t)
        and np.array_equal(a.vt, b.vt)
        and np.array_equal(a.cc, b.cc)
        and np.array_equal(a.edge_triangles, b.edge_triangles)
    )


def test_higher_degree_neighbors(star4, k3):
    assert higher_degree_neighbors(star4, 1).tolist() == [0]
    assert higher_degree_neighbors(star4, 0).tolist() == []
    assert higher_degree_neighbors(k3, 0).tolist() == [1, 2]


@pytest.mark.parametrize(
    "vs, payload, workers, mem, expected",
    [
        (8, 1_000_000, 4, 1_000_000, 2),
        (8, 0, 4, 1_000_000, 1),
        (8, 500_000, 8, 1_000_000, 1),
    ],
)
def test_plan_formula(vs, payload, workers, mem, expected):
    plan = PreprocessPlan.from_payload(payload, vs, workers, mem)
    assert plan.n_phases == expected


def test_plan_rejects_bad_config():
    with pytest.raises(ConfigError):
        PreprocessPlan.from_payload(10, 0, 1, 1)
    with pytest.raises(ConfigError):
        PreprocessConfig(avail_worker_memory=0)
    with pytest.raises(ConfigError):
        PreprocessConfig(force_phases=0)


def test_phase_slices_are_contiguous_and_near_equal():
    hdn = np.arange(7)
    parts = phase_slices(hdn, 3)
    assert [p.tolist() for p in parts] == [[0, 1, 2], [3, 4], [5, 6]]


def test_k3(k3):
    fg = count_triangles(k3)
    assert fg.t.tolist() == [1, 1, 1]
    assert fg.edge_triangles.tolist() == [1] * 6
    assert fg.graph.edge_count == 3
    assert fg.cc.tolist() == [1.0, 1.0, 1.0]


def test_path(path3):
    fg = count_triangles(path3)
    assert fg.graph.edge_count == 0
    assert fg.t.tolist() == [0, 0, 0]
    assert fg.edge_triangles.tolist() == [0] * 4


def test_bowtie(bowtie):
    fg = count_triangles(bowtie, EngineConfig(worker_count=3))
    assert fg.t[C] == 2 and fg.t[1:].tolist() == [1, 1, 1, 1]
    assert fg.vt.tolist() == [4, 2, 2, 2, 2]
    assert fg.graph.edge_count == 6
    assert fg.cc[C] == pytest.approx(1 / 3)


@pytest.mark.parametrize("seed", range(10))
def test_against_brute_force(seed):
    g = er_graph(120, 0.06, seed)
    fg = count_triangles(g, EngineConfig(worker_count=1 + seed % 4))
    t, vt = oracles.vertex_triangles(g)
    assert fg.t.tolist() == t
    assert fg.vt.tolist() == vt
    assert fg.t.sum() == 3 * len(oracles.triangles(g))
    counts = oracles.edge_triangles(g)
    for v in range(g.vertex_count):
        for p in range(g.indptr[v], g.indptr[v + 1]):
            u = int(g.indices[p])
            assert fg.edge_triangles[p] == counts[(min(u, v), max(u, v))]


@pytest.mark.parametrize("seed", range(5))
def test_filtered_graph_invariants(seed):
    g = er_graph(60, 0.12, seed)
    fg = count_triangles(g)
    h = fg.graph
    assert h.vertex_count == g.vertex_count
    assert np.array_equal(fg.vt, h.degrees())
    # every surviving edge still closes a triangle; counts unchanged by the filter
    survivors = oracles.edge_triangles(h)
    original = oracles.edge_triangles(g)
    for e, count in survivors.items():
        assert count >= 1 and count == original[e]
    for x in range(h.vertex_count):
        assert fg.t[x] <= fg.vt[x] * (fg.vt[x] - 1) // 2
        assert (fg.t[x] == 0) == (fg.vt[x] == 0)


@pytest.mark.parametrize("seed", range(4))
def test_forced_phases_do_not_change_result(seed):
    g = er_graph(80, 0.1, seed)
    runs = [count_triangles(g, config=PreprocessConfig(force_phases=k)) for k in (1, 2, 5)]
    assert all(_same(runs[0], r) for r in runs[1:])
    assert [r.plan.n_phases for r in runs] == [1, 2, 5]
    assert [len(r.phase_report) for r in runs] == [1, 2, 5]
    # the adjacency traffic is split, not duplicated
    totals = {sum(row["payload_elements"] for row in r.phase_report) for r in runs}
    assert totals == {runs[0].plan.total_payload}


def test_memory_limit_drives_phase_count():
    g = er_graph(80, 0.1, 0)
    base = count_triangles(g)
    small = count_triangles(g, config=PreprocessConfig(avail_worker_memory=1024))
    expected = -(-8 * base.plan.total_payload // 1024)
    assert small.plan.n_phases == expected > 1
    assert _same(base, small)


@pytest.mark.parametrize("workers", [2, 4, 8])
def test_worker_count_invariance(workers):
    g = er_graph(100, 0.08, 9)
    assert _same(count_triangles(g), count_triangles(g, EngineConfig(worker_count=workers)))


def test_byte_accounting_report():
    g = er_graph(40, 0.2, 1)
    fg = count_triangles(g, EngineConfig(byte_accounting=True), PreprocessConfig(force_phases=2))
    for row in fg.phase_report:
        assert row["estimated_bytes"] == 8 * row["payload_elements"]
        # two vertex ids plus two int64 adjacency slots per message, then the payload
        assert row["serialized_bytes"] == 8 * (4 * row["messages"] + row["payload_elements"])


@pytest.mark.parametrize("seed", range(5))
def test_filter_neutrality(seed):
    rng = np.random.default_rng(seed)
    g = er_graph(40, 0.15, seed)
    fg = count_triangles(g)
    for _ in range(5):
        p = Partitioning(rng.integers(0, 5, 40))
        assert metric.global_wcc(fg.graph, p) == pytest.approx(metric.global_wcc(g, p), abs=1e-12)


def test_from_graph_matches_engine():
    g = er_graph(50, 0.2, 5)
    fg = count_triangles(g)
    central = FilteredGraph.from_graph(fg.graph)
    assert np.array_equal(central.t, fg.t)
    assert np.array_equal(central.cc, fg.cc)
    assert fg.omega == pytest.approx(fg.cc.mean())


def test_isolated_vertices_stay_in_vertex_set():
    g = Graph.from_adjacency(5, [(0, 1), (1, 2), (0, 2), (3, 4)])
    fg = count_triangles(g)
    assert fg.graph.vertex_count == 5
    assert fg.graph.edge_count == 3

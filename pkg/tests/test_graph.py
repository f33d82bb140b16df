import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distwcc.errors import ParseError
from distwcc.graph import Graph, load_edge_list

import oracles
from helpers import er_graph


def test_k3_loads():
    g = load_edge_list(b"0 1\n1 2\n2 0")
    assert (g.vertex_count, g.edge_count) == (3, 3)


def test_duplicates_and_self_loops_dropped():
    g = load_edge_list(b"5 7\n7 5\n5 5")
    assert (g.vertex_count, g.edge_count) == (2, 1)
    assert g.original_ids.tolist() == [5, 7]
    assert g.report.duplicates_dropped == 1
    assert g.report.self_loops_dropped == 1


def test_comments_and_blank_lines_skipped():
    g = load_edge_list(b"# comment\n\n0 1\n")
    assert (g.vertex_count, g.edge_count) == (2, 1)


def test_accepts_text_stream_and_path(tmp_path):
    assert load_edge_list(io.StringIO("0 1\n")).edge_count == 1
    path = tmp_path / "g.txt"
    path.write_text("3 4\n4 5\n")
    assert load_edge_list(path).edge_count == 2


@pytest.mark.parametrize(
    "text, line",
    [(b"0 1\n1 x\n", 2), (b"0 1 2\n", 1), (b"0\n", 1), (b"# c\n0 -1\n", 2)],
)
def test_malformed_line_is_named(text, line):
    with pytest.raises(ParseError) as exc:
        load_edge_list(text)
    assert exc.value.line == line
    assert str(exc.value).startswith(f"line {line}:")


@pytest.mark.parametrize("text", [b"", b"# only comments\n", b"3 3\n"])
def test_no_edges(text):
    with pytest.raises(ParseError, match="no edges"):
        load_edge_list(text)


def test_non_ascii_rejected():
    with pytest.raises(ParseError):
        load_edge_list("0 1\n1 é\n".encode("utf-8"))


def test_degree(k3, star4):
    assert [k3.degree(v) for v in range(3)] == [2, 2, 2]
    assert star4.degree(0) == 4
    assert star4.degree(1) == 1
    with pytest.raises(IndexError):
        star4.degree(5)


def test_common_neighbors(k3, path3):
    assert k3.common_neighbors(0, 1).tolist() == [2]
    assert path3.common_neighbors(0, 2).tolist() == [1]
    assert path3.common_neighbors(0, 1).tolist() == []
    with pytest.raises(ValueError):
        k3.common_neighbors(1, 1)


def test_csr_invariants():
    g = er_graph(50, 0.2, 3)
    assert g.degrees().sum() == 2 * g.edge_count
    for v in range(g.vertex_count):
        row = g.neighbors(v)
        assert np.all(np.diff(row) > 0)
        assert v not in row
        for u in row.tolist():
            assert g.has_edge(u, v)


def test_graph_is_read_only(k3):
    with pytest.raises(ValueError):
        k3.indices[0] = 1


@pytest.mark.parametrize("seed", range(5))
def test_common_neighbors_count_edge_triangles(seed):
    g = er_graph(60, 0.15, seed)
    expected = oracles.edge_triangles(g)
    for (u, v), count in expected.items():
        assert len(g.common_neighbors(u, v)) == count


def test_subgraph_keeps_vertex_set(bowtie):
    keep = np.ones(len(bowtie.indices), dtype=bool)
    # drop edge (0, 1) on both sides
    for a, b in ((0, 1), (1, 0)):
        row = bowtie.neighbors(a)
        keep[bowtie.indptr[a] + np.searchsorted(row, b)] = False
    sub = bowtie.subgraph_edges(keep)
    assert sub.vertex_count == 5 and sub.edge_count == 5
    assert not sub.has_edge(0, 1)


edge_lists = st.lists(
    st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=60
).filter(lambda es: any(u != v for u, v in es))


def _text(pairs) -> bytes:
    return "".join(f"{u} {v}\n" for u, v in pairs).encode()


def _same(g: Graph, h: Graph) -> bool:
    return (
        np.array_equal(g.indptr, h.indptr)
        and np.array_equal(g.indices, h.indices)
        and np.array_equal(g.original_ids, h.original_ids)
    )


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_idempotent_under_duplication_and_flip(pairs):
    doubled = pairs + [(v, u) for u, v in pairs]
    assert _same(load_edge_list(_text(pairs)), load_edge_list(_text(doubled)))


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_round_trip(pairs):
    g = load_edge_list(_text(pairs))
    out = io.StringIO()
    g.write_edge_list(out)
    assert _same(g, load_edge_list(out.getvalue().encode()))

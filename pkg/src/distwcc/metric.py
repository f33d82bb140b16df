"""Exact, single-threaded WCC.

This is the trusted reference the distributed phases are checked against, so
it deliberately shares no code with them: plain set arithmetic over the
adjacency, nothing clever.

Reading of the outside-partner term: the partners of ``x`` outside ``S`` are
the vertices not in ``S`` that close at least one triangle with ``x`` anywhere
in the graph.
"""

from __future__ import annotations

from itertools import combinations

from .graph import Graph
from .partition import Partitioning


def _as_set(S):
    if S is None or isinstance(S, (set, frozenset)):
        return S
    return set(int(v) for v in S)


def _inside(g: Graph, x: int, S) -> list[int]:
    nbrs = g.neighbors(x).tolist()
    return nbrs if S is None else [u for u in nbrs if u in S]


def t(g: Graph, x: int, S=None) -> int:
    """Triangles ``x`` closes with two other members of ``S`` (``None`` means all of V)."""
    inside = _inside(g, x, _as_set(S))
    return sum(1 for u, w in combinations(inside, 2) if g.has_edge(u, w))


def vt(g: Graph, x: int, S=None) -> int:
    """Members of ``S`` that share at least one triangle with ``x`` inside ``S``."""
    inside = set(_inside(g, x, _as_set(S)))
    return sum(1 for u in inside if any(int(w) in inside for w in g.neighbors(u)))


def triangle_partners(g: Graph, x: int) -> set[int]:
    """Vertices that close at least one triangle with ``x`` in the whole graph."""
    nbrs = {int(u) for u in g.neighbors(x)}
    return {u for u in nbrs if any(int(w) in nbrs for w in g.neighbors(u))}


def vertex_wcc(g: Graph, x: int, S) -> float:
    S = _as_set(S)
    if x not in S:
        raise ValueError(f"vertex {x} is not a member of S")
    t_all = t(g, x)
    if t_all == 0:
        return 0.0
    partners = triangle_partners(g, x)
    outside = len(partners - S)
    return (t(g, x, S) / t_all) * (len(partners) / (len(S) - 1 + outside))


def vertex_wcc_all(g: Graph, p: Partitioning) -> list[float]:
    if len(p) != g.vertex_count:
        raise ValueError("partitioning does not cover the graph")
    sets = {c: set(m.tolist()) for c, m in p.communities.items()}
    return [vertex_wcc(g, x, sets[int(p.community_of[x])]) for x in range(g.vertex_count)]


def global_wcc(g: Graph, p: Partitioning) -> float:
    """Mean of per-vertex WCC over every vertex of ``g``."""
    if g.vertex_count == 0:
        return 0.0
    return sum(vertex_wcc_all(g, p)) / g.vertex_count


def local_clustering_coefficient(g: Graph, x: int) -> float:
    d = g.degree(x)
    if d < 2:
        return 0.0
    return t(g, x) / (d * (d - 1) / 2)

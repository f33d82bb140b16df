"""Initial center/border communities ranked by clustering coefficient.

Vertices are totally ordered by ``(cc, degree, id)``. A vertex joins the
highest-ranked neighbour that is currently a center and out-ranks it, or else
is a center itself. Each vertex's choice depends only on vertices ranked
above it, so changes flow strictly downward and the cascade settles after at
most one round per rank level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels as K
from .engine import SUM, Engine, EngineConfig, Messages, WorkerProgram
from .partition import Partitioning
from .preprocess import FilteredGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class VertexRank:
    cc: float
    degree: int
    id: int


def compare_rank(a: VertexRank, b: VertexRank) -> int:
    """1 if ``a`` ranks higher, -1 if lower, 0 if identical."""
    return (a > b) - (a < b)


def rank_of(fg: FilteredGraph, v: int) -> VertexRank:
    return VertexRank(float(fg.cc[v]), int(fg.graph.degree(v)), int(v))


@njit(cache=True, nogil=True)
def _outranks(cc_a, deg_a, a, cc_b, deg_b, b):
    if cc_a != cc_b:
        return cc_a > cc_b
    if deg_a != deg_b:
        return deg_a > deg_b
    return a > b


@njit(cache=True, nogil=True)
def _decide(vertices, indptr, indices, cc, deg, nbr_cc, nbr_deg, nbr_comm, community):
    """Re-pick communities; returns the vertices whose choice changed."""
    changed = np.empty(len(vertices), np.int64)
    k = 0
    for v in vertices:
        best, best_cc, best_deg = v, cc[v], deg[v]
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if nbr_comm[p] == u and _outranks(nbr_cc[p], nbr_deg[p], u, best_cc, best_deg, best):
                best, best_cc, best_deg = u, nbr_cc[p], nbr_deg[p]
        if best != community[v]:
            community[v] = best
            changed[k] = v
            k += 1
    return changed[:k]


@njit(cache=True, nogil=True)
def _lower_neighbors(vertices, indptr, indices, cc, deg, nbr_cc, nbr_deg):
    """``(dst, src, pos)`` for every neighbour ranked below its sender."""
    total = 0
    for v in vertices:
        for p in range(indptr[v], indptr[v + 1]):
            if _outranks(cc[v], deg[v], v, nbr_cc[p], nbr_deg[p], indices[p]):
                total += 1
    dst = np.empty(total, np.int64)
    src = np.empty(total, np.int64)
    pos = np.empty(total, np.int64)
    k = 0
    for v in vertices:
        for p in range(indptr[v], indptr[v + 1]):
            if _outranks(cc[v], deg[v], v, nbr_cc[p], nbr_deg[p], indices[p]):
                dst[k] = indices[p]
                src[k] = v
                pos[k] = p
                k += 1
    return dst, src, pos


class CommunityInitProgram(WorkerProgram):
    aggregators = {"changes": SUM}

    def __init__(self, fg: FilteredGraph, start: np.ndarray | None = None):
        g = fg.graph
        n, nnz = g.vertex_count, len(g.indices)
        self.graph = g
        self.cc = np.asarray(fg.cc, dtype=np.float64)
        self.deg = g.degrees().astype(np.int64)
        if start is None:
            self.community = np.arange(n, dtype=np.int64)
        else:
            self.community = np.array(start, dtype=np.int64)
        self.nbr_cc = np.zeros(nnz, dtype=np.float64)
        self.nbr_deg = np.zeros(nnz, dtype=np.int64)
        self.nbr_comm = np.full(nnz, -1, dtype=np.int64)
        self.changes = 0

    def compute(self, ctx):
        g = self.graph
        if ctx.superstep == 0:
            V = ctx.vertices
            dst, src, pos = K.fan_out(V, g.indptr, g.indices, np.ones(len(g.indices), dtype=bool))
            cols = {
                "cc": self.cc[src],
                "deg": self.deg[src],
                "comm": self.community[src],
                "at": g.reverse_positions[pos],
            }
            ctx.send("announce", Messages(dst, src, cols))
            return
        announce = ctx.inbox("announce")
        if len(announce):
            at = announce.columns["at"]
            self.nbr_cc[at] = announce.columns["cc"]
            self.nbr_deg[at] = announce.columns["deg"]
            self.nbr_comm[at] = announce.columns["comm"]
        notes = ctx.inbox("community")
        if len(notes):
            self.nbr_comm[notes.columns["at"]] = notes.columns["comm"]
        changed = _decide(
            ctx.active, g.indptr, g.indices, self.cc, self.deg,
            self.nbr_cc, self.nbr_deg, self.nbr_comm, self.community,
        )
        if len(changed):
            ctx.aggregate("changes", len(changed))
            dst, src, pos = _lower_neighbors(
                changed, g.indptr, g.indices, self.cc, self.deg, self.nbr_cc, self.nbr_deg
            )
            cols = {"comm": self.community[src], "at": g.reverse_positions[pos]}
            ctx.send("community", Messages(dst, src, cols))
        ctx.halt()

    def master_compute(self, master):
        self.changes += master.aggregated("changes", 0)


@dataclass
class InitResult:
    partitioning: Partitioning
    supersteps: int
    changes: int


def initialize_communities(
    fg: FilteredGraph,
    engine_config: EngineConfig | None = None,
    start: Partitioning | None = None,
) -> InitResult:
    """Run the initialisation protocol until no vertex changes community.

    ``start`` seeds the announced communities instead of every vertex's own
    id; running on a previous output should then report zero changes.
    """
    program = CommunityInitProgram(fg, None if start is None else start.community_of)
    result = Engine(fg.graph, engine_config).run(program)
    p = Partitioning(program.community)
    log.info(
        "init: %d communities after %d supersteps (%d changes)",
        len(p.communities), result.supersteps, program.changes,
    )
    return InitResult(p, result.supersteps, program.changes)


def init_property_violations(fg: FilteredGraph, p: Partitioning) -> list[str]:
    """Check the three center/border properties; returns human-readable failures."""
    g = fg.graph
    ranks = [rank_of(fg, v) for v in range(g.vertex_count)]
    comm = p.community_of
    problems = []
    for c, members in p.communities.items():
        centers = [int(v) for v in members if comm[v] == v]
        if len(centers) != 1 or centers[0] != c:
            problems.append(f"P1: community {c} has centers {centers}")
            continue
        y = centers[0]
        for x in members.tolist():
            if x == y:
                continue
            if not g.has_edge(x, y):
                problems.append(f"P1: border {x} not adjacent to center {y}")
            if ranks[x] > ranks[y]:
                problems.append(f"P2: member {x} out-ranks center {y}")
            for z in g.neighbors(x).tolist():
                if comm[z] == z and z != y and ranks[z] > ranks[y]:
                    problems.append(f"P3: border {x} has center neighbour {z} above {y}")
    return problems

"""Distributed triangle counting and triangle-free edge removal.

Protocol, one superstep per line:

0. every vertex sends its degree to all neighbours;
1. each vertex works out ``hdn(v)``, the neighbours ranked above it by
   ``(degree, id)``, and contributes ``|adj(v)| * |hdn(v)|`` to the
   ``payload`` aggregator; the master turns the total into a subphase plan;
2. ``2 .. 1+P``: in phase ``p`` each vertex sends its adjacency to slice
   ``p`` of ``hdn(v)``; a receiver intersects it with its own adjacency,
   records the per-edge count and replies with it;
3. ``3 + P``: every vertex has a count for every incident edge. Each triangle
   at ``x`` lies on two of its edges, so ``t(x, V)`` is half the sum.

The same program, given a community assignment, restricts adjacency payloads
and recipients to same-community neighbours and yields ``t(x, C_x)``; see
:func:`distwcc.iterate.compute_partition_wcc`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .engine import (
    EXACT_SUM,
    SUM,
    Engine,
    EngineConfig,
    MasterContext,
    Messages,
    Ragged,
    WorkerProgram,
    exact_total,
)
from .errors import ConfigError, EngineError
from .graph import Graph

log = logging.getLogger(__name__)

DEFAULT_AVAIL_WORKER_MEMORY = 64 * 1024 * 1024


@dataclass(frozen=True)
class PreprocessPlan:
    n_phases: int
    vertex_size_bytes: int
    avail_worker_memory: int
    total_payload: int
    worker_count: int
    forced: bool = False

    @classmethod
    def from_payload(
        cls,
        total_payload: int,
        vertex_size_bytes: int = 8,
        worker_count: int = 1,
        avail_worker_memory: int = DEFAULT_AVAIL_WORKER_MEMORY,
        force_phases: int | None = None,
    ) -> PreprocessPlan:
        for name, value in (
            ("vertex_size_bytes", vertex_size_bytes),
            ("worker_count", worker_count),
            ("avail_worker_memory", avail_worker_memory),
        ):
            if value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        if total_payload < 0:
            raise ConfigError("total_payload must be non-negative")
        if force_phases is not None:
            if force_phases <= 0:
                raise ConfigError(f"force_phases must be positive, got {force_phases}")
            n = int(force_phases)
        else:
            numer = vertex_size_bytes * total_payload
            denom = worker_count * avail_worker_memory
            n = max(1, -(-numer // denom))
        return cls(
            n_phases=n,
            vertex_size_bytes=vertex_size_bytes,
            avail_worker_memory=avail_worker_memory,
            total_payload=int(total_payload),
            worker_count=worker_count,
            forced=force_phases is not None,
        )


@dataclass(frozen=True)
class PreprocessConfig:
    avail_worker_memory: int = DEFAULT_AVAIL_WORKER_MEMORY
    force_phases: int | None = None

    def __post_init__(self):
        if self.avail_worker_memory <= 0:
            raise ConfigError("avail_worker_memory must be positive")
        if self.force_phases is not None and self.force_phases <= 0:
            raise ConfigError("force_phases must be positive")


@dataclass(frozen=True)
class VertexTriangleStats:
    t_global: int
    vt_global: int


@dataclass(eq=False)
class FilteredGraph:
    """The graph after preprocessing, with per-vertex triangle statistics.

    ``t`` and ``vt`` hold ``t(x, V)`` and ``vt(x, V)``; ``cc`` the local
    clustering coefficient on the filtered graph. ``edge_triangles`` is
    aligned with the *input* graph's adjacency and kept for verification.
    """

    graph: Graph
    t: np.ndarray
    vt: np.ndarray
    cc: np.ndarray
    source: Graph | None = None
    edge_triangles: np.ndarray | None = None
    plan: PreprocessPlan | None = None
    phase_report: list[dict] = field(default_factory=list)
    supersteps: int = 0

    def stats(self, x: int) -> VertexTriangleStats:
        return VertexTriangleStats(int(self.t[x]), int(self.vt[x]))

    @property
    def omega(self) -> float:
        """Graph clustering coefficient: mean local coefficient over all vertices."""
        n = self.graph.vertex_count
        return math.fsum(self.cc.tolist()) / n if n else 0.0

    @classmethod
    def from_graph(cls, graph: Graph, cc=None) -> FilteredGraph:
        """Wrap a graph whose edges are already all triangle-supported.

        Triangle statistics are computed centrally; ``cc`` overrides the
        clustering coefficients (useful for exercising initialisation on
        hand-built rank orders).
        """
        n = graph.vertex_count
        t = np.zeros(n, dtype=np.int64)
        adj = graph.adjacency_sets()
        for x in range(n):
            nb = sorted(adj[x])
            t[x] = sum(len(adj[u] & adj[x]) for u in nb) // 2
        vt = graph.degrees().astype(np.int64)
        if cc is None:
            cc = clustering_coefficients(t, vt)
        return cls(graph, t, vt, np.asarray(cc, dtype=np.float64))


def clustering_coefficients(t: np.ndarray, deg: np.ndarray) -> np.ndarray:
    pairs = deg * (deg - 1) / 2.0
    out = np.zeros(len(t), dtype=np.float64)
    np.divide(t, pairs, out=out, where=deg >= 2)
    return out


def higher_degree_neighbors(g: Graph, v: int) -> np.ndarray:
    """Neighbours ``u`` of ``v`` with ``(degree(u), u) > (degree(v), v)``."""
    deg = g.degrees()
    nbrs = g.neighbors(v)
    dv = deg[v]
    return nbrs[(deg[nbrs] > dv) | ((deg[nbrs] == dv) & (nbrs > v))]


def phase_slices(hdn: np.ndarray, n_phases: int) -> list[np.ndarray]:
    """The contiguous near-equal split of ``hdn`` used across subphases."""
    return np.array_split(np.asarray(hdn), n_phases)


def plan_subphases(
    g: Graph,
    engine_config: EngineConfig | None = None,
    config: PreprocessConfig | None = None,
) -> PreprocessPlan:
    """Compute the plan centrally (the BSP path gets it via an aggregator)."""
    engine_config = engine_config or EngineConfig()
    config = config or PreprocessConfig()
    deg = g.degrees()
    total = 0
    for v in range(g.vertex_count):
        total += int(deg[v]) * len(higher_degree_neighbors(g, v))
    return PreprocessPlan.from_payload(
        total,
        engine_config.vertex_size,
        engine_config.worker_count,
        config.avail_worker_memory,
        config.force_phases,
    )


class TriangleCountProgram(WorkerProgram):
    """Per-edge triangle counting with degree ordering and subphases.

    With ``community`` set, only same-community neighbours take part and the
    final superstep also evaluates each vertex's WCC, summed exactly in the
    ``wcc`` aggregator.
    """

    aggregators = {"payload": SUM, "sizes": SUM, "wcc": EXACT_SUM, "odd": SUM}

    def __init__(
        self,
        graph: Graph,
        engine_config: EngineConfig,
        avail_worker_memory: int = DEFAULT_AVAIL_WORKER_MEMORY,
        force_phases: int | None = None,
        community: np.ndarray | None = None,
        t_all: np.ndarray | None = None,
    ):
        self.graph = graph
        self.engine_config = engine_config
        self.avail_worker_memory = avail_worker_memory
        self.force_phases = force_phases
        n, nnz = graph.vertex_count, len(graph.indices)
        self.deg = graph.degrees().astype(np.int64)
        self.nbr_deg = np.zeros(nnz, dtype=np.int64)
        self.allowed = np.ones(nnz, dtype=bool)
        self.is_hdn = np.zeros(nnz, dtype=bool)
        self.edge_tri = np.zeros(nnz, dtype=np.int64)
        self.t = np.zeros(n, dtype=np.int64)
        self.vt = np.zeros(n, dtype=np.int64)
        self.restricted = community is not None
        if self.restricted:
            self.community = np.asarray(community, dtype=np.int64)
            self.nbr_comm = np.full(nnz, -1, dtype=np.int64)
            self.t_all = np.asarray(t_all, dtype=np.int64)
            self.same = np.zeros(n, dtype=np.int64)
            self.wcc = np.zeros(n, dtype=np.float64)
            self.n_ids = int(self.community.max()) + 1 if n else 0
        self.sizes = None
        self.plan: PreprocessPlan | None = None
        self.final_step: int | None = None
        self.wcc_sum = 0.0
        self._refs: dict[int, tuple] = {}

    # -- vertex side -----------------------------------------------------

    def compute(self, ctx):
        s = ctx.superstep
        V = ctx.vertices
        g = self.graph
        if s == 0:
            dst, src, pos = K.fan_out(V, g.indptr, g.indices, self.allowed)
            cols = {"deg": self.deg[src], "at": g.reverse_positions[pos]}
            if self.restricted:
                cols["comm"] = self.community[src]
                ctx.aggregate("sizes", np.bincount(self.community[V], minlength=self.n_ids))
            ctx.send("degree", Messages(dst, src, cols))
            return
        if s == 1:
            self._rank_neighbors(ctx)
            return
        P = self.plan.n_phases
        if s - 2 < P:
            self._send_phase(ctx, s - 2, P)
        self._answer(ctx)
        counts = ctx.inbox("count")
        if len(counts):
            self._scatter(counts, counts.columns["count"], self.edge_tri)
        if s == self.final_step:
            self._finish(ctx)

    @staticmethod
    def _scatter(inbox, values, out):
        # "at" is the receiver's adjacency slot for the sender
        out[inbox.columns["at"]] = values

    def _rank_neighbors(self, ctx):
        g = self.graph
        V = ctx.vertices
        inbox = ctx.inbox("degree")
        if len(inbox):
            self._scatter(inbox, inbox.columns["deg"], self.nbr_deg)
        if self.restricted:
            if len(inbox):
                self._scatter(inbox, inbox.columns["comm"], self.nbr_comm)
            rows = np.repeat(V, self.deg[V])
            pos = _row_positions(g.indptr, V)
            self.allowed[pos] = self.nbr_comm[pos] == self.community[rows]
        K.mark_higher(V, g.indptr, g.indices, self.deg, self.nbr_deg, self.allowed, self.is_hdn)
        hdn_count = np.zeros(g.vertex_count, dtype=np.int64)
        K.row_count_true(V, g.indptr, self.is_hdn, hdn_count)
        if self.restricted:
            K.row_count_true(V, g.indptr, self.allowed, self.same)
            buf, start, stop = K.gather_rows(V, g.indptr, g.indices, self.allowed)
            payload = self.same[V] * hdn_count[V]
        else:
            buf, start, stop = g.indices, g.indptr[V], g.indptr[V + 1]
            payload = self.deg[V] * hdn_count[V]
        self._refs[ctx.worker] = (buf, start, stop)
        ctx.aggregate("payload", int(payload.sum()))

    def _send_phase(self, ctx, phase, n_phases):
        g = self.graph
        V = ctx.vertices
        dst, src, pos = K.phase_sends(V, g.indptr, g.indices, self.is_hdn, phase, n_phases)
        if not len(dst):
            return
        buf, start, stop = self._refs[ctx.worker]
        idx = (src - ctx.worker) // ctx.worker_count
        cols = {"at": g.reverse_positions[pos], "back": pos}
        ctx.send("adj", Messages(dst, src, cols, payload=Ragged(buf, start[idx], stop[idx])))

    def _answer(self, ctx):
        adj = ctx.inbox("adj")
        if not len(adj):
            return
        g = self.graph
        marker = np.full(g.vertex_count, -1, dtype=np.int64)
        pl = adj.payload
        counts = K.intersect_inbox(
            g.indptr, g.indices, self.allowed, adj.dst, pl.buffer, pl.start, pl.stop, marker
        )
        self._scatter(adj, counts, self.edge_tri)
        ctx.send("count", Messages(adj.src, adj.dst, {"count": counts, "at": adj.columns["back"]}))

    def _finish(self, ctx):
        g = self.graph
        V = ctx.vertices
        sums = np.zeros(g.vertex_count, dtype=np.int64)
        K.row_sums(V, g.indptr, self.edge_tri, sums)
        ctx.aggregate("odd", int((sums[V] & 1).sum()))
        self.t[V] = sums[V] // 2
        K.row_count_positive(V, g.indptr, self.edge_tri, self.vt)
        if self.restricted:
            K.vertex_wcc(
                V, self.t, self.t_all, self.deg, self.same, self.sizes, self.community, self.wcc
            )
            ctx.aggregate("wcc", tuple(K.exact_partials(V, self.wcc).tolist()))
        ctx.halt()

    # -- master side -----------------------------------------------------

    def master_compute(self, master: MasterContext):
        s = master.superstep
        if s == 0 and self.restricted:
            self.sizes = np.asarray(master.aggregated("sizes", np.zeros(self.n_ids, np.int64)))
        elif s == 1:
            cfg = self.engine_config
            self.plan = PreprocessPlan.from_payload(
                master.aggregated("payload", 0),
                cfg.vertex_size,
                cfg.worker_count,
                self.avail_worker_memory,
                self.force_phases,
            )
            self.final_step = 3 + self.plan.n_phases
        elif s == self.final_step:
            if master.aggregated("odd", 0):
                raise EngineError("per-edge triangle sums must be even at every vertex")
            self.wcc_sum = exact_total(master.aggregated("wcc", ()))
            master.halt_computation()


def _row_positions(indptr, vertices):
    """Concatenated adjacency positions of ``vertices``."""
    lens = indptr[vertices + 1] - indptr[vertices]
    if not len(lens) or lens.sum() == 0:
        return np.empty(0, dtype=np.int64)
    starts = np.repeat(indptr[vertices], lens)
    offs = np.arange(lens.sum()) - np.repeat(np.cumsum(lens) - lens, lens)
    return starts + offs


def count_triangles(
    g: Graph,
    engine_config: EngineConfig | None = None,
    config: PreprocessConfig | None = None,
) -> FilteredGraph:
    """Run the preprocessing phase on the BSP engine."""
    engine_config = engine_config or EngineConfig()
    config = config or PreprocessConfig()
    program = TriangleCountProgram(
        g, engine_config, config.avail_worker_memory, config.force_phases
    )
    result = Engine(g, engine_config).run(program)
    if program.plan is None:
        # no vertices at all
        program.plan = PreprocessPlan.from_payload(
            0, engine_config.vertex_size, engine_config.worker_count, config.avail_worker_memory
        )
    keep = program.edge_tri > 0
    filtered = g.subgraph_edges(keep)
    vt = program.vt
    if not np.array_equal(vt, filtered.degrees()):
        raise EngineError("vt(x, V) disagrees with the filtered degree")
    report = []
    for p in range(program.plan.n_phases):
        step = 2 + p
        stats = result.message_stats[step].get("adj", {}) if step < len(result.message_stats) else {}
        elements = stats.get("payload_elements", 0)
        row = {
            "phase": p,
            "messages": stats.get("messages", 0),
            "payload_elements": elements,
            "estimated_bytes": elements * engine_config.vertex_size,
        }
        if "bytes" in stats:
            row["serialized_bytes"] = stats["bytes"]
        report.append(row)
    fg = FilteredGraph(
        graph=filtered,
        t=program.t.copy(),
        vt=vt.copy(),
        cc=clustering_coefficients(program.t, vt),
        source=g,
        edge_triangles=program.edge_tri,
        plan=program.plan,
        phase_report=report,
        supersteps=result.supersteps,
    )
    log.info(
        "preprocess: %d of %d edges kept, %d subphase(s), %d supersteps",
        filtered.edge_count,
        g.edge_count,
        program.plan.n_phases,
        result.supersteps,
    )
    return fg

"""WCC optimisation: simultaneous Transfer / Remove / Stay moves.

One iteration is a handful of BSP programs driven by a master loop:

* :class:`CommunitySyncProgram` - vertices whose community changed tell their
  neighbours, then everyone contributes to per-community size, internal-edge
  and boundary-edge aggregators;
* :class:`HeuristicMoveProgram` - every vertex picks its best move from those
  aggregates alone (or the master runs the exact evaluator instead);
* the master applies all moves against the old snapshot;
* :func:`compute_partition_wcc` - intra-community triangle counting and the
  global WCC.

The best partitioning seen so far is kept and returned when the best WCC stops
improving by more than ``epsilon`` (relative) for ``patience`` iterations.

Moves are ranked by estimated gain. Within a tolerance of 1e-12, a vertex that
closes at least one triangle prefers the move that puts more of its neighbours
in its community; remaining ties go Stay > Remove > Transfer to the lowest
community id.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numba import njit

from . import _kernels as K
from .engine import SUM, Engine, EngineConfig, Messages, WorkerProgram
from .errors import ConfigError
from .partition import Partitioning
from .preprocess import DEFAULT_AVAIL_WORKER_MEMORY, FilteredGraph, TriangleCountProgram

log = logging.getLogger(__name__)

STAY, REMOVE, TRANSFER = 0, 1, 2
TIE_TOL = 1e-12


# -- domain types --------------------------------------------------------------


@dataclass(frozen=True)
class CommunityStats:
    r: int
    internal_edges: int
    boundary_edges: int

    @property
    def density(self) -> float:
        if self.r < 2:
            return 0.0
        return self.internal_edges / (self.r * (self.r - 1) / 2)


@dataclass(frozen=True)
class GlobalStats:
    omega: float


@dataclass(frozen=True)
class MoveDecision:
    kind: Literal["stay", "remove", "transfer"]
    target: int | None = None

    @classmethod
    def stay(cls):
        return cls("stay")

    @classmethod
    def remove(cls):
        return cls("remove")

    @classmethod
    def transfer(cls, community: int):
        return cls("transfer", int(community))


@dataclass
class Decisions:
    """Columnar per-vertex decisions; ``gain`` is the evaluator's estimate."""

    action: np.ndarray
    target: np.ndarray
    gain: np.ndarray

    @classmethod
    def all_stay(cls, n: int) -> Decisions:
        return cls(np.zeros(n, np.int8), np.full(n, -1, np.int64), np.zeros(n, np.float64))

    def __getitem__(self, v: int) -> MoveDecision:
        a = int(self.action[v])
        if a == STAY:
            return MoveDecision.stay()
        if a == REMOVE:
            return MoveDecision.remove()
        return MoveDecision.transfer(int(self.target[v]))

    @classmethod
    def from_mapping(cls, n: int, decisions: dict[int, MoveDecision]) -> Decisions:
        out = cls.all_stay(n)
        for v, d in decisions.items():
            if d.kind == "remove":
                out.action[v] = REMOVE
            elif d.kind == "transfer":
                out.action[v] = TRANSFER
                out.target[v] = d.target
        return out

    def moves(self) -> int:
        return int((self.action != STAY).sum())


@dataclass(frozen=True)
class IterationConfig:
    evaluator: Literal["exact", "heuristic"] = "exact"
    epsilon: float = 1e-3
    patience: int = 3
    max_iterations: int = 100
    single_mover: bool = False  # test mode: apply only the best move per iteration
    avail_worker_memory: int = DEFAULT_AVAIL_WORKER_MEMORY

    def __post_init__(self):
        if self.evaluator not in ("exact", "heuristic"):
            raise ConfigError(f"evaluator must be 'exact' or 'heuristic', got {self.evaluator!r}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.patience < 1 or self.max_iterations < 1:
            raise ConfigError("patience and max_iterations must be positive")


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    wcc: float
    best_wcc: float
    moves: int
    wall_ms: float


@dataclass
class WccTrace:
    rows: list[TraceRow] = field(default_factory=list)
    best_partitioning: Partitioning | None = None
    status: str = "converged"

    @property
    def best_wcc(self) -> float:
        return self.rows[-1].best_wcc if self.rows else 0.0

    @property
    def iterations(self) -> int:
        return len(self.rows) - 1

    def to_csv(self) -> str:
        lines = ["iteration,wcc,best_wcc,moves,wall_ms"]
        for r in self.rows:
            lines.append(f"{r.iteration},{r.wcc!r},{r.best_wcc!r},{r.moves},{r.wall_ms:.3f}")
        return "\n".join(lines) + "\n"


# -- shared per-vertex state across the iteration's programs -------------------


class IterationState:
    """Community ids plus each vertex's cache of its neighbours' communities."""

    def __init__(self, fg: FilteredGraph, community: np.ndarray):
        self.fg = fg
        g = fg.graph
        self.community = np.array(community, dtype=np.int64)
        self.nbr_comm = np.full(len(g.indices), -1, dtype=np.int64)
        self.same = np.zeros(g.vertex_count, dtype=np.int64)
        self.sizes = np.zeros(0, dtype=np.int64)
        self.internal = np.zeros(0, dtype=np.int64)
        self.boundary = np.zeros(0, dtype=np.int64)


class CommunitySyncProgram(WorkerProgram):
    """Superstep 0: announce changed communities. Superstep 1: aggregate stats."""

    aggregators = {"sizes": SUM, "internal2": SUM, "boundary": SUM}

    def __init__(self, st: IterationState, changed: np.ndarray):
        self.st = st
        g = st.fg.graph
        self.notify = np.zeros(g.vertex_count, dtype=bool)
        self.notify[changed] = True
        self.n_ids = int(st.community.max()) + 1 if g.vertex_count else 0
        self.deg = g.degrees().astype(np.int64)
        self.all_edges = np.ones(len(g.indices), dtype=bool)

    def compute(self, ctx):
        st, g = self.st, self.st.fg.graph
        V = ctx.vertices
        if ctx.superstep == 0:
            senders = V[self.notify[V]]
            dst, src, pos = K.fan_out(senders, g.indptr, g.indices, self.all_edges)
            cols = {"comm": st.community[src], "at": g.reverse_positions[pos]}
            ctx.send("community", Messages(dst, src, cols))
            return
        inbox = ctx.inbox("community")
        if len(inbox):
            st.nbr_comm[inbox.columns["at"]] = inbox.columns["comm"]
        _count_same(V, g.indptr, st.nbr_comm, st.community, st.same)
        comm = st.community[V]
        ctx.aggregate("sizes", np.bincount(comm, minlength=self.n_ids))
        ctx.aggregate("internal2", np.bincount(comm, weights=st.same[V], minlength=self.n_ids))
        ctx.aggregate(
            "boundary", np.bincount(comm, weights=self.deg[V] - st.same[V], minlength=self.n_ids)
        )
        ctx.halt()

    def master_compute(self, master):
        if master.superstep == 1:
            zeros = np.zeros(self.n_ids)
            st = self.st
            st.sizes = np.asarray(master.aggregated("sizes", zeros)).astype(np.int64)
            internal2 = np.asarray(master.aggregated("internal2", zeros)).astype(np.int64)
            st.internal = internal2 // 2
            st.boundary = np.asarray(master.aggregated("boundary", zeros)).astype(np.int64)
            master.halt_computation()


@njit(cache=True, nogil=True)
def _count_same(vertices, indptr, nbr_comm, community, out):
    for v in vertices:
        c = 0
        for p in range(indptr[v], indptr[v + 1]):
            if nbr_comm[p] == community[v]:
                c += 1
        out[v] = c


def _sync(engine: Engine, st: IterationState, changed: np.ndarray) -> None:
    engine.run(CommunitySyncProgram(st, changed))


def gather_community_stats(
    fg: FilteredGraph, p: Partitioning, engine_config: EngineConfig | None = None
) -> tuple[dict[int, CommunityStats], GlobalStats]:
    comm = _compact(p.community_of)
    st = IterationState(fg, comm)
    _sync(Engine(fg.graph, engine_config), st, np.arange(fg.graph.vertex_count))
    # report under the caller's community ids
    ids = {}
    for v, c in zip(comm.tolist(), p.community_of.tolist()):
        ids.setdefault(v, c)
    stats = {
        ids[c]: CommunityStats(int(st.sizes[c]), int(st.internal[c]), int(st.boundary[c]))
        for c in range(len(st.sizes))
        if st.sizes[c] > 0
    }
    return stats, GlobalStats(fg.omega)


def _compact(community: np.ndarray) -> np.ndarray:
    _, inv = np.unique(community, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


# -- move choice ---------------------------------------------------------------


@njit(cache=True, nogil=True)
def _better(delta, eg, best_delta, best_eg, tol):
    if delta > best_delta + tol:
        return True
    return delta >= best_delta - tol and eg > best_eg


@njit(cache=True, nogil=True)
def _insert_gain(r, m_in, b, d_in, d, t_x, omega):
    """Estimated change in the WCC sum when ``x`` joins a community.

    The community (``r`` members, ``m_in`` internal and ``b`` boundary edges)
    is modelled as a uniform random graph of its own density; triangles that
    involve outside neighbours close with the graph clustering coefficient.
    ``x`` brings ``d_in`` of its ``d`` edges into the community and takes part
    in ``t_x`` triangles overall.
    """
    if r <= 0:
        return 0.0
    density = 2.0 * m_in / (r * (r - 1.0)) if r >= 2 else 0.0
    gain = 0.0
    if t_x > 0:
        closed = d_in * (d_in - 1) / 2.0 * density
        gain += min(1.0, closed / t_x) * d / (r + d - d_in)
    k = (r - 1.0) * density
    q = b / r
    t_in = k * (k - 1.0) / 2.0 * density if k > 1.0 else 0.0
    t_all = t_in + omega * (k * q + (q * (q - 1.0) / 2.0 if q > 1.0 else 0.0))
    if t_all <= 0.0:
        return gain
    member = t_in / t_all * (k + q) / (r - 1.0 + q)
    if d_in > 0:
        nbr = min((d_in - 1.0) * density / t_all * (k + q) / (r - 1.0 + q), 1.0 - member)
        gain += d_in * nbr
    gain -= (r - d_in) * member / (r + q)
    return gain


@njit(cache=True, nogil=True)
def _heuristic_one(comms, counts, own, d, t_x, r, m_in, b, omega, tol):
    """Best move for one vertex from aggregate statistics only.

    ``comms``/``counts`` list the distinct neighbour communities (ascending)
    and how many of the vertex's edges go into each.
    """
    in_own = 0
    for i in range(len(comms)):
        if comms[i] == own:
            in_own = counts[i]
    r_rest = r[own] - 1
    m_rest = m_in[own] - in_own
    b_rest = b[own] - (d - in_own) + in_own
    leave = -_insert_gain(r_rest, m_rest, b_rest, in_own, d, t_x, omega)
    # a vertex without triangles gains nothing from company: no edge tie-break
    w_eg = 1 if t_x > 0 else 0
    best_act, best_tgt, best_delta, best_eg = STAY, own, 0.0, 0
    if r[own] > 1 and _better(leave, -in_own * w_eg, best_delta, best_eg, tol):
        best_act, best_tgt, best_delta, best_eg = REMOVE, -1, leave, -in_own * w_eg
    for i in range(len(comms)):
        c = comms[i]
        if c == own:
            continue
        delta = leave + _insert_gain(r[c], m_in[c], b[c], counts[i], d, t_x, omega)
        eg = (counts[i] - in_own) * w_eg
        if _better(delta, eg, best_delta, best_eg, tol):
            best_act, best_tgt, best_delta, best_eg = TRANSFER, c, delta, eg
    return best_act, best_tgt, best_delta


@njit(cache=True, nogil=True)
def _heuristic_moves(vertices, indptr, nbr_comm, community, deg, t_all, r, m_in, b, omega,
                     tol, action, target, gain):
    for v in vertices:
        row = np.sort(nbr_comm[indptr[v]:indptr[v + 1]])
        comms = np.empty(len(row), np.int64)
        counts = np.empty(len(row), np.int64)
        k = 0
        for i in range(len(row)):
            if k > 0 and comms[k - 1] == row[i]:
                counts[k - 1] += 1
            else:
                comms[k] = row[i]
                counts[k] = 1
                k += 1
        act, tgt, delta = _heuristic_one(
            comms[:k], counts[:k], community[v], deg[v], t_all[v], r, m_in, b, omega, tol
        )
        action[v] = act
        target[v] = tgt if act == TRANSFER else -1
        gain[v] = delta


class HeuristicMoveProgram(WorkerProgram):
    """One superstep: every vertex evaluates its moves from broadcast aggregates."""

    def __init__(self, st: IterationState, decisions: Decisions):
        self.st = st
        self.decisions = decisions
        self.deg = st.fg.graph.degrees().astype(np.int64)

    def compute(self, ctx):
        st = self.st
        d = self.decisions
        _heuristic_moves(
            ctx.vertices, st.fg.graph.indptr, st.nbr_comm, st.community, self.deg, st.fg.t,
            st.sizes, st.internal, st.boundary, st.fg.omega, TIE_TOL, d.action, d.target, d.gain,
        )
        ctx.halt()


@dataclass(frozen=True)
class VertexMoveContext:
    """What a vertex knows locally when it evaluates the heuristic."""

    community: int
    degree: int
    t_global: int
    edges_into: dict[int, int]  # neighbour community -> number of edges into it


def evaluate_move_heuristic(
    x: VertexMoveContext, stats: dict[int, CommunityStats], global_stats: GlobalStats
) -> MoveDecision:
    needed = set(x.edges_into) | {x.community}
    missing = needed - set(stats)
    if missing:
        raise KeyError(f"no statistics for communities {sorted(missing)}")
    ids = sorted(needed)
    index = {c: i for i, c in enumerate(ids)}
    r = np.array([stats[c].r for c in ids], dtype=np.int64)
    m_in = np.array([stats[c].internal_edges for c in ids], dtype=np.int64)
    b = np.array([stats[c].boundary_edges for c in ids], dtype=np.int64)
    nbr = sorted(x.edges_into)
    comms = np.array([index[c] for c in nbr], dtype=np.int64)
    counts = np.array([x.edges_into[c] for c in nbr], dtype=np.int64)
    act, tgt, _ = _heuristic_one(
        comms, counts, index[x.community], x.degree, x.t_global, r, m_in, b,
        global_stats.omega, TIE_TOL,
    )
    if act == STAY:
        return MoveDecision.stay()
    if act == REMOVE:
        return MoveDecision.remove()
    return MoveDecision.transfer(ids[tgt])


# -- exact evaluator -----------------------------------------------------------


@njit(cache=True, nogil=True)
def _f(t_in, t_all, deg, size, same):
    if t_all == 0:
        return 0.0
    return (t_in / t_all) * (deg / (size - 1 + deg - same))


@njit(cache=True, nogil=True)
def _exact_moves(vertices, indptr, indices, community, size, t_in, t_all, same,
                 m_indptr, members, tol, action, target, gain):
    n = len(community)
    mark = np.full(n, -1, np.int64)
    common = np.zeros(n, np.int64)
    for x in vertices:
        a = community[x]
        for p in range(indptr[x], indptr[x + 1]):
            mark[indices[p]] = x
        # common neighbours of x and y inside y's community, for every neighbour y
        for p in range(indptr[x], indptr[x + 1]):
            y = indices[p]
            c = 0
            for q in range(indptr[y], indptr[y + 1]):
                w = indices[q]
                if mark[w] == x and community[w] == community[y]:
                    c += 1
            common[y] = c
        sa = size[a]
        leave = 0.0
        for i in range(m_indptr[a], m_indptr[a + 1]):
            y = members[i]
            dy = indptr[y + 1] - indptr[y]
            old = _f(t_in[y], t_all[y], dy, sa, same[y])
            if y == x:
                leave -= old
            elif mark[y] == x:
                leave += _f(t_in[y] - common[y], t_all[y], dy, sa - 1, same[y] - 1) - old
            else:
                leave += _f(t_in[y], t_all[y], dy, sa - 1, same[y]) - old
        in_own = same[x]
        w_eg = 1 if t_all[x] > 0 else 0
        best_act, best_tgt, best_delta, best_eg = STAY, a, 0.0, 0
        if sa > 1 and _better(leave, -in_own * w_eg, best_delta, best_eg, tol):
            best_act, best_tgt, best_delta, best_eg = REMOVE, -1, leave, -in_own * w_eg
        cands = np.empty(indptr[x + 1] - indptr[x], np.int64)
        for p in range(indptr[x], indptr[x + 1]):
            cands[p - indptr[x]] = community[indices[p]]
        cands = np.unique(cands)
        dx = indptr[x + 1] - indptr[x]
        for bc in cands:
            if bc == a:
                continue
            sb = size[bc]
            d_in = 0
            tri2 = 0
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if community[y] == bc:
                    d_in += 1
                    tri2 += common[y]
            join = _f(tri2 // 2, t_all[x], dx, sb + 1, d_in)
            for i in range(m_indptr[bc], m_indptr[bc + 1]):
                y = members[i]
                dy = indptr[y + 1] - indptr[y]
                old = _f(t_in[y], t_all[y], dy, sb, same[y])
                if mark[y] == x:
                    join += _f(t_in[y] + common[y], t_all[y], dy, sb + 1, same[y] + 1) - old
                else:
                    join += _f(t_in[y], t_all[y], dy, sb + 1, same[y]) - old
            delta = leave + join
            eg = (d_in - in_own) * w_eg
            if _better(delta, eg, best_delta, best_eg, tol):
                best_act, best_tgt, best_delta, best_eg = TRANSFER, bc, delta, eg
        action[x] = best_act
        target[x] = best_tgt if best_act == TRANSFER else -1
        gain[x] = best_delta


@njit(cache=True, nogil=True)
def _intra_triangles(indptr, indices, community, t_out, same_out):
    n = len(community)
    mark = np.full(n, -1, np.int64)
    for x in range(n):
        cx = community[x]
        s = 0
        for p in range(indptr[x], indptr[x + 1]):
            if community[indices[p]] == cx:
                mark[indices[p]] = x
                s += 1
        same_out[x] = s
        pairs = 0
        for p in range(indptr[x], indptr[x + 1]):
            y = indices[p]
            if mark[y] != x:
                continue
            for q in range(indptr[y], indptr[y + 1]):
                if mark[indices[q]] == x:
                    pairs += 1
        t_out[x] = pairs // 2


class ExactEvaluator:
    """True WCC deltas, recomputed over the members of the affected communities.

    Works on a triangle-filtered graph, where every neighbour is a triangle
    partner. Cost per vertex grows with the sizes of its own and neighbouring
    communities, so it is meant for desk-scale graphs.
    """

    def __init__(self, fg: FilteredGraph, community: np.ndarray, t_in=None, same=None):
        g = fg.graph
        self.fg = fg
        self.community = np.asarray(community, dtype=np.int64)
        n = g.vertex_count
        if t_in is None or same is None:
            t_in = np.zeros(n, np.int64)
            same = np.zeros(n, np.int64)
            _intra_triangles(g.indptr, g.indices, self.community, t_in, same)
        self.t_in, self.same = t_in, same
        n_ids = int(self.community.max()) + 1 if n else 0
        self.size = np.bincount(self.community, minlength=n_ids).astype(np.int64)
        order = np.argsort(self.community, kind="stable").astype(np.int64)
        self.members = order
        self.m_indptr = np.zeros(n_ids + 1, np.int64)
        np.cumsum(self.size, out=self.m_indptr[1:])

    def evaluate(self, vertices=None) -> Decisions:
        g = self.fg.graph
        n = g.vertex_count
        d = Decisions.all_stay(n)
        vertices = np.arange(n, dtype=np.int64) if vertices is None else np.asarray(vertices, np.int64)
        _exact_moves(
            vertices, g.indptr, g.indices, self.community, self.size, self.t_in, self.fg.t,
            self.same, self.m_indptr, self.members, TIE_TOL, d.action, d.target, d.gain,
        )
        return d


def evaluate_move_exact(fg: FilteredGraph, p: Partitioning, x: int) -> MoveDecision:
    """Argmax of the true global-WCC change over Stay, Remove and each Transfer."""
    comm = p.community_of
    ids, compact = np.unique(comm, return_inverse=True)
    d = ExactEvaluator(fg, compact.reshape(-1)).evaluate([x])
    decision = d[x]
    if decision.kind == "transfer":
        return MoveDecision.transfer(int(ids[decision.target]))
    return decision


# -- applying moves ------------------------------------------------------------


def apply_moves(p: Partitioning, decisions, graph=None) -> Partitioning:
    """Apply every decision against the old snapshot at once.

    A Remove takes the vertex's own id as its new community when no other
    vertex holds that id afterwards, else the smallest free id. With ``graph``
    given, each Transfer target is checked to be a neighbour's community.
    """
    old = p.community_of
    n = len(old)
    if isinstance(decisions, dict):
        decisions = Decisions.from_mapping(n, decisions)
    new = old.copy()
    movers = np.flatnonzero(decisions.action == TRANSFER)
    targets = decisions.target[movers]
    if graph is not None:
        for v, c in zip(movers.tolist(), targets.tolist()):
            if c not in set(old[graph.neighbors(v)].tolist()):
                raise ValueError(f"vertex {v}: transfer target {c} is not a neighbour community")
    new[movers] = targets
    removers = np.flatnonzero(decisions.action == REMOVE)
    if len(removers):
        keep = np.ones(n, dtype=bool)
        keep[removers] = False
        used = set(new[keep].tolist())
        free = (c for c in range(n + len(removers)) if c not in used)
        pending = []
        for v in removers.tolist():
            if v not in used:
                new[v] = v
                used.add(v)
            else:
                pending.append(v)
        for v in pending:
            c = next(free)
            while c in used:
                c = next(free)
            new[v] = c
            used.add(c)
    return Partitioning(new)


def _single_best(decisions: Decisions) -> Decisions:
    movers = np.flatnonzero(decisions.action != STAY)
    out = Decisions.all_stay(len(decisions.action))
    if len(movers):
        gains = decisions.gain[movers]
        best = movers[np.argmax(gains)]  # first max: lowest vertex id
        out.action[best] = decisions.action[best]
        out.target[best] = decisions.target[best]
        out.gain[best] = decisions.gain[best]
    return out


# -- distributed WCC -----------------------------------------------------------


@dataclass
class PartitionWcc:
    wcc: float
    vertex_wcc: np.ndarray
    t_in: np.ndarray  # t(x, C_x)
    vt_in: np.ndarray  # same-community neighbours sharing an in-community triangle
    same: np.ndarray  # same-community neighbours
    supersteps: int


def partition_wcc_details(
    fg: FilteredGraph,
    p: Partitioning | np.ndarray,
    engine_config: EngineConfig | None = None,
    avail_worker_memory: int = DEFAULT_AVAIL_WORKER_MEMORY,
    engine: Engine | None = None,
) -> PartitionWcc:
    engine_config = engine_config or (engine.config if engine else EngineConfig())
    comm = p.community_of if isinstance(p, Partitioning) else np.asarray(p)
    comm = _compact(comm)
    g = fg.graph
    program = TriangleCountProgram(
        g, engine_config, avail_worker_memory, community=comm, t_all=fg.t
    )
    result = (engine or Engine(g, engine_config)).run(program)
    n = g.vertex_count
    return PartitionWcc(
        wcc=program.wcc_sum / n if n else 0.0,
        vertex_wcc=program.wcc,
        t_in=program.t,
        vt_in=program.vt,
        same=program.same,
        supersteps=result.supersteps,
    )


def compute_partition_wcc(
    fg: FilteredGraph, p: Partitioning, engine_config: EngineConfig | None = None
) -> float:
    """Global WCC of ``p`` via intra-community triangle counting on the engine."""
    return partition_wcc_details(fg, p, engine_config).wcc


# -- the loop ------------------------------------------------------------------


def run_wcc_iteration(
    fg: FilteredGraph,
    p0: Partitioning,
    config: IterationConfig | None = None,
    engine_config: EngineConfig | None = None,
) -> WccTrace:
    config = config or IterationConfig()
    engine = Engine(fg.graph, engine_config)
    n = fg.graph.vertex_count
    trace = WccTrace()
    clock = time.perf_counter()

    st = IterationState(fg, _compact(p0.community_of))
    _sync(engine, st, np.arange(n))
    current = partition_wcc_details(fg, st.community, avail_worker_memory=config.avail_worker_memory, engine=engine)
    best, best_comm = current.wcc, st.community.copy()
    trace.rows.append(TraceRow(0, current.wcc, best, 0, (time.perf_counter() - clock) * 1e3))
    log.info("iteration 0: wcc %.6f", current.wcc)

    stagnant = 0
    trace.status = "max_iterations"
    for it in range(1, config.max_iterations + 1):
        clock = time.perf_counter()
        if config.evaluator == "heuristic":
            decisions = Decisions.all_stay(n)
            engine.run(HeuristicMoveProgram(st, decisions))
        else:
            ev = ExactEvaluator(fg, st.community, current.t_in, current.same)
            decisions = ev.evaluate()
        if config.single_mover:
            decisions = _single_best(decisions)
        old = st.community
        moved = apply_moves(Partitioning(old), decisions).community_of
        changed = np.flatnonzero(moved != old)
        if len(changed):
            st.community = moved.copy()
            _sync(engine, st, changed)
            current = partition_wcc_details(
                fg, st.community, avail_worker_memory=config.avail_worker_memory, engine=engine
            )
        prev_best = best
        if current.wcc > best:
            best, best_comm = current.wcc, st.community.copy()
        trace.rows.append(
            TraceRow(it, current.wcc, best, len(changed), (time.perf_counter() - clock) * 1e3)
        )
        log.info("iteration %d: wcc %.6f best %.6f moves %d", it, current.wcc, best, len(changed))
        if prev_best > 0:
            improvement = (best - prev_best) / prev_best
        else:
            improvement = float("inf") if best > prev_best else 0.0
        stagnant = stagnant + 1 if improvement < config.epsilon else 0
        if stagnant >= config.patience:
            trace.status = "converged"
            break
    if trace.status == "max_iterations":
        log.warning("stopped at max_iterations=%d before convergence", config.max_iterations)
    trace.best_partitioning = Partitioning(best_comm)
    return trace

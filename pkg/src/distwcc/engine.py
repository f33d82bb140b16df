"""A Pregel-style vertex-centric engine with simulated workers.

Vertices are spread over ``worker_count`` workers by ``v mod worker_count``.
Each superstep every worker runs the program over the vertices it owns,
in its own thread; messages and aggregator contributions produced in
superstep ``s`` become visible in superstep ``s + 1`` after a barrier.

Programs come in two flavours. A :class:`WorkerProgram` receives a whole
worker's slice at once and works on columnar :class:`Messages` batches, which
is what the numba-backed pipeline phases use. A :class:`VertexProgram` is the
classic one-vertex-at-a-time interface, adapted on top.

Inboxes are always sorted by ``(dst, src)`` before delivery so a program's
output never depends on thread scheduling.
"""

from __future__ import annotations

import logging
import math
import operator
import pickle
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Any, Callable

import numpy as np

from . import _kernels as K
from .errors import ConfigError, EngineError, NoConvergenceError
from .graph import Graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineConfig:
    worker_count: int = 1
    superstep_cap: int = 10_000
    byte_accounting: bool = False
    vertex_size: int = 8  # bytes per serialized vertex id

    def __post_init__(self):
        for name in ("worker_count", "superstep_cap", "vertex_size"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def assign_worker(v: int, worker_count: int) -> int:
    if worker_count < 1:
        raise ConfigError("worker_count must be >= 1")
    return v % worker_count


def owned_vertices(n: int, worker: int, worker_count: int) -> np.ndarray:
    return np.arange(worker, n, worker_count, dtype=np.int64)


# -- aggregation ---------------------------------------------------------------


@dataclass(frozen=True)
class Reducer:
    name: str
    identity: Any
    combine: Callable[[Any, Any], Any]


def _max(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.maximum(a, b)
    return max(a, b)


def _min(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.minimum(a, b)
    return min(a, b)


SUM = Reducer("sum", 0, operator.add)
MAX = Reducer("max", float("-inf"), _max)
MIN = Reducer("min", float("inf"), _min)
# Contributions are tuples of non-overlapping float partials; the reduced
# value is read with exact_total(), which is correctly rounded and therefore
# independent of how vertices were grouped into workers.
EXACT_SUM = Reducer("exact_sum", (), lambda a, b: tuple(a) + tuple(b))


def exact_total(partials) -> float:
    return math.fsum(partials)


def aggregate(contributions, reducer: Reducer = SUM):
    """Fold ``contributions`` in the order given, starting from the identity."""
    return reduce(reducer.combine, contributions, reducer.identity)


# -- messages ------------------------------------------------------------------


@dataclass
class Ragged:
    """Variable-length vertex-id payloads as slices of a shared buffer.

    Message ``i`` carries ``buffer[start[i]:stop[i]]``. Several messages may
    point at the same slice, so fanning a list out to many receivers never
    copies it.
    """

    buffer: np.ndarray
    start: np.ndarray
    stop: np.ndarray

    def take(self, idx) -> Ragged:
        return Ragged(self.buffer, self.start[idx], self.stop[idx])

    def item(self, i: int) -> np.ndarray:
        return self.buffer[self.start[i] : self.stop[i]]

    def total(self) -> int:
        return int((self.stop - self.start).sum())


_EMPTY = np.empty(0, dtype=np.int64)


class Messages:
    """A columnar batch of messages on one channel."""

    __slots__ = ("dst", "src", "columns", "payload")

    def __init__(self, dst, src, columns=None, payload: Ragged | None = None):
        self.dst = np.asarray(dst, dtype=np.int64)
        self.src = np.asarray(src, dtype=np.int64)
        self.columns = columns or {}
        self.payload = payload
        if len(self.src) != len(self.dst):
            raise EngineError("dst and src lengths differ")
        for name, col in self.columns.items():
            if len(col) != len(self.dst):
                raise EngineError(f"column {name!r} length differs from dst")

    @classmethod
    def empty(cls) -> Messages:
        return cls(_EMPTY, _EMPTY)

    def __len__(self):
        return len(self.dst)

    def take(self, idx) -> Messages:
        return Messages(
            self.dst[idx],
            self.src[idx],
            {k: v[idx] for k, v in self.columns.items()},
            self.payload.take(idx) if self.payload is not None else None,
        )

    def segment_bounds(self, vertices: np.ndarray):
        """``(lo, hi)`` so vertex ``vertices[i]`` owns rows ``lo[i]:hi[i]``.

        Requires the batch to be sorted by ``dst`` (as inboxes are).
        """
        return (
            np.searchsorted(self.dst, vertices, side="left"),
            np.searchsorted(self.dst, vertices, side="right"),
        )

    def nbytes(self, vertex_size: int) -> int:
        n = len(self)
        size = 2 * vertex_size * n
        for col in self.columns.values():
            if col.dtype == object:
                size += sum(len(pickle.dumps(x)) for x in col)
            else:
                size += col.itemsize * n
        if self.payload is not None:
            size += vertex_size * self.payload.total()
        return size


def _concat(pieces: list[Messages], buffer_offsets: dict[int, int] | None, buffer) -> Messages:
    if not pieces:
        return Messages.empty()
    if len(pieces) == 1 and buffer_offsets is None:
        return pieces[0]
    dst = np.concatenate([p.dst for p in pieces])
    src = np.concatenate([p.src for p in pieces])
    columns = {
        name: np.concatenate([p.columns[name] for p in pieces]) for name in pieces[0].columns
    }
    payload = None
    if pieces[0].payload is not None:
        if buffer_offsets is None:
            starts = [p.payload.start for p in pieces]
            stops = [p.payload.stop for p in pieces]
        else:
            starts = [p.payload.start + buffer_offsets[id(p.payload.buffer)] for p in pieces]
            stops = [p.payload.stop + buffer_offsets[id(p.payload.buffer)] for p in pieces]
        payload = Ragged(buffer, np.concatenate(starts), np.concatenate(stops))
    return Messages(dst, src, columns, payload)


def _sorted(batch: Messages, n: int) -> Messages:
    """Order by ``(dst, src)`` with two stable counting-sort passes."""
    if len(batch) < 2:
        return batch
    by_src = K.stable_order(batch.src, n)
    order = by_src[K.stable_order(batch.dst[by_src], n)]
    return batch.take(order)


# -- program interfaces --------------------------------------------------------


class WorkerContext:
    """What a worker sees during one superstep."""

    def __init__(self, engine: Engine, worker: int, superstep: int, inbox, reads, active):
        self.graph = engine.graph
        self.state = engine.state
        self.worker = worker
        self.worker_count = engine.config.worker_count
        self.superstep = superstep
        self.vertices = engine.owned[worker]
        self.active = active
        self._inbox = inbox
        self._reads = reads
        self._aggregators = engine.aggregators
        self._n = engine.graph.vertex_count
        self.outbox: dict[str, list[Messages]] = {}
        self.partials: dict[str, Any] = {}
        self.halted: list[np.ndarray] = []

    def inbox(self, channel: str) -> Messages:
        return self._inbox.get(channel) or Messages.empty()

    def send(self, channel: str, messages: Messages) -> None:
        if len(messages) == 0:
            return
        if messages.dst.min() < 0 or messages.dst.max() >= self._n:
            bad = messages.dst[(messages.dst < 0) | (messages.dst >= self._n)][0]
            raise EngineError(f"message on {channel!r} addressed to nonexistent vertex {bad}")
        self.outbox.setdefault(channel, []).append(messages)

    def aggregate(self, name: str, value) -> None:
        try:
            reducer = self._aggregators[name]
        except KeyError:
            raise EngineError(f"unknown aggregator {name!r}") from None
        if name in self.partials:
            self.partials[name] = reducer.combine(self.partials[name], value)
        else:
            self.partials[name] = value

    def aggregated(self, name: str):
        if name in self._reads:
            return self._reads[name]
        return self._aggregators[name].identity

    def halt(self, vertices=None) -> None:
        """Vote to halt for ``vertices`` (default: every owned vertex)."""
        self.halted.append(self.vertices if vertices is None else np.asarray(vertices, dtype=np.int64))


class MasterContext:
    """Runs once per barrier, after aggregates of the finished superstep are reduced."""

    def __init__(self, superstep: int, reads: dict, messages_in_flight: int):
        self.superstep = superstep
        self.messages_in_flight = messages_in_flight
        self._reads = reads
        self.stop = False

    def aggregated(self, name: str, default=None):
        return self._reads.get(name, default)

    def halt_computation(self) -> None:
        self.stop = True


class WorkerProgram:
    """Base for programs that process a worker's vertices as a batch.

    ``compute`` must make each vertex's outcome depend only on its own state,
    its sorted inbox and the aggregator reads; that is what makes results
    independent of ``worker_count``.
    """

    aggregators: dict[str, Reducer] = {}

    def compute(self, ctx: WorkerContext) -> None:
        raise NotImplementedError

    def master_compute(self, master: MasterContext) -> None:
        pass


class VertexContext:
    """Per-vertex view used by :class:`VertexProgram`."""

    def __init__(self, wctx: WorkerContext, vertex: int, messages: list, out: list):
        self._w = wctx
        self.id = vertex
        self.superstep = wctx.superstep
        self.messages = messages  # [(src, value), ...] ascending by src
        self._out = out
        self.halted = False

    @property
    def value(self):
        return self._w.state[self.id]

    @value.setter
    def value(self, v):
        self._w.state[self.id] = v

    @property
    def neighbors(self) -> np.ndarray:
        return self._w.graph.neighbors(self.id)

    def send(self, dst: int, value) -> None:
        self._out.append((int(dst), self.id, value))

    def send_to_neighbors(self, value) -> None:
        for u in self.neighbors:
            self._out.append((int(u), self.id, value))

    def aggregate(self, name: str, value) -> None:
        self._w.aggregate(name, value)

    def aggregated(self, name: str):
        return self._w.aggregated(name)

    def vote_to_halt(self) -> None:
        self.halted = True


class VertexProgram(WorkerProgram):
    """Classic one-vertex-at-a-time program on the ``"default"`` channel."""

    def compute_vertex(self, v: VertexContext) -> None:
        raise NotImplementedError

    def compute(self, ctx: WorkerContext) -> None:
        inbox = ctx.inbox("default")
        lo, hi = inbox.segment_bounds(ctx.active)
        values = inbox.columns.get("value")
        out: list = []
        halted = []
        for v, a, b in zip(ctx.active.tolist(), lo.tolist(), hi.tolist()):
            msgs = [(int(inbox.src[i]), values[i]) for i in range(a, b)]
            vctx = VertexContext(ctx, v, msgs, out)
            self.compute_vertex(vctx)
            if vctx.halted:
                halted.append(v)
        if out:
            col = np.empty(len(out), dtype=object)
            col[:] = [m[2] for m in out]
            ctx.send(
                "default",
                Messages([m[0] for m in out], [m[1] for m in out], {"value": col}),
            )
        ctx.halt(halted)


# -- the engine ----------------------------------------------------------------


@dataclass
class RunResult:
    state: Any
    supersteps: int
    aggregates: list[dict] = field(default_factory=list)
    message_stats: list[dict] = field(default_factory=list)


class Engine:
    def __init__(self, graph: Graph, config: EngineConfig | None = None):
        self.graph = graph
        self.config = config or EngineConfig()
        w = self.config.worker_count
        self.owned = [owned_vertices(graph.vertex_count, i, w) for i in range(w)]
        self.state = None
        self.aggregators: dict[str, Reducer] = {}

    def run(self, program: WorkerProgram, state=None) -> RunResult:
        cfg = self.config
        W = cfg.worker_count
        n = self.graph.vertex_count
        self.state = state
        self.aggregators = dict(program.aggregators)
        active = np.ones(n, dtype=bool)
        inboxes: list[dict[str, Messages]] = [{} for _ in range(W)]
        reads: dict[str, Any] = {}
        result = RunResult(state, 0)
        pool = ThreadPoolExecutor(max_workers=W, thread_name_prefix="bsp-worker") if W > 1 else None
        try:
            for step in range(cfg.superstep_cap + 1):
                if step == cfg.superstep_cap:
                    raise NoConvergenceError(
                        f"no convergence: superstep cap {cfg.superstep_cap} reached"
                    )
                has_mail = np.zeros(n, dtype=bool)
                for box in inboxes:
                    for batch in box.values():
                        has_mail[batch.dst] = True
                runnable = active | has_mail

                def work(w, step=step, runnable=runnable):
                    mine = self.owned[w]
                    act = mine[runnable[mine]]
                    ctx = WorkerContext(self, w, step, inboxes[w], reads, act)
                    if len(act):
                        program.compute(ctx)
                    return ctx, self._split(ctx)

                done = list(pool.map(work, range(W))) if pool else [work(0)]
                contexts = [c for c, _ in done]

                # barrier
                active = runnable
                for ctx in contexts:
                    for h in ctx.halted:
                        active[h] = False
                reads = {}
                for name, reducer in self.aggregators.items():
                    parts = [c.partials[name] for c in contexts if name in c.partials]
                    if parts:
                        reads[name] = aggregate(parts, reducer)
                inboxes, stats = self._route([s for _, s in done], pool)
                result.aggregates.append(dict(reads))
                result.message_stats.append(stats)
                result.supersteps = step + 1
                in_flight = sum(s["messages"] for s in stats.values())
                master = MasterContext(step, reads, in_flight)
                program.master_compute(master)
                if master.stop or (in_flight == 0 and not active.any()):
                    break
        finally:
            if pool:
                pool.shutdown()
        self.state = None
        return result

    def _split(self, ctx: WorkerContext):
        """Bucket a worker's outbox by destination worker, keeping send order."""
        W = self.config.worker_count
        split: dict[str, list[Messages]] = {}
        for channel, batches in ctx.outbox.items():
            if len(batches) == 1:
                batch = batches[0]
            else:
                batch = _concat_same_sender(batches)
            if W == 1:
                split[channel] = [batch]
                continue
            dw = batch.dst % W
            order = np.argsort(dw, kind="stable")
            bounds = np.searchsorted(dw[order], np.arange(W + 1))
            split[channel] = [batch.take(order[bounds[i] : bounds[i + 1]]) for i in range(W)]
        return split

    def _route(self, splits, pool):
        W = self.config.worker_count
        n = self.graph.vertex_count
        channels = sorted({c for s in splits for c in s})
        stats: dict[str, dict] = {}
        plans = {}
        for channel in channels:
            per_sender = [s[channel] for s in splits if channel in s]
            buffers = {}
            for pieces in per_sender:
                for p in pieces:
                    if p.payload is not None:
                        buffers.setdefault(id(p.payload.buffer), p.payload.buffer)
            offsets, buffer = None, None
            if len(buffers) == 1:
                buffer = next(iter(buffers.values()))
            elif len(buffers) > 1:
                offsets, acc = {}, 0
                for key, buf in buffers.items():
                    offsets[key] = acc
                    acc += len(buf)
                buffer = np.concatenate(list(buffers.values()))
            plans[channel] = (per_sender, offsets, buffer)
            count = sum(len(p) for pieces in per_sender for p in pieces)
            elements = sum(
                p.payload.total() for pieces in per_sender for p in pieces if p.payload is not None
            )
            entry = {"messages": count, "payload_elements": elements}
            if self.config.byte_accounting:
                entry["bytes"] = sum(
                    p.nbytes(self.config.vertex_size) for pieces in per_sender for p in pieces
                )
            stats[channel] = entry

        def deliver(w):
            box = {}
            for channel, (per_sender, offsets, buffer) in plans.items():
                pieces = [pieces[w] for pieces in per_sender if len(pieces[w])]
                if pieces:
                    box[channel] = _sorted(_concat(pieces, offsets, buffer), n)
            return box

        inboxes = list(pool.map(deliver, range(W))) if pool else [deliver(0)]
        return inboxes, stats


def _concat_same_sender(batches: list[Messages]) -> Messages:
    bufs = {id(b.payload.buffer): b.payload.buffer for b in batches if b.payload is not None}
    if len(bufs) <= 1:
        return _concat(batches, None, next(iter(bufs.values()), None))
    offsets, acc = {}, 0
    for key, buf in bufs.items():
        offsets[key] = acc
        acc += len(buf)
    return _concat(batches, offsets, np.concatenate(list(bufs.values())))


def run_program(graph: Graph, program: WorkerProgram, state=None, config: EngineConfig | None = None) -> RunResult:
    """Run ``program`` to completion and return final state plus aggregator history."""
    return Engine(graph, config).run(program, state)

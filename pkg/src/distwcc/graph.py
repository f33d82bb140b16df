"""Immutable undirected simple graphs in CSR form, plus the SNAP edge-list loader."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from .errors import ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LoadReport:
    vertices: int
    edges: int
    duplicates_dropped: int
    self_loops_dropped: int

    def __str__(self):
        return (
            f"loaded {self.vertices} vertices, {self.edges} edges "
            f"({self.duplicates_dropped} duplicates dropped, "
            f"{self.self_loops_dropped} self-loops dropped)"
        )


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph with dense vertex ids ``0..n-1``.

    ``indices[indptr[v]:indptr[v+1]]`` is the strictly ascending adjacency of
    ``v``. ``original_ids[v]`` is the external id the vertex was loaded under.
    """

    indptr: np.ndarray
    indices: np.ndarray
    original_ids: np.ndarray
    report: LoadReport | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("indptr", "indices", "original_ids"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def vertex_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def _check(self, v):
        if not 0 <= v < self.vertex_count:
            raise IndexError(f"vertex {v} out of range [0, {self.vertex_count})")

    def degree(self, v: int) -> int:
        self._check(v)
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        self._check(v)
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def common_neighbors(self, u: int, v: int) -> np.ndarray:
        if u == v:
            raise ValueError("common_neighbors needs two distinct vertices")
        return np.intersect1d(self.neighbors(u), self.neighbors(v), assume_unique=True)

    def edges(self) -> np.ndarray:
        """Each undirected edge once as an ``(m, 2)`` array with ``u < v``."""
        src = np.repeat(np.arange(self.vertex_count, dtype=np.int64), self.degrees())
        keep = src < self.indices
        return np.stack([src[keep], self.indices[keep]], axis=1)

    @cached_property
    def reverse_positions(self) -> np.ndarray:
        """``rev[p]`` is where the reverse of adjacency entry ``p`` sits.

        For ``p`` in the row of ``v`` with ``indices[p] == u``, ``rev[p]`` is the
        position of ``v`` in the row of ``u``.
        """
        owner = np.repeat(np.arange(self.vertex_count, dtype=np.int64), self.degrees())
        order = np.lexsort((owner, self.indices))
        rev = np.empty(len(order), dtype=np.int64)
        rev[order] = np.arange(len(order), dtype=np.int64)
        rev.setflags(write=False)
        return rev

    def adjacency_sets(self) -> list[set[int]]:
        return [set(self.neighbors(v).tolist()) for v in range(self.vertex_count)]

    def subgraph_edges(self, keep: np.ndarray) -> Graph:
        """Same vertex set, keeping the adjacency entries where ``keep`` is true.

        ``keep`` is aligned with ``indices`` and must be symmetric.
        """
        keep = np.asarray(keep, dtype=bool)
        owner = np.repeat(np.arange(self.vertex_count, dtype=np.int64), self.degrees())
        indptr = np.zeros(self.vertex_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(owner[keep], minlength=self.vertex_count), out=indptr[1:])
        return Graph(indptr, self.indices[keep].copy(), self.original_ids.copy())

    def write_edge_list(self, out: IO[str]) -> None:
        """Write each edge once, external ids, lower internal id first."""
        e = self.edges()
        ext = self.original_ids[e]
        buf = io.StringIO()
        np.savetxt(buf, ext, fmt="%d")
        out.write(buf.getvalue())

    @classmethod
    def from_edges(cls, pairs: Iterable) -> Graph:
        """Build from ``(u, v)`` pairs over external ids.

        Direction is ignored, duplicates collapse, self-loops are dropped.
        Vertices appearing only in self-loops are dropped too.
        """
        if not isinstance(pairs, np.ndarray):
            pairs = list(pairs)
        return _build(np.asarray(pairs, dtype=np.int64).reshape(-1, 2))

    @classmethod
    def from_adjacency(cls, n: int, pairs) -> Graph:
        """Build a graph on exactly ``n`` dense vertices (isolated ones allowed)."""
        arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if len(arr) and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint outside 0..n-1")
        return _build(arr, np.arange(n, dtype=np.int64), dense=True)


def _build(arr: np.ndarray, original_ids=None, dense=False) -> Graph:
    raw = len(arr)
    loops = arr[:, 0] == arr[:, 1]
    arr = arr[~loops]
    if dense:
        ext = np.asarray(original_ids, dtype=np.int64)
        local = arr
    else:
        ext, inv = np.unique(arr, return_inverse=True)
        local = inv.reshape(-1, 2).astype(np.int64)
    n = len(ext)
    lo = np.minimum(local[:, 0], local[:, 1])
    hi = np.maximum(local[:, 0], local[:, 1])
    key = np.unique(lo * max(n, 1) + hi)
    lo, hi = key // max(n, 1), key % max(n, 1)
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    report = LoadReport(
        vertices=n,
        edges=len(key),
        duplicates_dropped=int(raw - loops.sum() - len(key)),
        self_loops_dropped=int(loops.sum()),
    )
    return Graph(indptr, dst.astype(np.int64), np.asarray(ext, dtype=np.int64), report)


def load_edge_list(source) -> Graph:
    """Parse a SNAP-style edge list.

    ``source`` may be a path, a text or binary stream, or raw ``bytes``.
    Lines starting with ``#`` and blank lines are skipped; every other line
    must hold exactly two integer tokens.
    """
    text = _read_text(source)
    us: list[int] = []
    vs: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 tokens, got {len(parts)}: {stripped!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer token in {stripped!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative vertex id in {stripped!r}", lineno)
        us.append(u)
        vs.append(v)
    if not us:
        raise ParseError("no edges")
    arr = np.empty((len(us), 2), dtype=np.int64)
    arr[:, 0] = us
    arr[:, 1] = vs
    g = _build(arr)
    if g.edge_count == 0:
        raise ParseError("no edges")
    log.info("%s", g.report)
    return g


def _read_text(source) -> str:
    if hasattr(source, "read"):
        data = source.read()
    elif isinstance(source, bytes):
        data = source
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if isinstance(data, str):
        return data
    try:
        return data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not ASCII text (byte offset {exc.start})") from None

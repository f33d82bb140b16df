"""Partitionings and the ``external_id community_id`` partition file format."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

import numpy as np

from .errors import ParseError
from .graph import Graph


@dataclass(frozen=True, eq=False)
class Partitioning:
    """Total, non-overlapping assignment of dense vertices to community ids."""

    community_of: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.community_of, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("community_of must be one-dimensional")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "community_of", arr)

    def __len__(self):
        return len(self.community_of)

    def __eq__(self, other):
        return isinstance(other, Partitioning) and np.array_equal(
            self.community_of, other.community_of
        )

    def __hash__(self):
        return hash(self.community_of.tobytes())

    @cached_property
    def communities(self) -> dict[int, np.ndarray]:
        """Community id -> ascending member array."""
        order = np.argsort(self.community_of, kind="stable")
        ids, starts = np.unique(self.community_of[order], return_index=True)
        bounds = list(starts[1:]) + [len(order)]
        return {int(c): order[a:b] for c, a, b in zip(ids, starts, bounds)}

    def members(self, c: int) -> np.ndarray:
        return self.communities.get(int(c), np.empty(0, dtype=np.int64))

    def member_set(self, v: int) -> set[int]:
        return set(self.members(self.community_of[v]).tolist())

    @classmethod
    def singletons(cls, n: int) -> Partitioning:
        return cls(np.arange(n, dtype=np.int64))

    @classmethod
    def single(cls, n: int) -> Partitioning:
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def from_groups(cls, groups: Iterable[Iterable[int]], n: int) -> Partitioning:
        """Build from disjoint vertex groups covering ``0..n-1``; ids are group indices."""
        out = np.full(n, -1, dtype=np.int64)
        for i, group in enumerate(groups):
            for v in group:
                if out[v] != -1:
                    raise ValueError(f"vertex {v} appears in two groups")
                out[v] = i
        if (out < 0).any():
            raise ValueError(f"vertex {int(np.flatnonzero(out < 0)[0])} not covered")
        return cls(out)

    def renumbered(self) -> Partitioning:
        """Community ids ``0..k-1`` in order of first appearance by vertex id."""
        _, first, inv = np.unique(self.community_of, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first, kind="stable")] = np.arange(len(first))
        return Partitioning(rank[inv.reshape(-1)])


def write_partition(graph: Graph, p: Partitioning, out: IO[str]) -> None:
    """One ``external_id community_id`` line per vertex, communities renumbered."""
    ren = p.renumbered().community_of
    lines = [f"{ext} {c}\n" for ext, c in zip(graph.original_ids.tolist(), ren.tolist())]
    out.write("".join(lines))


def read_partition(graph: Graph, source: IO[str]) -> Partitioning:
    """Parse a partition file against ``graph``'s external ids.

    Unknown vertices are ignored; a graph vertex missing from the file is an
    error naming the first one (by internal order).
    """
    lookup = {int(e): i for i, e in enumerate(graph.original_ids.tolist())}
    out = np.full(graph.vertex_count, -1, dtype=np.int64)
    seen = np.zeros(graph.vertex_count, dtype=bool)
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 tokens, got {len(parts)}: {stripped!r}", lineno)
        try:
            ext, comm = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer token in {stripped!r}", lineno) from None
        v = lookup.get(ext)
        if v is None:
            continue
        if seen[v] and out[v] != comm:
            raise ParseError(f"vertex {ext} assigned to two communities", lineno)
        seen[v] = True
        out[v] = comm
    if not seen.all():
        first = int(np.flatnonzero(~seen)[0])
        raise ParseError(
            f"vertex {int(graph.original_ids[first])} missing from partition file "
            f"({int((~seen).sum())} missing in total)"
        )
    return Partitioning(out)

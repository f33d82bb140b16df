"""Seeded synthetic graphs for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graph import Graph


def erdos_renyi(n: int, p: float, seed: int) -> np.ndarray:
    """G(n, p) edge pairs ``(u, v)`` with ``u < v``."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return np.column_stack([iu[keep], ju[keep]]).astype(np.int64)


def rmat(
    scale: int,
    edge_factor: int = 16,
    seed: int = 0,
    probs: tuple[float, float, float, float] = (0.57, 0.19, 0.19, 0.05),
) -> np.ndarray:
    """R-MAT edge pairs on ``2**scale`` ids; duplicates and loops left in.

    Ids are scrambled with a seeded permutation so high degree does not
    correlate with low id.
    """
    rng = np.random.default_rng(seed)
    m = edge_factor << scale
    a, b, c, _ = probs
    src = np.zeros(m, dtype=np.int64)
    dst = np.zeros(m, dtype=np.int64)
    for bit in range(scale):
        r = rng.random(m)
        right = (r >= a) & (r < a + b) | (r >= a + b + c)
        down = r >= a + b
        src |= down.astype(np.int64) << bit
        dst |= right.astype(np.int64) << bit
    perm = rng.permutation(1 << scale)
    return np.column_stack([perm[src], perm[dst]])


def planted_partition(
    sizes: list[int], p_in: float, p_out: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Edges of a planted-partition graph and the planted community of each vertex."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = len(labels)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    return np.column_stack([iu[keep], ju[keep]]).astype(np.int64), labels


def clique_chain(k: int, links: int) -> Graph:
    """``links`` k-cliques in a row, consecutive cliques sharing one vertex."""
    edges = []
    base = 0
    for _ in range(links):
        members = range(base, base + k)
        edges += [(u, v) for u in members for v in members if u < v]
        base += k - 1
    return Graph.from_edges(edges)


def write_edges(pairs: np.ndarray, out) -> None:
    np.savetxt(out, np.asarray(pairs, dtype=np.int64), fmt="%d")

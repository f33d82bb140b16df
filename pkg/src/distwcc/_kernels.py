"""Numba kernels run inside worker threads.

Every kernel takes the ``vertices`` a worker owns and only writes rows that
belong to them, so workers can run them concurrently without locks. All of
them release the GIL.
"""

import numpy as np
from numba import njit

jit = njit(cache=True, nogil=True)


@jit
def stable_order(keys, n):
    """Stable counting-sort permutation of ``keys`` drawn from ``0..n-1``."""
    counts = np.zeros(n + 1, np.int64)
    for k in keys:
        counts[k + 1] += 1
    for i in range(n):
        counts[i + 1] += counts[i]
    out = np.empty(len(keys), np.int64)
    for i in range(len(keys)):
        k = keys[i]
        out[counts[k]] = i
        counts[k] += 1
    return out


@jit
def fan_out(vertices, indptr, indices, mask):
    """One message per adjacency entry of ``vertices`` where ``mask`` holds.

    Returns ``(dst, src, pos)``; ``pos`` is the adjacency position of the
    destination in the sender's row.
    """
    total = 0
    for v in vertices:
        for p in range(indptr[v], indptr[v + 1]):
            if mask[p]:
                total += 1
    dst = np.empty(total, np.int64)
    src = np.empty(total, np.int64)
    pos = np.empty(total, np.int64)
    k = 0
    for v in vertices:
        for p in range(indptr[v], indptr[v + 1]):
            if mask[p]:
                dst[k] = indices[p]
                src[k] = v
                pos[k] = p
                k += 1
    return dst, src, pos


@jit
def mark_higher(vertices, indptr, indices, deg, nbr_deg, allowed, is_hdn):
    """Flag neighbours ranked above each vertex by ``(degree, id)``."""
    for v in vertices:
        dv = deg[v]
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            du = nbr_deg[p]
            is_hdn[p] = allowed[p] and (du > dv or (du == dv and u > v))


@jit
def phase_sends(vertices, indptr, indices, is_hdn, phase, n_phases):
    """Destinations for ``phase``: a contiguous near-equal slice of each hdn list.

    Returns ``(dst, src, pos)`` like :func:`fan_out`.
    """
    total = 0
    for v in vertices:
        k = 0
        for p in range(indptr[v], indptr[v + 1]):
            if is_hdn[p]:
                k += 1
        q, r = k // n_phases, k % n_phases
        total += q + (1 if phase < r else 0)
    dst = np.empty(total, np.int64)
    src = np.empty(total, np.int64)
    pos = np.empty(total, np.int64)
    j = 0
    for v in vertices:
        k = 0
        for p in range(indptr[v], indptr[v + 1]):
            if is_hdn[p]:
                k += 1
        q, r = k // n_phases, k % n_phases
        lo = phase * q + min(phase, r)
        hi = lo + q + (1 if phase < r else 0)
        i = 0
        for p in range(indptr[v], indptr[v + 1]):
            if is_hdn[p]:
                if lo <= i < hi:
                    dst[j] = indices[p]
                    src[j] = v
                    pos[j] = p
                    j += 1
                i += 1
    return dst, src, pos


@jit
def intersect_inbox(indptr, indices, allowed, dst, buffer, start, stop, marker):
    """Count ``|payload_i ∩ allowed-adjacency(dst_i)|`` per message.

    ``dst`` must be sorted; ``marker`` is worker-private scratch of length
    ``n`` filled with -1.
    """
    m = len(dst)
    counts = np.zeros(m, np.int64)
    current = -1
    for i in range(m):
        v = dst[i]
        if v != current:
            current = v
            for p in range(indptr[v], indptr[v + 1]):
                if allowed[p]:
                    marker[indices[p]] = v
        c = 0
        for q in range(start[i], stop[i]):
            if marker[buffer[q]] == v:
                c += 1
        counts[i] = c
    return counts


@jit
def row_sums(vertices, indptr, values, out):
    for v in vertices:
        s = 0
        for p in range(indptr[v], indptr[v + 1]):
            s += values[p]
        out[v] = s


@jit
def row_count_positive(vertices, indptr, values, out):
    for v in vertices:
        c = 0
        for p in range(indptr[v], indptr[v + 1]):
            if values[p] > 0:
                c += 1
        out[v] = c


@jit
def row_count_true(vertices, indptr, mask, out):
    for v in vertices:
        c = 0
        for p in range(indptr[v], indptr[v + 1]):
            if mask[p]:
                c += 1
        out[v] = c


@jit
def gather_rows(vertices, indptr, indices, mask):
    """Pack masked adjacency of ``vertices`` into a buffer with per-vertex bounds."""
    total = 0
    for v in vertices:
        for p in range(indptr[v], indptr[v + 1]):
            if mask[p]:
                total += 1
    buf = np.empty(total, np.int64)
    start = np.empty(len(vertices), np.int64)
    stop = np.empty(len(vertices), np.int64)
    k = 0
    for i in range(len(vertices)):
        v = vertices[i]
        start[i] = k
        for p in range(indptr[v], indptr[v + 1]):
            if mask[p]:
                buf[k] = indices[p]
                k += 1
        stop[i] = k
    return buf, start, stop


@jit
def exact_partials(vertices, values):
    """Shewchuk partials of ``values[vertices]``: their exact sum, losslessly."""
    partials = np.empty(256, np.float64)
    k = 0
    for v in vertices:
        x = values[v]
        i = 0
        for j in range(k):
            y = partials[j]
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo != 0.0:
                partials[i] = lo
                i += 1
            x = hi
        partials[i] = x
        k = i + 1
    return partials[:k].copy()


@jit
def vertex_wcc(vertices, t_in, t_all, deg, same, size_of, community, out):
    """Per-vertex WCC on a triangle-filtered graph.

    Every neighbour there is a triangle partner, so the partners outside the
    community are exactly ``deg - same``.
    """
    for v in vertices:
        if t_all[v] == 0:
            out[v] = 0.0
            continue
        denom = size_of[community[v]] - 1 + deg[v] - same[v]
        out[v] = (t_in[v] / t_all[v]) * (deg[v] / denom)

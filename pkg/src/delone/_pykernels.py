"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built or when ``DELONE_PURE_PYTHON`` is set.
Neighbour queries are vectorised over all queries at once by walking the
cell stencil; the MIS search uses Python integers as bitsets.
"""

from __future__ import annotations

import itertools

import numpy as np


def _stencil_pairs(pts, cell_start, shape, lo, h, queries, reach):
    """All (query, point) pairs whose cells lie within ``reach`` cells."""
    dim = pts.shape[1]
    shape = np.asarray(shape, dtype=np.int64)
    cq = np.floor((queries - lo) / h).astype(np.int64)
    strides = np.ones(dim, dtype=np.int64)
    for k in range(dim - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    # no offset needs to reach past the far side of the grid
    outside = np.maximum(np.maximum(-cq, cq - shape + 1), 0).max(axis=0)
    reach = np.minimum(reach, shape - 1 + outside)
    occupied = np.nonzero(np.diff(cell_start))[0]
    if np.prod(2 * reach + 1, dtype=float) > len(occupied):
        return _cell_pairs(cell_start, shape, strides, occupied, cq, reach)
    qs, ps = [], []
    for off in itertools.product(*(range(-r, r + 1) for r in reach)):
        c = cq + np.asarray(off, dtype=np.int64)
        ok = np.all((c >= 0) & (c < shape), axis=1)
        if not ok.any():
            continue
        qi = np.nonzero(ok)[0]
        lin = c[ok] @ strides
        start = cell_start[lin]
        counts = cell_start[lin + 1] - start
        if counts.sum() == 0:
            continue
        rep_q = np.repeat(qi, counts)
        first = np.repeat(start - np.cumsum(counts) + counts, counts)
        rep_p = first + np.arange(counts.sum())
        qs.append(rep_q)
        ps.append(rep_p)
    if not qs:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(qs), np.concatenate(ps)


def _cell_pairs(cell_start, shape, strides, occupied, cq, reach):
    """Same pairs as the stencil walk, looping over occupied cells instead."""
    coords = (occupied[:, None] // strides) % shape
    qs, ps = [], []
    for lin, c in zip(occupied, coords):
        qi = np.nonzero(np.all(np.abs(cq - c) <= reach, axis=1))[0]
        if qi.size:
            members = np.arange(cell_start[lin], cell_start[lin + 1])
            qs.append(np.repeat(qi, members.size))
            ps.append(np.tile(members, qi.size))
    if not qs:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(qs), np.concatenate(ps)


def ball_query(pts, cell_start, shape, lo, h, centers, radius):
    """Indices of points within ``radius`` (closed) of each center, as CSR."""
    pts = np.asarray(pts, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    nq = centers.shape[0]
    offsets = np.zeros(nq + 1, dtype=np.int64)
    if nq == 0 or pts.shape[0] == 0:
        return offsets, np.zeros(0, dtype=np.int64)
    # cells partially covered on each side need one extra ring
    reach = int(np.ceil(radius / h)) + 1
    q, p = _stencil_pairs(pts, cell_start, shape, lo, h, centers, reach)
    d2 = np.sum((pts[p] - centers[q]) ** 2, axis=1)
    keep = d2 <= radius * radius
    q, p = q[keep], p[keep]
    order = np.argsort(q, kind="stable")
    q, p = q[order], p[order]
    np.add.at(offsets, q + 1, 1)
    return np.cumsum(offsets), p


def nn_query(pts, cell_start, shape, lo, h, queries, exclude):
    """Nearest indexed point for every query row (see the compiled twin)."""
    pts = np.asarray(pts, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    exclude = np.asarray(exclude, dtype=np.int64)
    nq = queries.shape[0]
    dist = np.full(nq, np.inf)
    idx = np.full(nq, -1, dtype=np.int64)
    if nq == 0 or pts.shape[0] == 0:
        return dist, idx
    extent = float(np.max(np.asarray(shape) * h))
    todo = np.arange(nq)
    radius = h
    while todo.size:
        offsets, found = ball_query(pts, cell_start, shape, lo, h, queries[todo], radius)
        counts = np.diff(offsets)
        owner = np.repeat(np.arange(todo.size), counts)
        d = np.sqrt(np.sum((pts[found] - queries[todo][owner]) ** 2, axis=1))
        d[found == exclude[todo][owner]] = np.inf
        best = np.full(todo.size, np.inf)
        np.minimum.at(best, owner, d)
        settled = best < np.inf
        if settled.any():
            # ties resolve to the smallest index
            hit = (d == best[owner]) & np.isfinite(d)
            first = np.full(todo.size, np.iinfo(np.int64).max, dtype=np.int64)
            np.minimum.at(first, owner[hit], found[hit])
            dist[todo[settled]] = best[settled]
            idx[todo[settled]] = first[settled]
        if radius > 2.0 * extent + 2.0 * float(np.max(np.abs(queries[todo] - lo))):
            break
        todo = todo[~settled]
        radius *= 2.0
    return dist, idx


def _search(cand, adj, size, best):
    changed = True
    while changed:
        changed = False
        scan = cand
        while scan:
            low = scan & -scan
            v = low.bit_length() - 1
            scan ^= low
            if not cand & low:
                continue
            if bin(adj[v] & cand).count("1") <= 1:
                size += 1
                cand &= ~(low | adj[v])
                scan &= cand
                changed = True
    if cand == 0:
        return max(best, size)
    if size + _cover_bound(cand, adj) <= best:
        return best
    bestv, bestd = -1, -1
    scan = cand
    while scan:
        low = scan & -scan
        v = low.bit_length() - 1
        scan ^= low
        d = bin(adj[v] & cand).count("1")
        if d > bestd:
            bestv, bestd = v, d
    bit = 1 << bestv
    best = _search(cand & ~bit & ~adj[bestv], adj, size + 1, best)
    return _search(cand & ~bit, adj, size, best)


def _cover_bound(cand, adj):
    count = 0
    while cand:
        low = cand & -cand
        v = low.bit_length() - 1
        cand ^= low
        grow = cand & adj[v]
        while grow:
            ulow = grow & -grow
            u = ulow.bit_length() - 1
            cand &= ~ulow
            grow &= adj[u]
        count += 1
    return count


def mis_size(adj, lower=0):
    """Size of a maximum independent set; ``adj[v]`` is a neighbour bitmask."""
    adj = [int(a) for a in adj]
    n = len(adj)
    if n > 64:
        raise ValueError("MIS kernel supports at most 64 vertices")
    if n == 0:
        return 0
    return _search((1 << n) - 1, adj, 0, int(lower))

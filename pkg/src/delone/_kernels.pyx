# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: grid-index neighbour queries and exact maximum independent set.

Every function here has a drop-in twin in ``_pykernels`` with the same
signature and the same results (neighbour lists may come back in a different
order).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt, INFINITY
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

DEF MAXDIM = 16


cdef extern from *:
    """
    static inline int dl_popcount(unsigned long long x) { return __builtin_popcountll(x); }
    static inline int dl_ctz(unsigned long long x) { return __builtin_ctzll(x); }
    """
    int dl_popcount(unsigned long long x) nogil
    int dl_ctz(unsigned long long x) nogil


cdef inline int64_t _cell(double v, double lo, double h, int64_t n) nogil:
    cdef int64_t c = <int64_t>floor((v - lo) / h)
    if c < 0:
        return 0
    if c >= n:
        return n - 1
    return c


def nn_query(const double[:, ::1] pts, const int64_t[::1] cell_start,
             const int64_t[::1] shape, const double[::1] lo, double h,
             const double[:, ::1] queries, const int64_t[::1] exclude):
    """Nearest indexed point for every query row.

    ``exclude[i]`` is an index into ``pts`` that query ``i`` must skip
    (``-1`` for none). Returns ``(dist, idx)``; ``idx`` is -1 when nothing
    qualifies.
    """
    cdef Py_ssize_t nq = queries.shape[0]
    cdef int dim = pts.shape[1]
    cdef Py_ssize_t i, p, k
    cdef int64_t c[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef int64_t kmin[MAXDIM]
    cdef int64_t kmax[MAXDIM]
    cdef int64_t strides[MAXDIM]
    cdef int64_t r, lin, cheb, off, maxr
    cdef double best, d2, diff
    cdef int64_t besti
    cdef bint whole, done
    if dim > MAXDIM:
        raise ValueError("dimension too large for compiled kernel")

    dist_arr = np.full(nq, np.inf, dtype=np.float64)
    idx_arr = np.full(nq, -1, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef int64_t[::1] idx = idx_arr

    strides[dim - 1] = 1
    for k in range(dim - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    maxr = 0
    for k in range(dim):
        if shape[k] > maxr:
            maxr = shape[k]

    with nogil:
        for i in range(nq):
            for k in range(dim):
                c[k] = _cell(queries[i, k], lo[k], h, shape[k])
            best = INFINITY
            besti = -1
            r = 0
            while r <= maxr:
                whole = True
                for k in range(dim):
                    kmin[k] = c[k] - r
                    kmax[k] = c[k] + r
                    if kmin[k] < 0:
                        kmin[k] = 0
                    else:
                        whole = False
                    if kmax[k] > shape[k] - 1:
                        kmax[k] = shape[k] - 1
                    else:
                        whole = False
                    cur[k] = kmin[k]
                done = False
                while not done:
                    cheb = 0
                    lin = 0
                    for k in range(dim):
                        off = cur[k] - c[k]
                        if off < 0:
                            off = -off
                        if off > cheb:
                            cheb = off
                        lin += cur[k] * strides[k]
                    if cheb == r:
                        for p in range(cell_start[lin], cell_start[lin + 1]):
                            if p == exclude[i]:
                                continue
                            d2 = 0.0
                            for k in range(dim):
                                diff = pts[p, k] - queries[i, k]
                                d2 += diff * diff
                            if d2 < best:
                                best = d2
                                besti = p
                    # odometer
                    k = dim - 1
                    while k >= 0:
                        cur[k] += 1
                        if cur[k] <= kmax[k]:
                            break
                        cur[k] = kmin[k]
                        k -= 1
                    if k < 0:
                        done = True
                if besti >= 0 and sqrt(best) <= r * h:
                    break
                if whole:
                    break
                r += 1
            if besti >= 0:
                dist[i] = sqrt(best)
                idx[i] = besti
    return dist_arr, idx_arr


def ball_query(const double[:, ::1] pts, const int64_t[::1] cell_start,
               const int64_t[::1] shape, const double[::1] lo, double h,
               const double[:, ::1] centers, double radius):
    """Indices of points within ``radius`` (closed) of each center, as CSR."""
    cdef Py_ssize_t nq = centers.shape[0]
    cdef int dim = pts.shape[1]
    cdef Py_ssize_t i, p, k, fill
    cdef int64_t kmin[MAXDIM]
    cdef int64_t kmax[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef int64_t strides[MAXDIM]
    cdef int64_t lin
    cdef double r2 = radius * radius
    cdef double d2, diff
    cdef bint done, empty
    cdef int pass_no
    if dim > MAXDIM:
        raise ValueError("dimension too large for compiled kernel")

    strides[dim - 1] = 1
    for k in range(dim - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]

    offsets_arr = np.zeros(nq + 1, dtype=np.int64)
    cdef int64_t[::1] offsets = offsets_arr
    out_arr = np.zeros(0, dtype=np.int64)
    cdef int64_t[::1] out = out_arr

    for pass_no in range(2):
        if pass_no == 1:
            for i in range(nq):
                offsets[i + 1] += offsets[i]
            out_arr = np.empty(offsets[nq], dtype=np.int64)
            out = out_arr
        with nogil:
            for i in range(nq):
                fill = offsets[i] if pass_no == 1 else 0
                empty = False
                for k in range(dim):
                    kmin[k] = <int64_t>floor((centers[i, k] - radius - lo[k]) / h)
                    kmax[k] = <int64_t>floor((centers[i, k] + radius - lo[k]) / h)
                    if kmin[k] < 0:
                        kmin[k] = 0
                    if kmax[k] > shape[k] - 1:
                        kmax[k] = shape[k] - 1
                    if kmin[k] > kmax[k]:
                        empty = True
                    cur[k] = kmin[k]
                if empty:
                    continue
                done = False
                while not done:
                    lin = 0
                    for k in range(dim):
                        lin += cur[k] * strides[k]
                    for p in range(cell_start[lin], cell_start[lin + 1]):
                        d2 = 0.0
                        for k in range(dim):
                            diff = pts[p, k] - centers[i, k]
                            d2 += diff * diff
                        if d2 <= r2:
                            if pass_no == 0:
                                offsets[i + 1] += 1
                            else:
                                out[fill] = p
                                fill += 1
                    k = dim - 1
                    while k >= 0:
                        cur[k] += 1
                        if cur[k] <= kmax[k]:
                            break
                        cur[k] = kmin[k]
                        k -= 1
                    if k < 0:
                        done = True
    return offsets_arr, out_arr


cdef int _cover_bound(uint64_t cand, const uint64_t* adj) nogil:
    # Greedy clique cover of the candidate set; its size bounds any independent set.
    cdef int count = 0
    cdef int v, u
    cdef uint64_t grow
    while cand:
        v = dl_ctz(cand)
        cand &= ~(<uint64_t>1 << v)
        grow = cand & adj[v]
        while grow:
            u = dl_ctz(grow)
            cand &= ~(<uint64_t>1 << u)
            grow &= adj[u]
        count += 1
    return count


cdef void _search(uint64_t cand, const uint64_t* adj, int size, int* best) nogil:
    cdef bint changed = True
    cdef uint64_t scan, bit
    cdef int v, d, bestv, bestd
    while changed:
        changed = False
        scan = cand
        while scan:
            v = dl_ctz(scan)
            bit = <uint64_t>1 << v
            scan &= ~bit
            if not (cand & bit):
                continue
            d = dl_popcount(adj[v] & cand)
            if d <= 1:
                size += 1
                cand &= ~(bit | adj[v])
                scan &= cand
                changed = True
    if cand == 0:
        if size > best[0]:
            best[0] = size
        return
    if size + _cover_bound(cand, adj) <= best[0]:
        return
    bestv = -1
    bestd = -1
    scan = cand
    while scan:
        v = dl_ctz(scan)
        scan &= scan - 1
        d = dl_popcount(adj[v] & cand)
        if d > bestd:
            bestd = d
            bestv = v
    bit = <uint64_t>1 << bestv
    _search(cand & ~bit & ~adj[bestv], adj, size + 1, best)
    _search(cand & ~bit, adj, size, best)


def mis_size(const uint64_t[::1] adj, int lower=0):
    """Size of a maximum independent set of a graph on at most 64 vertices.

    ``adj[v]`` is the neighbour bitmask of vertex ``v`` (no self loops).
    ``lower`` is a known achievable size used to seed the bound.
    """
    cdef Py_ssize_t n = adj.shape[0]
    cdef uint64_t cand
    cdef int best = lower
    if n > 64:
        raise ValueError("compiled MIS supports at most 64 vertices")
    if n == 0:
        return 0
    cand = (<uint64_t>-1) if n == 64 else ((<uint64_t>1 << n) - 1)
    with nogil:
        _search(cand, &adj[0], 0, &best)
    return best

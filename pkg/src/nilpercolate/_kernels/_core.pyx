# distutils: language = c++
# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: packed-coordinate Cayley-ball BFS and union-find.

The BFS packs up to 4 signed 16-bit coordinates into one uint64 key and uses
a C++ hash map for dedup; it only serves step <= 2 specs (closed-form
quadratic product).  Callers fall back to the python lane when coordinates
leave the packable range (OverflowError).
"""

import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference as deref, preincrement as inc
from libcpp.unordered_map cimport unordered_map
from libcpp.utility cimport pair
from libcpp.vector cimport vector
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline uint64_t pack4(int64_t* c, int d) except? 0xFFFFFFFFFFFFFFFF:
    cdef uint64_t key = 0
    cdef int i
    cdef int64_t v
    for i in range(d):
        v = c[i]
        if v < -32768 or v > 32767:
            raise OverflowError("coordinate outside packable range")
        key |= (<uint64_t> (v + 32768)) << (16 * i)
    return key


def ball_bfs_packed(cnp.int64_t[:, :] gens, cnp.int64_t[:, :] terms,
                    int d, int r, long cap, bint materialize):
    """BFS ball enumeration for a step <= 2 lattice.

    gens: nonidentity generators, rows of d coords.
    terms: rows (i, k, j, coef): product z = x + g with z_i += coef*x_k*g_j.
    Returns (counts, points, dists); points/dists are None unless materialized.
    """
    if d > 4:
        raise OverflowError("packed BFS supports dim <= 4")
    cdef int ngen = gens.shape[0]
    cdef int nterms = terms.shape[0]
    cdef unordered_map[uint64_t, int] dist
    cdef vector[uint64_t] frontier, nxt
    cdef int64_t x[4]
    cdef int64_t z[4]
    cdef uint64_t key, zkey
    cdef int i, g, t, level
    cdef long total = 1
    cdef list counts = [1]

    for i in range(d):
        x[i] = 0
    key = pack4(x, d)
    dist[key] = 0
    frontier.push_back(key)

    for level in range(1, r + 1):
        nxt.clear()
        for key in frontier:
            for i in range(d):
                x[i] = (<int64_t> ((key >> (16 * i)) & 0xFFFF)) - 32768
            for g in range(ngen):
                for i in range(d):
                    z[i] = x[i] + gens[g, i]
                for t in range(nterms):
                    z[terms[t, 0]] += terms[t, 3] * x[terms[t, 1]] * gens[g, terms[t, 2]]
                zkey = pack4(z, d)
                if dist.find(zkey) == dist.end():
                    dist[zkey] = level
                    nxt.push_back(zkey)
                    total += 1
                    if total > cap:
                        raise MemoryError("ball enumeration cap exceeded")
        counts.append(total)
        frontier.swap(nxt)
        if frontier.size() == 0:
            counts.extend([total] * (r - level))
            break

    if not materialize:
        return counts, None, None

    cdef cnp.ndarray[cnp.int64_t, ndim=2] pts = np.empty((total, d), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ds = np.empty(total, dtype=np.int64)
    cdef long row = 0
    cdef unordered_map[uint64_t, int].iterator it = dist.begin()
    cdef pair[uint64_t, int] kv
    while it != dist.end():
        kv = deref(it)
        key = kv.first
        for i in range(d):
            pts[row, i] = (<int64_t> ((key >> (16 * i)) & 0xFFFF)) - 32768
        ds[row] = kv.second
        row += 1
        inc(it)
    return counts, pts, ds


def components(long n, cnp.int64_t[:] u, cnp.int64_t[:] v):
    """Union-find component labels (0..k-1) for edges (u, v) on n vertices."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent = np.arange(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] size = np.ones(n, dtype=np.int64)
    cdef cnp.int64_t[:] par = parent
    cdef cnp.int64_t[:] sz = size
    cdef long m = u.shape[0]
    cdef long e, a, b, root, nxt

    for e in range(m):
        a = u[e]
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        b = v[e]
        while par[b] != b:
            par[b] = par[par[b]]
            b = par[b]
        if a == b:
            continue
        if sz[a] < sz[b]:
            a, b = b, a
        par[b] = a
        sz[a] += sz[b]

    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] lab = labels
    cdef long k = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] remap = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[:] rm = remap
    for e in range(n):
        a = e
        while par[a] != a:
            par[a] = par[par[a]]
            a = par[a]
        if rm[a] < 0:
            rm[a] = k
            k += 1
        lab[e] = rm[a]
    return labels

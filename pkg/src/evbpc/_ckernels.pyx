# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shortest-path kernels; same contracts and tie-breaking as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline bint _less(double ka, long na, double kb, long nb) nogil:
    return ka < kb or (ka == kb and na < nb)


cdef inline void _push(double[::1] hk, long[::1] hn, long *size, double key, long node) nogil:
    cdef long i = size[0]
    cdef long parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if _less(key, node, hk[parent], hn[parent]):
            hk[i] = hk[parent]
            hn[i] = hn[parent]
            i = parent
        else:
            break
    hk[i] = key
    hn[i] = node


cdef inline void _pop(double[::1] hk, long[::1] hn, long *size, double *key, long *node) nogil:
    cdef long n, i, child
    cdef double lk
    cdef long ln
    key[0] = hk[0]
    node[0] = hn[0]
    size[0] -= 1
    n = size[0]
    if n == 0:
        return
    lk = hk[n]
    ln = hn[n]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _less(hk[child + 1], hn[child + 1], hk[child], hn[child]):
            child += 1
        if _less(hk[child], hn[child], lk, ln):
            hk[i] = hk[child]
            hn[i] = hn[child]
            i = child
        else:
            break
    hk[i] = lk
    hn[i] = ln


cdef long _run(const long[::1] ip, const long[::1] hd, const long[::1] aid, const double[::1] c,
               double[::1] dist, long[::1] pred, char[::1] done, long[::1] order,
               double[::1] hk, long[::1] hn, long size) nogil:
    cdef long n_done = 0
    cdef double d, nd
    cdef long u, w, k, a
    while size > 0:
        _pop(hk, hn, &size, &d, &u)
        if done[u]:
            continue
        done[u] = 1
        order[n_done] = u
        n_done += 1
        for k in range(ip[u], ip[u + 1]):
            w = hd[k]
            if done[w]:
                continue
            a = aid[k]
            nd = d + c[a]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = a
                _push(hk, hn, &size, nd, w)
    return n_done


def dijkstra(indptr, heads, arc_ids, cost, sources, source_dist):
    cdef const long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long[::1] hd = np.ascontiguousarray(heads, dtype=np.int64)
    cdef const long[::1] aid = np.ascontiguousarray(arc_ids, dtype=np.int64)
    cdef const double[::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef long[::1] src = np.ascontiguousarray(sources, dtype=np.int64)
    cdef double[::1] sd = np.ascontiguousarray(source_dist, dtype=np.float64)
    cdef long n = ip.shape[0] - 1
    cdef long cap = hd.shape[0] + src.shape[0] + 1
    dist_a = np.full(n, np.inf)
    pred_a = np.full(n, -1, dtype=np.int64)
    order_a = np.empty(n, dtype=np.int64)
    cdef double[::1] dist = dist_a
    cdef long[::1] pred = pred_a
    cdef long[::1] order = order_a
    cdef char[::1] done = np.zeros(n, dtype=np.int8)
    cdef double[::1] hk = np.empty(cap)
    cdef long[::1] hn = np.empty(cap, dtype=np.int64)
    cdef long size = 0
    cdef long i, s
    for i in range(src.shape[0]):
        s = src[i]
        if sd[i] < dist[s]:
            dist[s] = sd[i]
            _push(hk, hn, &size, sd[i], s)
    cdef long n_done
    with nogil:
        n_done = _run(ip, hd, aid, c, dist, pred, done, order, hk, hn, size)
    return dist_a, pred_a, order_a[:n_done].copy()


def aon_assign(indptr, heads, arc_ids, cost, arc_tail, origins, dest_ptr, dest_nodes, demand):
    cdef const long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long[::1] hd = np.ascontiguousarray(heads, dtype=np.int64)
    cdef const long[::1] aid = np.ascontiguousarray(arc_ids, dtype=np.int64)
    cdef const double[::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef const long[::1] tails = np.ascontiguousarray(arc_tail, dtype=np.int64)
    cdef const long[::1] orig = np.ascontiguousarray(origins, dtype=np.int64)
    cdef const long[::1] dptr = np.ascontiguousarray(dest_ptr, dtype=np.int64)
    cdef const long[::1] dnodes = np.ascontiguousarray(dest_nodes, dtype=np.int64)
    cdef const double[:, ::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    cdef long n = ip.shape[0] - 1
    cdef long n_arcs = c.shape[0]
    cdef long n_dest = dem.shape[1]
    cdef long cap = hd.shape[0] + 2
    flow_a = np.zeros(n_arcs)
    odc_a = np.full((dem.shape[0], n_dest), np.inf)
    cdef double[::1] flow = flow_a
    cdef double[:, ::1] odc = odc_a
    cdef double[::1] dist = np.empty(n)
    cdef long[::1] pred = np.empty(n, dtype=np.int64)
    cdef long[::1] order = np.empty(n, dtype=np.int64)
    cdef char[::1] done = np.empty(n, dtype=np.int8)
    cdef double[::1] load = np.empty(n)
    cdef double[::1] hk = np.empty(cap)
    cdef long[::1] hn = np.empty(cap, dtype=np.int64)
    cdef long o, j, k, u, a, best, size, n_done, idx
    cdef double bestd
    cdef bint any_demand
    with nogil:
        for o in range(orig.shape[0]):
            any_demand = False
            for j in range(n_dest):
                if dem[o, j] > 0:
                    any_demand = True
                    break
            if not any_demand:
                continue
            for u in range(n):
                dist[u] = INFINITY
                pred[u] = -1
                done[u] = 0
                load[u] = 0.0
            size = 0
            dist[orig[o]] = 0.0
            _push(hk, hn, &size, 0.0, orig[o])
            n_done = _run(ip, hd, aid, c, dist, pred, done, order, hk, hn, size)
            for j in range(n_dest):
                if not dem[o, j] > 0:
                    continue
                best = -1
                bestd = INFINITY
                for k in range(dptr[j], dptr[j + 1]):
                    u = dnodes[k]
                    if dist[u] < bestd:
                        best = u
                        bestd = dist[u]
                if best < 0:
                    continue
                odc[o, j] = bestd
                load[best] += dem[o, j]
            for idx in range(n_done - 1, -1, -1):
                u = order[idx]
                a = pred[u]
                if a >= 0 and load[u] != 0.0:
                    flow[a] += load[u]
                    load[tails[a]] += load[u]
    return flow_a, odc_a

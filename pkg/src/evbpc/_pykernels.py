"""Pure-Python shortest-path kernels (reference and fallback for ``_ckernels``).

Graphs are CSR arrays: out-arcs of node ``u`` are positions
``indptr[u]:indptr[u+1]`` of ``heads`` / ``arc_ids``; ``cost`` is indexed by
arc id. Heap entries are ``(distance, node)`` so ties settle by node index.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

BACKEND = "python"


def dijkstra(indptr, heads, arc_ids, cost, sources, source_dist):
    """Multi-source label setting; returns ``(dist, pred_arc, settle_order)``."""
    n = len(indptr) - 1
    ip = indptr.tolist()
    hd = heads.tolist()
    aid = arc_ids.tolist()
    c = cost.tolist()
    dist = [math.inf] * n
    pred = [-1] * n
    done = bytearray(n)
    heap = []
    for s, d in zip(np.asarray(sources).tolist(), np.asarray(source_dist, dtype=float).tolist()):
        if d < dist[s]:
            dist[s] = d
            heap.append((d, s))
    heapq.heapify(heap)
    order = []
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        d, u = pop(heap)
        if done[u]:
            continue
        done[u] = 1
        order.append(u)
        for k in range(ip[u], ip[u + 1]):
            w = hd[k]
            if done[w]:
                continue
            a = aid[k]
            nd = d + c[a]
            if nd < dist[w]:
                dist[w] = nd
                pred[w] = a
                push(heap, (nd, w))
    return (np.array(dist, dtype=float), np.array(pred, dtype=np.int64),
            np.array(order, dtype=np.int64))


def aon_assign(indptr, heads, arc_ids, cost, arc_tail, origins, dest_ptr, dest_nodes, demand):
    """All-or-nothing loading of ``demand[o, j]`` from ``origins[o]`` to zone ``j``.

    Zone ``j``'s terminal candidates are ``dest_nodes[dest_ptr[j]:dest_ptr[j+1]]``
    (ascending); the cheapest one wins, lowest index on ties. Returns arc flows
    and the matrix of OD shortest costs (``inf`` where unreachable or no demand).
    """
    n = len(indptr) - 1
    n_arcs = len(cost)
    flow = np.zeros(n_arcs)
    od_cost = np.full(demand.shape, math.inf)
    tails = arc_tail.tolist()
    dptr = dest_ptr.tolist()
    dnodes = dest_nodes.tolist()
    for o, src in enumerate(np.asarray(origins).tolist()):
        row = demand[o]
        if not (row > 0).any():
            continue
        dist, pred, order = dijkstra(indptr, heads, arc_ids, cost, [src], [0.0])
        load = [0.0] * n
        dl = dist.tolist()
        for j in np.flatnonzero(row > 0).tolist():
            best, bestd = -1, math.inf
            for k in range(dptr[j], dptr[j + 1]):
                v = dnodes[k]
                if dl[v] < bestd:
                    best, bestd = v, dl[v]
            if best < 0:
                continue
            od_cost[o, j] = bestd
            load[best] += row[j]
        pr = pred.tolist()
        fl = flow
        for u in reversed(order.tolist()):
            a = pr[u]
            if a >= 0 and load[u] != 0.0:
                fl[a] += load[u]
                load[tails[a]] += load[u]
    return flow, od_cost

"""Independent reference solvers used only by the test suite."""
from __future__ import annotations

import itertools

import numpy as np


def lp_vertex_enumeration(A, b, senses, c, lo, hi, box=(1e4, 1e5)):
    """Minimize ``c x`` by enumerating basic solutions of the inequality system.

    Infinite bounds are replaced by an artificial box; solving with two box
    sizes tells bounded optima apart from unbounded ones. Returns
    ``("optimal", value)``, ``("infeasible", None)`` or ``("unbounded", None)``.
    """
    vals = []
    for R in box:
        vals.append(_enumerate(np.asarray(A, float), np.asarray(b, float), senses, np.asarray(c, float),
                               np.where(np.isfinite(lo), lo, -R), np.where(np.isfinite(hi), hi, R)))
    if vals[0] is None:
        return "infeasible", None
    if abs(vals[0] - vals[1]) > 1e-6 * (1 + abs(vals[0])):
        return "unbounded", None
    return "optimal", vals[0]


def _enumerate(A, b, senses, c, lo, hi):
    m, n = A.shape
    G, h = [], []
    for i in range(m):
        if senses[i] in ("<=", "="):
            G.append(A[i]); h.append(b[i])
        if senses[i] in (">=", "="):
            G.append(-A[i]); h.append(-b[i])
    for j in range(n):
        e = np.zeros(n); e[j] = 1.0
        G.append(e); h.append(hi[j])
        G.append(-e); h.append(-lo[j])
    G = np.array(G); h = np.array(h)
    idx = np.array(list(itertools.combinations(range(len(G)), n)), dtype=int)
    M, r = G[idx], h[idx]
    ok = np.abs(np.linalg.det(M)) > 1e-9
    if not ok.any():
        return None
    sols = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
    feas = (sols @ G.T <= h + 1e-7 * (1 + np.abs(h))).all(axis=1)
    if not feas.any():
        return None
    return float((sols[feas] @ c).min())


def enumerate_walks(g, origin, dest, max_charges, limit=10_000):
    """Every walk from ``(origin, full)`` to a ``(dest, .)`` node with at most ``max_charges`` stops.

    Road stretches between stops are simple paths; longer walks repeat a road
    cycle and are dominated in any master LP. Walks may pass through ``dest``.
    Returns arc tuples.
    """
    src = g.origin_entry[origin]
    exits = set(g.dest_exit.get(dest, np.empty(0, dtype=int)).tolist())
    out = []

    def dfs(u, arcs, seen, stops):
        if u in exits:
            out.append(tuple(arcs))
            if len(out) > limit:
                raise RuntimeError("walk enumeration limit exceeded")
        for k in range(g.indptr[u], g.indptr[u + 1]):
            a = int(g.arc_ids[k])
            w = int(g.heads[k])
            if g.is_road[a]:
                if w in seen:
                    continue
                dfs(w, arcs + [a], seen | {w}, stops)
            elif stops < max_charges:
                dfs(w, arcs + [a], {w}, stops + 1)

    dfs(src, [], {src}, 0)
    return out

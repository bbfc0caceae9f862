"""Label-setting shortest paths on the battery-expanded graph.

Two searches live here. ``shortest_paths_one_to_all`` is plain Dijkstra under
nonnegative arc costs (equilibrium routing). ``layered_walks`` handles pricing,
where charging arcs may carry negative dual costs: the state is extended with a
charge-stop counter, road arcs stay inside a layer and charging arcs move one
layer up, so each layer is again a nonnegative-cost Dijkstra.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .expand import ExpandedGraph, ExpandedPath, make_path

COST_TOL = 1e-9


class NegativeCostError(ValueError):
    pass


class NoEntryError(KeyError):
    pass


@dataclass(frozen=True)
class CostView:
    """Road cost per link and charging cost per candidate per charging-hour."""
    road: np.ndarray
    charge_per_hour: np.ndarray

    def arc_costs(self, g: ExpandedGraph) -> np.ndarray:
        cost = g.arc_costs(self.road, self.charge_per_hour)
        bad = cost < 0
        if bad.any() or not np.isfinite(cost).all():
            a = int(np.flatnonzero(bad | ~np.isfinite(cost))[0])
            raise NegativeCostError(f"arc {a} has invalid cost {cost[a]!r}")
        return cost


@dataclass
class LabelTree:
    graph: ExpandedGraph
    origin: int          # expanded node index
    origin_zone: int
    dist: np.ndarray
    pred: np.ndarray     # arc id into each node, -1 at roots / unreached
    cost: np.ndarray

    def check(self) -> None:
        """Assert the settled-node relaxation invariant."""
        g = self.graph
        d = self.dist
        reached = np.isfinite(d[g.arc_tail])
        slack = d[g.arc_head[reached]] - d[g.arc_tail[reached]] - self.cost[reached]
        assert (slack <= 1e-9 * (1 + np.abs(d[g.arc_head[reached]]))).all()
        assert d[self.origin] == 0.0


def shortest_paths_one_to_all(g: ExpandedGraph, origin: int, cv: CostView | np.ndarray) -> LabelTree:
    """Dijkstra from ``(origin, full)``; ``cv`` is a CostView or a per-arc cost array."""
    if isinstance(cv, CostView):
        cost = cv.arc_costs(g)
    else:
        cost = np.asarray(cv, dtype=float)
        if (cost < 0).any():
            raise NegativeCostError("negative arc cost")
    src = g.origin_entry.get(origin)
    if src is None:
        raise NoEntryError(origin)
    dist, pred, _ = kernels.dijkstra(g.indptr, g.heads, g.arc_ids, cost, [src], [0.0])
    return LabelTree(g, src, origin, dist, pred, cost)


def _best_dest(g: ExpandedGraph, dist: np.ndarray, dest: int) -> int:
    cands = g.dest_exit.get(dest)
    if cands is None or cands.size == 0:
        return -1
    d = dist[cands]
    j = int(np.argmin(d))       # first minimum = lowest node index
    return int(cands[j]) if np.isfinite(d[j]) else -1


def extract_path(tree: LabelTree, dest: int) -> ExpandedPath | None:
    g = tree.graph
    od = (tree.origin_zone, dest)
    if dest == tree.origin_zone:
        return make_path(g, (), od)
    u = _best_dest(g, tree.dist, dest)
    if u < 0:
        return None
    arcs = []
    while u != tree.origin:
        a = int(tree.pred[u])
        if a < 0:
            raise RuntimeError("broken predecessor chain")
        arcs.append(a)
        u = int(g.arc_tail[a])
    return make_path(g, reversed(arcs), od)


@dataclass
class WalkTree:
    """Layer ``c`` labels are walks from the origin using exactly ``c`` charging stops."""
    graph: ExpandedGraph
    origin: int
    origin_zone: int
    dist: list[np.ndarray]
    pred: list[np.ndarray]
    seed_arc: list[np.ndarray]

    def best(self, dest: int) -> tuple[float, ExpandedPath | None]:
        g = self.graph
        od = (self.origin_zone, dest)
        if dest == self.origin_zone:
            return 0.0, make_path(g, (), od)
        best = (np.inf, -1, -1)
        for c, d in enumerate(self.dist):
            u = _best_dest(g, d, dest)
            if u >= 0 and d[u] < best[0] - 1e-12:
                best = (float(d[u]), c, u)
        val, c, u = best
        if c < 0:
            return np.inf, None
        return val, self._trace(c, u, od)

    def per_layer(self, dest: int) -> list[tuple[float, ExpandedPath]]:
        """Cheapest walk to ``dest`` for each number of stops that reaches it."""
        g = self.graph
        od = (self.origin_zone, dest)
        if dest == self.origin_zone:
            return [(0.0, make_path(g, (), od))]
        out = []
        for c, d in enumerate(self.dist):
            u = _best_dest(g, d, dest)
            if u >= 0:
                out.append((float(d[u]), self._trace(c, u, od)))
        return out

    def _trace(self, c: int, u: int, od) -> ExpandedPath:
        g = self.graph
        arcs = []
        while True:
            a = int(self.pred[c][u])
            if a >= 0:
                arcs.append(a)
                u = int(g.arc_tail[a])
                continue
            if c == 0:
                assert u == self.origin
                break
            a = int(self.seed_arc[c][u])
            arcs.append(a)
            u = int(g.arc_tail[a])
            c -= 1
        return make_path(g, reversed(arcs), od)


def layered_walks(g: ExpandedGraph, origin: int, arc_cost: np.ndarray, max_charges: int) -> WalkTree:
    """Exact minimum-cost walks with at most ``max_charges`` charging stops.

    Road arc costs must be nonnegative; charging arc costs may have any sign.
    """
    cost = np.asarray(arc_cost, dtype=float)
    road_cost = cost[g.is_road]
    if road_cost.size and road_cost.min() < -COST_TOL:
        raise NegativeCostError(f"road pricing cost {road_cost.min()!r} < 0")
    cost = cost.copy()
    cost[g.is_road & (cost < 0)] = 0.0
    src = g.origin_entry.get(origin)
    if src is None:
        raise NoEntryError(origin)
    n = g.n_nodes
    ip, hd, aid = g.road_indptr, g.road_heads, g.road_arc_ids
    d0, p0, _ = kernels.dijkstra(ip, hd, aid, cost, [src], [0.0])
    dists, preds, seeds = [d0], [p0], [np.full(n, -1, dtype=np.int64)]
    ca = g.charge_arcs
    for _ in range(max_charges):
        if ca.size == 0:
            break
        prev = dists[-1]
        val = prev[g.arc_tail[ca]] + cost[ca]
        ok = np.isfinite(val)
        if not ok.any():
            break
        arcs, val = ca[ok], val[ok]
        heads = g.arc_head[arcs]
        order = np.lexsort((arcs, val, heads))
        heads, val, arcs = heads[order], val[order], arcs[order]
        first = np.ones(len(heads), dtype=bool)
        first[1:] = heads[1:] != heads[:-1]
        s_nodes, s_val, s_arc = heads[first], val[first], arcs[first]
        d, p, _ = kernels.dijkstra(ip, hd, aid, cost, s_nodes, s_val)
        seed = np.full(n, -1, dtype=np.int64)
        seed[s_nodes] = s_arc
        dists.append(d); preds.append(p); seeds.append(seed)
    return WalkTree(g, src, origin, dists, preds, seeds)


def walk_cost(g: ExpandedGraph, path: ExpandedPath, arc_cost: np.ndarray) -> float:
    return float(np.sum(np.asarray(arc_cost)[list(path.arcs)])) if path.arcs else 0.0


def enumerate_paths(g: ExpandedGraph, origin: int, dest: int, limit: int = 10_000) -> list[ExpandedPath]:
    """All simple expanded-graph paths from ``(origin, full)`` to any ``(dest, .)`` node.

    Exhaustive DFS, for oracles on small graphs. A path stops at the first
    destination node it reaches. Raises if more than ``limit`` paths exist.
    """
    src = g.origin_entry[origin]
    if origin == dest:
        return [make_path(g, (), (origin, dest))]
    dests = set(g.dest_exit.get(dest, np.empty(0, dtype=np.int64)).tolist())
    out: list[ExpandedPath] = []
    on_path = np.zeros(g.n_nodes, dtype=bool)
    stack: list[int] = []

    def dfs(u: int) -> None:
        if u in dests:
            out.append(make_path(g, list(stack), (origin, dest)))
            if len(out) > limit:
                raise RuntimeError("path enumeration limit exceeded")
            return
        on_path[u] = True
        for k in range(g.indptr[u], g.indptr[u + 1]):
            w = int(g.heads[k])
            if not on_path[w]:
                stack.append(int(g.arc_ids[k]))
                dfs(w)
                stack.pop()
        on_path[u] = False

    dfs(src)
    return out

"""Lower-level equilibrium: user-equilibrium routing with charging, by Frank-Wolfe.

For a fixed design ``y`` the follower problem is a convex traffic assignment
on the battery-expanded graph: road arcs carry BPR delay and charging arcs a
fixed cost ``t * hours``. The solver works in arc space on the expanded graph
and projects to link flows ``x`` and station loads ``v`` at the end.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import InstanceConfig
from .expand import ExpandedGraph, expand_graph, open_candidates, project_solution, reachable_od_pairs
from .network import DemandTable, PhysicalNetwork, beckmann_integrals, bpr_times

log = logging.getLogger(__name__)

LINE_SEARCH_TOL = 1e-10


@dataclass
class FlowSolution:
    y: tuple[int, ...]
    x: np.ndarray
    v: np.ndarray
    served: dict[tuple[int, int], float]
    L_value: float
    rel_gap: float
    converged: bool
    iterations: int = 0
    history: list[float] = field(default_factory=list, repr=False)
    gap_history: list[float] = field(default_factory=list, repr=False)
    arc_flow: np.ndarray | None = field(default=None, repr=False)
    graph: ExpandedGraph | None = field(default=None, repr=False)
    charge_value: float = 1.0

    @property
    def total_served(self) -> float:
        return float(sum(self.served.values()))


def lower_level_value(sol: FlowSolution, net: PhysicalNetwork | None = None) -> float:
    """Beckmann integral of ``x`` plus ``t * sum(v)``; recomputed when ``net`` is given."""
    if net is None:
        return sol.L_value
    arrays = net.link_arrays()
    return float(beckmann_integrals(arrays, sol.x).sum() + sol.charge_value * sol.v.sum())


def upper_level_value(sol: FlowSolution, demand: DemandTable, cfg: InstanceConfig) -> float:
    unmet = sum(d - sol.served.get(od, 0.0) for od, d in demand.entries.items())
    return float(-cfg.charge_price * sol.v.sum() + cfg.unmet_weight * unmet)


class _Problem:
    """Arrays shared by the Frank-Wolfe iterations of one design."""

    def __init__(self, net: PhysicalNetwork, cfg: InstanceConfig, demand: DemandTable, y):
        self.cfg = cfg
        self.open = open_candidates(net, y)
        od = [(r, s, d) for (r, s), d in demand.positive() if r != s]
        origins = sorted({r for r, _, _ in od})
        self.g = g = expand_graph(net, cfg, self.open, origins)
        self.served = reachable_od_pairs(g, demand)
        dests = sorted({s for _, s, _ in od})
        self.origins = origins
        self.dests = dests
        oi = {r: i for i, r in enumerate(origins)}
        di = {s: j for j, s in enumerate(dests)}
        self.dem = np.zeros((len(origins), len(dests)))
        for r, s, _ in od:
            self.dem[oi[r], di[s]] = self.served[(r, s)]
        self.src = np.array([g.origin_entry[r] for r in origins], dtype=np.int64)
        self.dest_ptr, self.dest_nodes = g.dest_csr(dests)
        self.arrays = net.link_arrays()
        self.road = g.is_road
        self.road_link = g.arc_link[self.road]
        self.charge_cost = cfg.charge_value * g.arc_duration[~self.road]
        self.n_links = len(net.links)

    def link_flow(self, f: np.ndarray) -> np.ndarray:
        return np.bincount(self.road_link, weights=f[self.road], minlength=self.n_links)

    def charge_hours(self, f: np.ndarray) -> float:
        return float(f[~self.road] @ self.g.arc_duration[~self.road])

    def arc_cost(self, x: np.ndarray) -> np.ndarray:
        c = np.empty(self.g.n_arcs)
        c[self.road] = bpr_times(self.arrays, x)[self.road_link]
        c[~self.road] = self.charge_cost
        return c

    def curvature(self, x: np.ndarray) -> np.ndarray:
        """Derivative of each link's BPR time (diagonal Hessian of the objective)."""
        a = self.arrays
        return a["t0"] * a["alpha"] * a["beta"] * x ** (a["beta"] - 1) / a["cap"] ** a["beta"]

    def objective(self, f: np.ndarray) -> float:
        x = self.link_flow(f)
        return float(beckmann_integrals(self.arrays, x).sum() + f[~self.road] @ self.charge_cost)

    def aon(self, cost: np.ndarray) -> tuple[np.ndarray, float]:
        g = self.g
        flow, odc = kernels.aon_assign(g.indptr, g.heads, g.arc_ids, cost, g.arc_tail,
                                       self.src, self.dest_ptr, self.dest_nodes, self.dem)
        mask = self.dem > 0
        return flow, float((self.dem[mask] * odc[mask]).sum())


def _line_search(p: _Problem, x: np.ndarray, dx: np.ndarray, dlin: float) -> float:
    """Exact minimizer over [0, 1] of the objective along the direction."""
    arrays = p.arrays

    def slope(lam: float) -> float:
        return float(bpr_times(arrays, x + lam * dx) @ dx) + dlin

    if slope(0.0) >= 0:
        return 0.0
    if slope(1.0) <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > LINE_SEARCH_TOL:
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


CFW_DELTA = 0.05


def _conjugate_target(p: _Problem, f, x, aon, prev):
    """Blend the all-or-nothing point with the previous target so the step is Hessian-conjugate."""
    h = p.curvature(x)
    sx = p.link_flow(prev) - x
    num = float(sx @ (h * (p.link_flow(aon) - x)))
    den = float(sx @ (h * (p.link_flow(aon) - p.link_flow(prev))))
    if den == 0.0:
        return aon
    a = num / den
    a = min(max(a, 0.0), 1.0 - CFW_DELTA)
    return a * prev + (1.0 - a) * aon


def solve_mtap(net: PhysicalNetwork, cfg: InstanceConfig, demand: DemandTable, y,
               tol: float | None = None, max_iter: int | None = None) -> FlowSolution:
    tol = cfg.mtap_tol if tol is None else tol
    max_iter = cfg.mtap_max_iter if max_iter is None else max_iter
    p = _Problem(net, cfg, demand, y)
    y_vec = tuple(1 if i in p.open else 0 for i in range(len(net.candidates)))
    g = p.g
    if not (p.dem > 0).any():
        zero = np.zeros(g.n_arcs)
        x, v = project_solution(g, zero)
        return FlowSolution(y_vec, x, v, p.served, 0.0, 0.0, True, 0, [0.0], [0.0], zero, g,
                            cfg.charge_value)

    f, _ = p.aon(p.arc_cost(np.zeros(p.n_links)))
    obj = p.objective(f)
    history, gaps = [obj], []
    converged = False
    gap = np.inf
    it = 0
    prev_target = None
    while True:
        x = p.link_flow(f)
        cost = p.arc_cost(x)
        target, sptt = p.aon(cost)
        tstt = float(f @ cost)
        gap = (tstt - sptt) / tstt if tstt > 0 else 0.0
        assert gap >= -1e-9, f"negative relative gap {gap}"
        gap = max(gap, 0.0)
        gaps.append(gap)
        if gap <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        if cfg.mtap_method == "cfw" and prev_target is not None:
            target = _conjugate_target(p, f, x, target, prev_target)
        prev_target = target
        d = target - f
        dx = p.link_flow(d)
        dlin = float(d[~p.road] @ p.charge_cost)
        lam = _line_search(p, x, dx, dlin)
        if lam <= 0.0:
            # direction is not a descent direction at machine precision
            converged = gap <= tol
            break
        f = f + lam * d
        np.maximum(f, 0.0, out=f)
        new = p.objective(f)
        assert new <= obj + 1e-9 * max(1.0, abs(obj)), f"objective increased {obj} -> {new}"
        obj = new
        history.append(obj)
    if not converged:
        log.warning("MTAP stopped at gap %.3g after %d iterations", gap, it)
    x, v = project_solution(g, f)
    L = float(beckmann_integrals(p.arrays, x).sum() + cfg.charge_value * v.sum())
    return FlowSolution(y_vec, x, v, p.served, L, gap, converged, it, history, gaps, f, g,
                        cfg.charge_value)


def aon_free_flow_value(net: PhysicalNetwork, cfg: InstanceConfig, demand: DemandTable, y) -> float:
    """Lower-level value of an all-or-nothing load of all feasible demand at free-flow costs."""
    p = _Problem(net, cfg, demand, y)
    if not (p.dem > 0).any():
        return 0.0
    f, _ = p.aon(p.arc_cost(np.zeros(p.n_links)))
    return p.objective(f)

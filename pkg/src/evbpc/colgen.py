"""Column generation for the restricted master at one branch-and-bound node.

Each round solves the master LP, activates any pooled cut the LP point
violates (cuts enter the LP lazily, which leaves the optimum of the LP over
the full pool unchanged), and prices new path columns with the duals.

Reduced cost of a path ``pi`` for pair ``rs``::

    c_pi = -w + sigma_rs + sum_a delta_a zeta_a + sum_l (gamma_l^pi g_l + n_l^pi mu_rsl)

with ``sigma = -dual(dem)``, ``zeta = -dual(flow)``, ``mu = -dual(odlink)``
(all >= 0) and ``g = -dual(chg)`` (free); ``n_l^pi`` counts the path's stops
at ``l``. Pricing is a shortest walk on the all-open expanded graph with road
arc cost ``zeta`` and charging arc cost ``g_l * hours + mu_rsl`` per stop,
over walks with at most ``max_charges`` stops. Pairs with a nonzero ``mu``
get their own walk tree; the rest share one per origin.

The LP holds only the pool's working set of columns. At the start of each
node, columns that have been zero for ``IDLE_LIMIT`` consecutive LP solves
leave it. Pricing searches every walk, so any column that prices out, pooled
or not, comes back and the bound is unaffected.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .config import InstanceConfig
from .expand import ExpandedPath
from .lp import INFEASIBLE, OPTIMAL, solve_lp
from .master import (MasterData, MasterSolution, OAPool, PathPool, VFPool, build_master_lp,
                     read_master_solution)
from .network import DemandTable, PhysicalNetwork
from .spp import CostView, extract_path, layered_walks, shortest_paths_one_to_all

log = logging.getLogger(__name__)

RC_TOL = 1e-7
CUT_TOL = 1e-9
DUAL_SIGN_TOL = 1e-7
IDLE_LIMIT = 200


@dataclass
class Pools:
    paths: PathPool = field(default_factory=PathPool)
    oa: OAPool = field(default_factory=OAPool)
    vf: VFPool = field(default_factory=VFPool)


@dataclass
class NodeRelaxation:
    status: str
    lb: float
    msol: MasterSolution | None
    proven: bool
    rounds: int
    history: list[tuple[str, float]]   # ("price" | "cut", LP objective) per LP solve
    min_rc: float
    seconds: float = 0.0
    lp_seconds: float = 0.0
    pricing_seconds: float = 0.0


def reduced_cost(path: ExpandedPath, msol: MasterSolution, cfg: InstanceConfig) -> float:
    return (-cfg.unmet_weight + msol.sigma.get(path.od, 0.0)
            + sum(c * msol.zeta[a] for a, c in path.delta.items())
            + sum(hrs * msol.gamma[l] for l, hrs in path.gamma.items())
            + sum(n * msol.mu.get((path.od, l), 0.0) for l, n in path.visits.items()))


def pricing_costs(msol: MasterSolution, data: MasterData) -> np.ndarray:
    zeta = msol.zeta
    if zeta.size and zeta.min() < -DUAL_SIGN_TOL * (1 + np.abs(zeta).max()):
        raise AssertionError(f"link-flow dual has the wrong sign: {zeta.min()!r}")
    return data.graph.arc_costs(np.maximum(zeta, 0.0), msol.gamma)


def price_paths(msol: MasterSolution, data: MasterData, pool: PathPool | None = None
                ) -> tuple[float, list[ExpandedPath]]:
    """Best walk per demanded pair; returns the minimum reduced cost and the improving columns."""
    cfg, g = data.cfg, data.graph
    cost = pricing_costs(msol, data)
    k = cfg.max_charges if cfg.max_charges is not None else data.n_candidates
    by_origin: dict[int, list[int]] = {}
    for r, s in data.od_pairs:
        by_origin.setdefault(r, []).append(s)
    mu_by_od: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for (od, l), m in msol.mu.items():
        if m < -DUAL_SIGN_TOL:
            raise AssertionError(f"pair-station linking dual has the wrong sign for {(od, l)}: {m!r}")
        if m > 0:
            mu_by_od.setdefault(od, []).append((l, m))
    ca = g.charge_arcs
    min_rc = np.inf
    found = []
    for r, dests in by_origin.items():
        shared = None
        for s in dests:
            extra = mu_by_od.get((r, s))
            if extra:
                c = cost.copy()
                for l, m in extra:
                    c[ca[g.arc_cand[ca] == l]] += m
                tree = layered_walks(g, r, c, k)
            else:
                if shared is None:
                    shared = layered_walks(g, r, cost, k)
                tree = shared
            sig = msol.sigma.get((r, s), 0.0)
            if sig < -DUAL_SIGN_TOL:
                raise AssertionError(f"demand dual has the wrong sign for {(r, s)}: {sig!r}")
            # one column per stop count: the layers come for free and cut the number of rounds
            for val, path in tree.per_layer(s):
                rc = -cfg.unmet_weight + max(sig, 0.0) + val
                min_rc = min(min_rc, rc)
                if rc < -RC_TOL and (pool is None or pool.keys.get(path.key()) not in pool.active):
                    found.append(path)
    return float(min_rc), found


def initial_paths(data: MasterData) -> list[ExpandedPath]:
    """Free-flow shortest path per demanded pair with every station open."""
    g, cfg = data.graph, data.cfg
    cv = CostView(data.net.link_arrays()["t0"], np.full(data.n_candidates, cfg.charge_value))
    out = []
    by_origin: dict[int, list[int]] = {}
    for r, s in data.od_pairs:
        by_origin.setdefault(r, []).append(s)
    for r, dests in by_origin.items():
        tree = shortest_paths_one_to_all(g, r, cv)
        for s in dests:
            p = extract_path(tree, s)
            if p is not None:
                out.append(p)
    return out


def separate_cuts(msol: MasterSolution, pools: Pools, cfg: InstanceConfig) -> int:
    """Activate every violated pooled cut (most violated OA cut per link). Returns count."""
    added = 0
    oa = pools.oa
    for a, ids in oa.by_link.items():
        best, best_k = CUT_TOL * (1 + abs(msol.eta[a])), None
        for k in ids:
            if k in oa.active:
                continue
            viol = oa.cuts[k].value(msol.x[a]) - msol.eta[a]
            if viol > best:
                best, best_k = viol, k
        if best_k is not None:
            oa.active.add(best_k)
            added += 1
    eta_sum = float(msol.eta.sum())
    for k, cut in enumerate(pools.vf.cuts):
        if k in pools.vf.active:
            continue
        if cut.slack(eta_sum, msol.v, msol.y, cfg.charge_value) < -CUT_TOL * (1 + abs(cut.rhs_L)):
            pools.vf.active.add(k)
            added += 1
    return added


class WarmStart:
    """Last optimal basis, reused as the next master's starting point."""
    basis: dict | None = None


def solve_node_relaxation(fixed_zero, fixed_one, pools: Pools, data: MasterData,
                          warm: WarmStart | None = None, max_rounds: int | None = None) -> NodeRelaxation:
    cfg = data.cfg
    max_rounds = cfg.cg_max_rounds if max_rounds is None else max_rounds
    warm = warm or WarmStart()
    t0 = time.perf_counter()
    history: list[tuple[str, float]] = []
    rounds = 0
    msol = None
    min_rc = -np.inf
    proven = False
    kind = "price"
    t_lp = t_price = 0.0
    pools.paths.prune(IDLE_LIMIT)
    while True:
        t1 = time.perf_counter()
        idx = build_master_lp(fixed_zero, fixed_one, pools.paths, pools.oa, pools.vf, data)
        lp = solve_lp(idx.model, backend=cfg.lp_backend, warm_start=warm.basis)
        t_lp += time.perf_counter() - t1
        if lp.status == INFEASIBLE:
            return NodeRelaxation(INFEASIBLE, np.inf, None, True, rounds, history, np.inf,
                                  time.perf_counter() - t0, t_lp, t_price)
        if lp.status != OPTIMAL:
            raise RuntimeError(f"master LP is {lp.status}")
        if lp.basis is not None:
            warm.basis = lp.basis
        msol = read_master_solution(idx, lp, data)
        pools.paths.record(msol.path_ids, msol.h)
        history.append((kind, msol.objective))
        if separate_cuts(msol, pools, cfg):
            kind = "cut"
            continue
        t1 = time.perf_counter()
        min_rc, cols = price_paths(msol, data, pools.paths)
        t_price += time.perf_counter() - t1
        if not cols:
            proven = min_rc >= -RC_TOL or _only_numerical(min_rc)
            break
        if rounds >= max_rounds:
            log.warning("column generation hit the round cap (%d); bound not proven", max_rounds)
            break
        for p in cols:
            pools.paths.activate(p)
        rounds += 1
        kind = "price"
    return NodeRelaxation(OPTIMAL, msol.objective, msol, proven, rounds, history, min_rc,
                          time.perf_counter() - t0, t_lp, t_price)


def _only_numerical(min_rc: float) -> bool:
    # improving walks already in the LP: tolerance noise, not a missing column
    return min_rc > -1e-6

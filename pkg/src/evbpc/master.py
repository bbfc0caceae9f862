"""Restricted master of the high-point relaxation, plus its cut and path pools.

Variables: ``y`` (station open, relaxed to [0, 1]), ``h`` (path flows over the
pooled columns), ``x`` (link flows), ``v`` (charging hours per station) and
``eta`` (outer-approximation epigraph of each link's Beckmann integral).

Rows, with the names used for warm starts::

    budget      sum C_l y_l <= B
    link[l]     v_l - M_l y_l <= 0
    odlink[r,s,l]  sum_p n_lp h_p - D_rs y_l <= 0 (n_lp: charging stops at l)
    flow[a]     sum_p delta_ap h_p - x_a <= 0
    dem[r,s]    sum_p h_p <= D_rs                (pairs feasible with every station open)
    chg[l]      sum_p gamma_lp h_p - v_l = 0
    oa[k]       slope_k x_a - eta_a <= -intercept_k
    vf[k]       sum eta + t sum v <= L_k + relaxation terms

Objective: ``-p sum v - w sum h + w sum D`` over non-intra-zonal pairs.

The per-pair rows hold for every follower equilibrium: with positive road
times a shortest walk never charges twice at one station (the loop between
the two stops can be dropped), so each vehicle stops at most once at ``l`` and
only if ``l`` is open.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import InstanceConfig
from .expand import ExpandedGraph, ExpandedPath, expand_graph, reachable_nodes, reachable_od_pairs
from .lp import LpModel, LpSolution
from .network import DemandTable, Link, PhysicalNetwork, beckmann_integral_link, bpr_time

DEDUP_TOL = 1e-6


# ---------------------------------------------------------------- cuts

@dataclass(frozen=True)
class OACut:
    link: int
    x1: float
    intercept: float
    slope: float

    @classmethod
    def at(cls, link_id: int, link: Link, x1: float) -> "OACut":
        if x1 < 0:
            raise ValueError("linearization point must be >= 0")
        slope = bpr_time(link, x1)
        return cls(link_id, float(x1), beckmann_integral_link(link, x1) - slope * x1, slope)

    def value(self, x):
        return self.intercept + self.slope * x


@dataclass
class OAPool:
    cuts: list[OACut] = field(default_factory=list)
    by_link: dict[int, list[int]] = field(default_factory=dict)
    active: set[int] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.cuts)

    def bound(self, link_id: int, x: float) -> float:
        """Largest pooled under-estimate of the link's integral at ``x``."""
        ids = self.by_link.get(link_id, ())
        return max((self.cuts[k].value(x) for k in ids), default=0.0)


def add_oa_cut(pool: OAPool, net: PhysicalNetwork, link_id: int, x1: float) -> int | None:
    """Append the tangent at ``x1``; returns its index, or None if a near-duplicate exists."""
    for k in pool.by_link.get(link_id, ()):
        if abs(pool.cuts[k].x1 - x1) <= DEDUP_TOL:
            return None
    pool.cuts.append(OACut.at(link_id, net.links[link_id], float(x1)))
    pool.by_link.setdefault(link_id, []).append(len(pool.cuts) - 1)
    return len(pool.cuts) - 1


@dataclass(frozen=True)
class VFCut:
    """``sum eta + t sum v <= rhs_L + sum_{C^f} M_l (1 - y_l) + sum_{extra} M_l y_l``.

    ``extra`` lists stations whose opening may make more OD pairs feasible than
    the source design served; the cut must then step aside.
    """
    rhs_L: float
    active_set: frozenset[int]
    M: tuple[float, ...]
    extra: frozenset[int] = frozenset()
    design: tuple[int, ...] = ()

    def key(self) -> tuple:
        return (round(self.rhs_L / DEDUP_TOL), self.active_set, self.extra)

    def slack(self, eta_sum: float, v: np.ndarray, y, t: float) -> float:
        """Right-hand side minus left-hand side; negative means violated."""
        y = np.asarray(y, dtype=float)
        relax = sum(self.M[l] * (1 - y[l]) for l in self.active_set)
        relax += sum(self.M[l] * y[l] for l in self.extra)
        return self.rhs_L + relax - (eta_sum + t * float(np.sum(v)))


@dataclass
class VFPool:
    cuts: list[VFCut] = field(default_factory=list)
    keys: set = field(default_factory=set)
    active: set[int] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.cuts)


def active_stations(v: np.ndarray, tol: float = 1e-6) -> frozenset[int]:
    return frozenset(int(l) for l in np.flatnonzero(np.asarray(v) > tol))


def vf_big_m(rhs_L: float, u_aon: float, n_candidates: int, kappa: float) -> tuple[float, ...]:
    m = max(kappa * rhs_L, kappa * u_aon - rhs_L, 1.0)
    return (float(m),) * n_candidates


def add_vf_cut(pool: VFPool, oa_pool: OAPool, sol, net: PhysicalNetwork, cfg: InstanceConfig,
               u_aon: float, allopen_served: dict[tuple[int, int], float]) -> int | None:
    """Cut from a converged equilibrium; also adds its tangent at every link flow."""
    if not sol.converged:
        raise ValueError("value-function cuts need a converged equilibrium")
    for a, xa in enumerate(sol.x):
        add_oa_cut(oa_pool, net, a, float(xa))
    cf = active_stations(sol.v)
    extra: frozenset[int] = frozenset()
    if any(abs(sol.served.get(od, 0.0) - d) > 1e-12 for od, d in allopen_served.items()):
        extra = frozenset(l for l in range(len(net.candidates)) if not sol.y[l])
    cut = VFCut(float(sol.L_value), cf, vf_big_m(sol.L_value, u_aon, len(net.candidates), cfg.vf_kappa),
                extra, tuple(sol.y))
    if cut.key() in pool.keys:
        return None
    pool.keys.add(cut.key())
    pool.cuts.append(cut)
    return len(pool.cuts) - 1


# ---------------------------------------------------------------- paths

@dataclass
class PathPool:
    """Every generated column, plus the working set that enters the master LP.

    Columns leave the working set once they sit at zero for a while; pricing
    runs over all walks, so a dropped column comes back if it prices out.
    """
    paths: list[ExpandedPath] = field(default_factory=list)
    by_od: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    keys: dict = field(default_factory=dict)
    active: set[int] = field(default_factory=set)
    idle: dict[int, int] = field(default_factory=dict)   # LP solves since the column was last positive

    def __len__(self) -> int:
        return len(self.paths)

    def add(self, path: ExpandedPath) -> int | None:
        """Pool a new column (active). Returns its id, or None if it was already pooled."""
        k = path.key()
        if k in self.keys:
            return None
        pid = len(self.paths)
        self.keys[k] = pid
        self.paths.append(path)
        self.by_od.setdefault(path.od, []).append(pid)
        self.active.add(pid)
        self.idle[pid] = 0
        return pid

    def activate(self, path: ExpandedPath) -> bool:
        """Put a column into the working set, pooling it if new. True if the set grew."""
        pid = self.keys.get(path.key())
        if pid is None:
            return self.add(path) is not None
        if pid in self.active:
            return False
        self.active.add(pid)
        self.idle[pid] = 0
        return True

    def record(self, ids, h: np.ndarray, tol: float = 1e-12) -> None:
        for pid, val in zip(ids, h):
            self.idle[pid] = 0 if val > tol else self.idle[pid] + 1

    def prune(self, max_idle: int) -> int:
        """Drop working-set columns idle for more than ``max_idle`` LP solves."""
        drop = [pid for pid in self.active if self.idle[pid] > max_idle]
        self.active.difference_update(drop)
        return len(drop)


# ---------------------------------------------------------------- instance data

@dataclass
class MasterData:
    """Per-instance constants: all-open graph, relaxation demand, big-M values."""
    net: PhysicalNetwork
    demand: DemandTable
    cfg: InstanceConfig
    graph: ExpandedGraph
    od_pairs: list[tuple[int, int]]          # demanded pairs, r != s, feasible with all stations open
    od_demand: dict[tuple[int, int], float]
    allopen_served: dict[tuple[int, int], float]
    unmet_constant: float                    # w * total non-intra-zonal demand
    link_m: np.ndarray
    od_stations: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    u_aon: float = 0.0

    @property
    def n_candidates(self) -> int:
        return len(self.net.candidates)


def station_users(g: ExpandedGraph, od_demand: dict[tuple[int, int], float], n_candidates: int
                  ) -> dict[tuple[int, int], tuple[int, ...]]:
    """Stations each pair can charge at on some origin-to-destination walk."""
    from_origin = {r: reachable_nodes(g, g.origin_entry[r]) for r in {r for r, _ in od_demand}}
    users: dict[tuple[int, int], list[int]] = {od: [] for od in od_demand}
    ca = g.charge_arcs
    for l in range(n_candidates):
        arcs = ca[g.arc_cand[ca] == l]
        if arcs.size == 0:
            continue
        from_station = reachable_nodes(g, int(g.arc_head[arcs[0]]))
        for r, s in od_demand:
            if from_origin[r][g.arc_tail[arcs]].any() and from_station[g.dest_exit[s]].any():
                users[(r, s)].append(l)
    return {od: tuple(ls) for od, ls in users.items()}


def linking_big_m(net: PhysicalNetwork, cfg: InstanceConfig, g: ExpandedGraph,
                  od_demand: dict[tuple[int, int], float], users=None) -> np.ndarray:
    """Per-station bound on charging hours: full-charge time times demand that could charge there."""
    nC = len(net.candidates)
    if cfg.big_m is not None:
        return np.full(nC, float(cfg.big_m))
    users = station_users(g, od_demand, nC) if users is None else users
    M = np.zeros(nC)
    for od, ls in users.items():
        for l in ls:
            M[l] += od_demand[od]
    return cfg.b_max / cfg.charge_rate * M


def prepare_master_data(net: PhysicalNetwork, demand: DemandTable, cfg: InstanceConfig) -> MasterData:
    nC = len(net.candidates)
    origins = sorted({r for (r, s), d in demand.positive() if r != s})
    g = expand_graph(net, cfg, frozenset(range(nC)), origins)
    served = reachable_od_pairs(g, demand)
    od_demand = {(r, s): d for (r, s), d in demand.positive() if r != s and served[(r, s)] > 0}
    unmet = cfg.unmet_weight * sum(d for (r, s), d in demand.positive() if r != s)
    users = station_users(g, od_demand, nC)
    return MasterData(net, demand, cfg, g, sorted(od_demand), od_demand,
                      {od: served[od] for od in served if od[0] != od[1]}, unmet,
                      linking_big_m(net, cfg, g, od_demand, users), users)


# ---------------------------------------------------------------- master LP

@dataclass
class MasterSolution:
    lp: LpSolution
    objective: float
    y: np.ndarray
    v: np.ndarray
    x: np.ndarray
    eta: np.ndarray
    h: np.ndarray
    sigma: dict[tuple[int, int], float]
    zeta: np.ndarray
    gamma: np.ndarray
    mu: dict[tuple[tuple[int, int], int], float] = field(default_factory=dict)
    path_ids: tuple[int, ...] = ()         # pool id of each entry of h


@dataclass
class MasterIndex:
    model: LpModel
    y: list[int]
    v: list[int]
    x: list[int]
    eta: list[int]
    h: list[int]
    dem_rows: dict[tuple[int, int], int]
    flow_rows: list[int]
    chg_rows: list[int]
    odlink_rows: dict[tuple[tuple[int, int], int], int] = field(default_factory=dict)
    path_ids: tuple[int, ...] = ()


def build_master_lp(fixed_zero, fixed_one, pool: PathPool, oa: OAPool, vf: VFPool,
                    data: MasterData, oa_ids=None, vf_ids=None, path_ids=None) -> MasterIndex:
    """Assemble the LP for a node with the given fixings.

    ``oa_ids`` / ``vf_ids`` / ``path_ids`` choose which pooled cuts and columns
    enter (default: the pools' active sets).
    """
    net, cfg = data.net, data.cfg
    nC, nA = len(net.candidates), len(net.links)
    costs = net.candidate_costs
    m = LpModel(obj_constant=data.unmet_constant)
    ys, vs = [], []
    for l in range(nC):
        lb = 1.0 if l in fixed_one else 0.0
        ub = 0.0 if l in fixed_zero else 1.0
        ys.append(m.add_var(f"y[{l}]", lb, ub, 0.0))
    for l in range(nC):
        vs.append(m.add_var(f"v[{l}]", 0.0, np.inf, -cfg.charge_price))
    xs = [m.add_var(f"x[{a}]", 0.0, np.inf, 0.0) for a in range(nA)]
    etas = [m.add_var(f"eta[{a}]", 0.0, np.inf, 0.0) for a in range(nA)]
    pids = tuple(sorted(pool.active if path_ids is None else path_ids))
    hs = {pid: m.add_var(f"h[{pid}]", 0.0, np.inf, -cfg.unmet_weight) for pid in pids}

    if nC:
        m.add_constraint("budget", {ys[l]: costs[l] for l in range(nC)}, "<=", cfg.budget)
    for l in range(nC):
        m.add_constraint(f"link[{l}]", {vs[l]: 1.0, ys[l]: -float(data.link_m[l])}, "<=", 0.0)
    flow_coef: list[dict[int, float]] = [{xs[a]: -1.0} for a in range(nA)]
    chg_coef: list[dict[int, float]] = [{vs[l]: -1.0} for l in range(nC)]
    for pid in pids:
        path = pool.paths[pid]
        for a, cnt in path.delta.items():
            flow_coef[a][hs[pid]] = float(cnt)
        for l, hrs in path.gamma.items():
            chg_coef[l][hs[pid]] = hrs
    flow_rows = [m.add_constraint(f"flow[{a}]", flow_coef[a], "<=", 0.0) for a in range(nA)]
    od_ids = {od: [p for p in pool.by_od.get(od, ()) if p in hs] for od in data.od_pairs}
    dem_rows = {}
    for od in data.od_pairs:
        coef = {hs[p]: 1.0 for p in od_ids[od]}
        dem_rows[od] = m.add_constraint(f"dem[{od[0]},{od[1]}]", coef, "<=", data.od_demand[od])
    chg_rows = [m.add_constraint(f"chg[{l}]", chg_coef[l], "=", 0.0) for l in range(nC)]
    odlink_rows = {}
    for od in data.od_pairs:
        for l in data.od_stations.get(od, ()):
            coef = {hs[p]: float(pool.paths[p].visits[l]) for p in od_ids[od]
                    if l in pool.paths[p].visits}
            coef[ys[l]] = -data.od_demand[od]
            odlink_rows[(od, l)] = m.add_constraint(f"odlink[{od[0]},{od[1]},{l}]", coef, "<=", 0.0)
    for k in sorted(oa.active if oa_ids is None else oa_ids):
        cut = oa.cuts[k]
        m.add_constraint(f"oa[{k}]", {xs[cut.link]: cut.slope, etas[cut.link]: -1.0}, "<=", -cut.intercept)
    t = cfg.charge_value
    for k in sorted(vf.active if vf_ids is None else vf_ids):
        cut = vf.cuts[k]
        coef = {etas[a]: 1.0 for a in range(nA)}
        for l in range(nC):
            coef[vs[l]] = t
        rhs = cut.rhs_L
        for l in cut.active_set:
            coef[ys[l]] = coef.get(ys[l], 0.0) + cut.M[l]
            rhs += cut.M[l]
        for l in cut.extra:
            coef[ys[l]] = coef.get(ys[l], 0.0) - cut.M[l]
        m.add_constraint(f"vf[{k}]", coef, "<=", rhs)
    return MasterIndex(m, ys, vs, xs, etas, list(hs.values()), dem_rows, flow_rows, chg_rows, odlink_rows, pids)


def read_master_solution(idx: MasterIndex, lp: LpSolution, data: MasterData) -> MasterSolution:
    x = lp.x
    duals = lp.duals
    sigma = {od: -float(duals[r]) for od, r in idx.dem_rows.items()}
    zeta = np.array([-float(duals[r]) for r in idx.flow_rows])
    gamma = np.array([-float(duals[r]) for r in idx.chg_rows])
    mu = {key: -float(duals[r]) for key, r in idx.odlink_rows.items()}
    return MasterSolution(lp, lp.objective, x[idx.y].copy(), x[idx.v].copy(), x[idx.x].copy(),
                          x[idx.eta].copy(), x[idx.h].copy(), sigma, zeta, gamma, mu, idx.path_ids)

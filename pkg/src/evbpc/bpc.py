"""Best-first branch-and-price-and-cut over the station binaries.

Nodes fix some stations open or closed. A node where every station is
decided (or no undecided station fits the remaining budget) is evaluated
exactly: solve the follower equilibrium, take its upper-level value as an
incumbent candidate, and add a value-function cut plus tangent cuts at its
link flows. Other nodes get a lower bound from column generation on the
master relaxation and are branched on.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .colgen import Pools, WarmStart, initial_paths, solve_node_relaxation
from .config import InstanceConfig
from .lp import INFEASIBLE
from .master import MasterData, MasterSolution, add_oa_cut, add_vf_cut, prepare_master_data
from .mtap import FlowSolution, aon_free_flow_value, solve_mtap, upper_level_value
from .network import DemandTable, PhysicalNetwork, beckmann_integrals

log = logging.getLogger(__name__)

FATHOM_TOL = 1e-9
INTEGRAL_TOL = 1e-6


@dataclass(frozen=True)
class BBNode:
    fixed_zero: frozenset[int] = frozenset()
    fixed_one: frozenset[int] = frozenset()
    lb: float = -np.inf
    depth: int = 0

    def __post_init__(self):
        if self.fixed_zero & self.fixed_one:
            raise ValueError("a station cannot be fixed both open and closed")


@dataclass(frozen=True)
class NodeCheck:
    kind: str                         # "infeasible" | "fixed" | "unfixed"
    design: tuple[int, ...] | None = None


def check_node(node: BBNode, net: PhysicalNetwork, cfg: InstanceConfig) -> NodeCheck:
    costs = net.candidate_costs
    n = len(costs)
    if not (node.fixed_zero | node.fixed_one) <= set(range(n)):
        raise ValueError("node fixes unknown candidates")
    spent = float(sum(costs[l] for l in node.fixed_one))
    if spent > cfg.budget + FATHOM_TOL:
        return NodeCheck("infeasible")
    undecided = [l for l in range(n) if l not in node.fixed_zero and l not in node.fixed_one]
    design = tuple(1 if l in node.fixed_one else 0 for l in range(n))
    if not undecided:
        return NodeCheck("fixed", design)
    if cfg.budget - spent < min(costs[l] for l in undecided) - FATHOM_TOL:
        return NodeCheck("fixed", design)
    return NodeCheck("unfixed")


def _undecided(node: BBNode, n: int) -> list[int]:
    return [l for l in range(n) if l not in node.fixed_zero and l not in node.fixed_one]


def select_branch_variable(msol: MasterSolution, node: BBNode) -> int:
    """Fractional undecided station with the largest charging load; ties to the smaller id."""
    frac = [l for l in _undecided(node, len(msol.y)) if abs(msol.y[l] - round(msol.y[l])) > INTEGRAL_TOL]
    if not frac:
        raise ValueError("no fractional undecided station to branch on")
    return min(frac, key=lambda l: (-msol.v[l], l))


def rounded_design(msol: MasterSolution, node: BBNode, costs: np.ndarray, budget: float) -> tuple[int, ...]:
    """Greedy rounding of the LP point: fixed-open stations, then the rest by decreasing y."""
    n = len(costs)
    design = [1 if l in node.fixed_one else 0 for l in range(n)]
    spent = float(sum(costs[l] for l in node.fixed_one))
    order = sorted(_undecided(node, n), key=lambda l: (-msol.y[l], -msol.v[l], l))
    for l in order:
        if msol.y[l] <= INTEGRAL_TOL:
            break
        if spent + costs[l] <= budget + FATHOM_TOL:
            design[l] = 1
            spent += costs[l]
    return tuple(design)


def _branch_on_integral(msol: MasterSolution, node: BBNode) -> int:
    und = _undecided(node, len(msol.y))
    return min(und, key=lambda l: (-msol.v[l], l))


@dataclass
class TraceRow:
    node_index: int
    node_lb: float
    global_lb: float
    global_ub: float
    gap_pct: float
    num_paths: int
    num_oa_cuts: int
    num_vf_cuts: int
    phase_seconds: float
    kind: str = ""
    fathom: str = ""
    depth: int = 0


@dataclass
class BpcResult:
    best_y: tuple[int, ...] | None
    ub: float
    lb: float
    gap_pct: float
    nodes_processed: int
    trace: list[TraceRow]
    status: str                       # "optimal" | "gap" | "time_limit"
    timings: dict[str, float] = field(default_factory=dict)
    num_paths: int = 0
    num_oa_cuts: int = 0
    num_vf_cuts: int = 0
    designs_evaluated: int = 0
    root_lb: float = -np.inf
    vf_audit_violations: int = 0
    nonconverged_mtap: int = 0
    evaluations: dict = field(default_factory=dict, repr=False)
    pools: Pools | None = field(default=None, repr=False)
    data: MasterData | None = field(default=None, repr=False)


def gap_percent(ub: float, lb: float) -> float:
    if not np.isfinite(ub) or not np.isfinite(lb):
        return float("inf")
    return 100.0 * (ub - lb) / max(abs(ub), 1e-9)


class _Solver:
    def __init__(self, net: PhysicalNetwork, demand: DemandTable, cfg: InstanceConfig):
        self.net, self.demand, self.cfg = net, demand, cfg
        self.t_start = time.perf_counter()
        self.data = prepare_master_data(net, demand, cfg)
        self.data.u_aon = aon_free_flow_value(net, cfg, demand, frozenset(range(len(net.candidates))))
        self.pools = Pools()
        for p in initial_paths(self.data):
            self.pools.paths.add(p)
        self.warm = WarmStart()
        self.ub = np.inf
        self.best_y: tuple[int, ...] | None = None
        self.evaluated: dict[tuple[int, ...], tuple[FlowSolution, float]] = {}
        self.t_mtap = self.t_lp = self.t_price = 0.0
        self.nonconverged = 0

    def evaluate(self, design: tuple[int, ...]) -> float:
        hit = self.evaluated.get(design)
        if hit is not None:
            return hit[1]
        t = time.perf_counter()
        sol = solve_mtap(self.net, self.cfg, self.demand, design)
        self.t_mtap += time.perf_counter() - t
        obj = upper_level_value(sol, self.demand, self.cfg)
        self.evaluated[design] = (sol, obj)
        if sol.converged:
            add_vf_cut(self.pools.vf, self.pools.oa, sol, self.net, self.cfg, self.data.u_aon,
                       self.data.allopen_served)
        else:
            self.nonconverged += 1
            for a, xa in enumerate(sol.x):
                add_oa_cut(self.pools.oa, self.net, a, float(xa))
        if obj < self.ub - 1e-12 or (abs(obj - self.ub) <= 1e-12 and design < (self.best_y or design)):
            self.ub, self.best_y = obj, design
        return obj

    def relax(self, node: BBNode):
        for _ in range(50):
            rel = solve_node_relaxation(node.fixed_zero, node.fixed_one, self.pools, self.data, self.warm)
            self.t_lp += rel.lp_seconds
            self.t_price += rel.pricing_seconds
            if rel.status == INFEASIBLE or rel.proven:
                return rel
        raise RuntimeError("column generation did not converge")

    def audit_vf(self) -> int:
        """Count (design, cut) pairs where a cut excludes an evaluated equilibrium."""
        arrays = self.net.link_arrays()
        t = self.cfg.charge_value
        bad = 0
        for design, (sol, _) in self.evaluated.items():
            if not sol.converged:
                continue
            eta = float(beckmann_integrals(arrays, sol.x).sum())
            for cut in self.pools.vf.cuts:
                if cut.slack(eta, sol.v, design, t) < -1e-6 * (1 + abs(cut.rhs_L)):
                    bad += 1
        return bad


def run_bpc(net: PhysicalNetwork, demand: DemandTable, cfg: InstanceConfig) -> BpcResult:
    s = _Solver(net, demand, cfg)
    n = len(net.candidates)
    seq = itertools.count()
    frontier: list[tuple[float, int, BBNode]] = []
    heapq.heappush(frontier, (-np.inf, next(seq), BBNode()))
    trace: list[TraceRow] = []
    last_lb = -np.inf
    root_lb = -np.inf
    status = "optimal"
    node_index = 0

    def global_lb() -> float:
        front = frontier[0][0] if frontier else np.inf
        return min(s.ub, front)

    def record(node: BBNode, node_lb: float, t0: float, kind: str, fathom: str) -> None:
        nonlocal last_lb, node_index
        glb = global_lb()
        if glb < last_lb - 1e-9 * (1 + abs(last_lb)):
            raise AssertionError(f"global lower bound decreased: {last_lb} -> {glb}")
        last_lb = max(last_lb, glb)
        trace.append(TraceRow(node_index, node_lb, last_lb, s.ub, gap_percent(s.ub, last_lb),
                              len(s.pools.paths), len(s.pools.oa), len(s.pools.vf),
                              time.perf_counter() - t0, kind, fathom, node.depth))
        node_index += 1

    def done() -> bool:
        lb = global_lb()
        if s.ub - lb <= cfg.epsilon:
            return True
        return cfg.gap_tol_pct is not None and gap_percent(s.ub, lb) <= cfg.gap_tol_pct

    while frontier:
        if time.perf_counter() - s.t_start > cfg.time_limit:
            status = "time_limit"
            break
        if done() and np.isfinite(s.ub):
            status = "optimal" if s.ub - global_lb() <= cfg.epsilon else "gap"
            break
        parent_lb, _, node = heapq.heappop(frontier)
        t0 = time.perf_counter()
        if parent_lb >= s.ub - FATHOM_TOL:
            record(node, parent_lb, t0, "queued", "bound")
            continue
        chk = check_node(node, net, cfg)
        if chk.kind == "infeasible":
            record(node, np.inf, t0, "infeasible", "infeasible")
            continue
        if chk.kind == "fixed":
            obj = s.evaluate(chk.design)
            record(node, obj, t0, "fixed", "evaluated")
            continue
        rel = s.relax(node)
        if rel.status == INFEASIBLE:
            record(node, np.inf, t0, "unfixed", "infeasible")
            continue
        node_lb = max(rel.lb, parent_lb)
        if node.depth == 0:
            root_lb = rel.lb
        msol = rel.msol
        # integral relaxations: evaluate the design and re-solve with the new cuts
        for _ in range(5):
            y = msol.y
            if np.any(np.abs(y - np.round(y)) > INTEGRAL_TOL):
                break
            design = tuple(int(round(v)) for v in y)
            if design in s.evaluated or float(net.candidate_costs @ np.array(design)) > cfg.budget + FATHOM_TOL:
                break
            s.evaluate(design)
            if node_lb >= s.ub - FATHOM_TOL:
                break
            rel = s.relax(node)
            node_lb = max(rel.lb, node_lb)
            msol = rel.msol
        if node_lb < s.ub - FATHOM_TOL:
            s.evaluate(rounded_design(msol, node, net.candidate_costs, cfg.budget))
        if node_lb >= s.ub - FATHOM_TOL:
            record(node, node_lb, t0, "unfixed", "bound")
            continue
        try:
            l = select_branch_variable(msol, node)
        except ValueError:
            l = _branch_on_integral(msol, node)
        one = BBNode(node.fixed_zero, node.fixed_one | {l}, node_lb, node.depth + 1)
        zero = BBNode(node.fixed_zero | {l}, node.fixed_one, node_lb, node.depth + 1)
        heapq.heappush(frontier, (node_lb, next(seq), one))
        heapq.heappush(frontier, (node_lb, next(seq), zero))
        record(node, node_lb, t0, "unfixed", "branched")

    lb = global_lb() if frontier else s.ub
    if status == "optimal" and frontier and s.ub - lb > cfg.epsilon:
        status = "gap"
    lb = max(lb, last_lb) if np.isfinite(s.ub) else lb
    lb = min(lb, s.ub)
    total = time.perf_counter() - s.t_start
    return BpcResult(
        best_y=s.best_y, ub=s.ub, lb=lb, gap_pct=gap_percent(s.ub, lb), nodes_processed=len(trace),
        trace=trace, status=status,
        timings={"total": total, "mtap": s.t_mtap, "cg": s.t_price, "hpr": s.t_lp},
        num_paths=len(s.pools.paths), num_oa_cuts=len(s.pools.oa), num_vf_cuts=len(s.pools.vf),
        designs_evaluated=len(s.evaluated), root_lb=root_lb, vf_audit_violations=s.audit_vf(),
        nonconverged_mtap=s.nonconverged,
        evaluations={d: obj for d, (_, obj) in s.evaluated.items()}, pools=s.pools, data=s.data,
    )

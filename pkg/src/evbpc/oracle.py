"""Brute-force reference: evaluate every budget-feasible design."""
from __future__ import annotations

from itertools import product
from typing import Iterator, Sequence

from .config import InstanceConfig
from .mtap import FlowSolution, solve_mtap, upper_level_value
from .network import DemandTable, PhysicalNetwork

TIE_TOL = 1e-9


class EnumerationCapError(ValueError):
    pass


def enumerate_designs(costs: Sequence[float], budget: float, cap: int = 22) -> Iterator[tuple[int, ...]]:
    """Binary vectors with ``sum(cost * y) <= budget``, in lexicographic order."""
    costs = [float(c) for c in costs]
    if len(costs) > cap:
        raise EnumerationCapError(f"{len(costs)} candidates exceed the enumeration cap of {cap}")
    for y in product((0, 1), repeat=len(costs)):
        if sum(c for c, b in zip(costs, y) if b) <= budget + 1e-9:
            yield y


def evaluate_all(net: PhysicalNetwork, demand: DemandTable, cfg: InstanceConfig
                 ) -> list[tuple[tuple[int, ...], float, FlowSolution]]:
    out = []
    for y in enumerate_designs(net.candidate_costs, cfg.budget, cfg.enum_cap):
        sol = solve_mtap(net, cfg, demand, y)
        out.append((y, upper_level_value(sol, demand, cfg), sol))
    return out


def brute_force_optimum(net: PhysicalNetwork, demand: DemandTable, cfg: InstanceConfig,
                        table: list | None = None) -> tuple[tuple[int, ...], float]:
    """Minimum upper-level value; ties go to the lexicographically smallest design."""
    rows = table if table is not None else evaluate_all(net, demand, cfg)
    best_y, best = None, float("inf")
    for y, obj, _ in rows:       # rows come in lexicographic order
        if best_y is None or obj < best - TIE_TOL * max(1.0, abs(best)):
            best_y, best = y, obj
    return best_y, best

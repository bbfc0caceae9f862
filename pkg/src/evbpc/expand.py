"""Battery-state expanded graph.

Vertices are ``(node, level)`` pairs, where ``level`` counts battery quanta of
size ``q``. A road arc exists only if the link's energy, rounded up to whole
quanta, fits in the remaining battery. A charging arc at an open station jumps
from ``(l, level)`` to ``(l, full)``. Every trip starts at full battery.
"""
from __future__ import annotations

import csv
import math
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .config import InstanceConfig
from .network import DemandTable, PhysicalNetwork


class ExpandedNode(NamedTuple):
    phys: int
    level: int


class ExpandedArc(NamedTuple):
    kind: str          # "road" or "charge"
    tail: int
    head: int
    link: int          # link id, -1 for charging arcs
    cand: int          # candidate index, -1 for road arcs
    duration: float    # charging hours, 0 for road arcs


def quantize_energy(energy: float, q: float) -> int:
    """Energy in whole quanta, rounded up."""
    return max(0, int(math.ceil(energy / q - 1e-9)))


def _csr(n: int, tails: np.ndarray, heads: np.ndarray, ids: np.ndarray):
    order = np.argsort(tails, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, tails + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, heads[order].astype(np.int64), ids[order].astype(np.int64)


@dataclass(eq=False)
class ExpandedGraph:
    nodes: list[ExpandedNode]
    node_index: dict[ExpandedNode, int]
    arc_tail: np.ndarray
    arc_head: np.ndarray
    arc_link: np.ndarray
    arc_cand: np.ndarray
    arc_duration: np.ndarray
    origin_entry: dict[int, int]
    dest_exit: dict[int, np.ndarray]
    levels: int
    quantum: float
    charge_rate: float
    open_stations: frozenset[int]     # candidate indices
    n_links: int
    n_candidates: int

    def __post_init__(self):
        n = len(self.nodes)
        ids = np.arange(len(self.arc_tail), dtype=np.int64)
        self.indptr, self.heads, self.arc_ids = _csr(n, self.arc_tail, self.arc_head, ids)
        road = self.arc_link >= 0
        self.road_indptr, self.road_heads, self.road_arc_ids = _csr(
            n, self.arc_tail[road], self.arc_head[road], ids[road])
        self.charge_arcs = ids[~road]
        self.is_road = road

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arc_tail)

    def arc(self, a: int) -> ExpandedArc:
        kind = "road" if self.arc_link[a] >= 0 else "charge"
        return ExpandedArc(kind, int(self.arc_tail[a]), int(self.arc_head[a]), int(self.arc_link[a]),
                           int(self.arc_cand[a]), float(self.arc_duration[a]))

    def arcs(self) -> list[ExpandedArc]:
        return [self.arc(a) for a in range(self.n_arcs)]

    def battery(self, u: int) -> float:
        return self.nodes[u].level * self.quantum

    def arc_costs(self, road_cost: np.ndarray, charge_cost_per_hour: np.ndarray) -> np.ndarray:
        """Per-arc costs: ``road_cost[link]`` on road arcs, ``rate[cand] * hours`` on charging arcs."""
        cost = np.zeros(self.n_arcs)
        road = self.is_road
        cost[road] = np.asarray(road_cost, dtype=float)[self.arc_link[road]]
        if self.charge_arcs.size:
            ca = self.charge_arcs
            cost[ca] = np.asarray(charge_cost_per_hour, dtype=float)[self.arc_cand[ca]] * self.arc_duration[ca]
        return cost

    def dest_csr(self, zones: list[int]) -> tuple[np.ndarray, np.ndarray]:
        ptr = [0]
        out: list[int] = []
        for z in zones:
            out.extend(self.dest_exit.get(z, np.empty(0, dtype=np.int64)).tolist())
            ptr.append(len(out))
        return np.array(ptr, dtype=np.int64), np.array(out, dtype=np.int64)


def open_candidates(net: PhysicalNetwork, stations: Iterable) -> frozenset[int]:
    """Map an ``open_stations`` spec to candidate indices.

    Accepts a 0/1 design vector aligned with ``net.candidates``, an iterable
    of candidate node ids, or a frozenset of candidate indices (returned as is).
    """
    if isinstance(stations, frozenset):
        if not all(0 <= i < len(net.candidates) for i in stations):
            raise ValueError("candidate index out of range")
        return stations
    stations = list(stations)
    cand_nodes = net.candidate_nodes
    if len(stations) == len(cand_nodes) and all(s in (0, 1, True, False) for s in stations) \
            and not set(stations) - {0, 1}:
        return frozenset(i for i, s in enumerate(stations) if s)
    pos = {n: i for i, n in enumerate(cand_nodes)}
    try:
        return frozenset(pos[int(s)] for s in stations)
    except KeyError as exc:
        raise ValueError(f"node {exc.args[0]} is not a candidate") from None


def expand_graph(net: PhysicalNetwork, cfg: InstanceConfig, open_stations: Iterable = (),
                 origins: Iterable[int] | None = None) -> ExpandedGraph:
    """Breadth-first closure from ``(r, full)`` for each origin and ``(l, full)`` per open station.

    ``origins`` defaults to every zone; pass the zones with outgoing demand to
    keep the graph to what trips can actually use.
    """
    is_open = open_candidates(net, open_stations)
    K = cfg.levels
    q = cfg.battery_quantum
    station_at = {net.candidates[i][0]: i for i in is_open}

    out_links: dict[int, list[tuple[int, int, int]]] = {n: [] for n in net.nodes}
    for lid, link in enumerate(net.links):
        out_links[link.tail].append((lid, link.head, quantize_energy(link.energy, q)))

    nodes: list[ExpandedNode] = []
    index: dict[ExpandedNode, int] = {}
    tails, heads, links, cands, durs = [], [], [], [], []

    def node(key: ExpandedNode) -> int:
        idx = index.get(key)
        if idx is None:
            idx = index[key] = len(nodes)
            nodes.append(key)
            queue.append(idx)
        return idx

    origins = list(net.zones) if origins is None else sorted(set(int(r) for r in origins))
    zones = set(net.zones)
    if not zones.issuperset(origins):
        raise ValueError("origins must be zones")
    queue: deque[int] = deque()
    for z in origins:
        node(ExpandedNode(z, K))
    for l in sorted(is_open):
        node(ExpandedNode(net.candidates[l][0], K))

    while queue:
        u = queue.popleft()
        i, b = nodes[u]
        for lid, j, e in out_links[i]:
            if b - e >= 0:
                w = node(ExpandedNode(j, b - e))
                tails.append(u); heads.append(w); links.append(lid); cands.append(-1); durs.append(0.0)
        if i in station_at and b < K:
            w = node(ExpandedNode(i, K))
            tails.append(u); heads.append(w); links.append(-1); cands.append(station_at[i])
            durs.append((K - b) * q / cfg.charge_rate)

    by_phys: dict[int, list[int]] = {}
    for idx, (i, _) in enumerate(nodes):
        by_phys.setdefault(i, []).append(idx)
    return ExpandedGraph(
        nodes=nodes, node_index=index,
        arc_tail=np.array(tails, dtype=np.int64), arc_head=np.array(heads, dtype=np.int64),
        arc_link=np.array(links, dtype=np.int64), arc_cand=np.array(cands, dtype=np.int64),
        arc_duration=np.array(durs, dtype=float),
        origin_entry={z: index[ExpandedNode(z, K)] for z in origins},
        dest_exit={z: np.array(sorted(v), dtype=np.int64) for z, v in by_phys.items() if z in zones},
        levels=K, quantum=q, charge_rate=cfg.charge_rate, open_stations=frozenset(is_open),
        n_links=len(net.links), n_candidates=len(net.candidates),
    )


def reachable_nodes(g: ExpandedGraph, source: int) -> np.ndarray:
    dist, _, _ = kernels.dijkstra(g.indptr, g.heads, g.arc_ids, np.ones(g.n_arcs), [source], [0.0])
    return np.isfinite(dist)


def reachable_od_pairs(g: ExpandedGraph, demand: DemandTable) -> dict[tuple[int, int], float]:
    """Effective demand: ``D_rs`` if some battery-feasible path exists, else 0."""
    out: dict[tuple[int, int], float] = {}
    by_origin: dict[int, list[tuple[int, float]]] = {}
    for (r, s), d in demand.entries.items():
        by_origin.setdefault(r, []).append((s, d))
    for r, pairs in by_origin.items():
        src = g.origin_entry.get(r)
        reach = reachable_nodes(g, src) if src is not None else None
        for s, d in pairs:
            if r == s:
                out[(r, s)] = d
                continue
            ok = reach is not None and s in g.dest_exit and bool(reach[g.dest_exit[s]].any())
            out[(r, s)] = d if ok else 0.0
    return out


def project_solution(g: ExpandedGraph, arc_flows) -> tuple[np.ndarray, np.ndarray]:
    """Collapse expanded-arc flows to link flows ``x`` and charging loads ``v``."""
    f = np.asarray(arc_flows, dtype=float)
    if f.shape != (g.n_arcs,):
        raise ValueError(f"expected {g.n_arcs} arc flows, got shape {f.shape}")
    if (f < 0).any():
        raise ValueError("arc flows must be nonnegative")
    road = g.is_road
    x = np.bincount(g.arc_link[road], weights=f[road], minlength=g.n_links)
    ca = g.charge_arcs
    v = np.bincount(g.arc_cand[ca], weights=f[ca] * g.arc_duration[ca], minlength=g.n_candidates)
    return x, v


@dataclass(frozen=True, eq=False)
class ExpandedPath:
    """A walk on an expanded graph, with its link-use counts and charging hours."""
    arcs: tuple[int, ...]
    od: tuple[int, int]
    delta: dict[int, int]
    gamma: dict[int, float]

    n_charges: int = 0
    visits: dict[int, int] = field(default_factory=dict)   # charging stops per station

    def key(self) -> tuple:
        return (self.od, self.arcs)


def make_path(g: ExpandedGraph, arcs, od: tuple[int, int]) -> ExpandedPath:
    arcs = tuple(int(a) for a in arcs)
    for a, b in zip(arcs, arcs[1:]):
        if g.arc_head[a] != g.arc_tail[b]:
            raise ValueError("arcs do not chain")
    delta: dict[int, int] = {}
    gamma: dict[int, float] = {}
    visits: dict[int, int] = {}
    stops = 0
    for a in arcs:
        lid = int(g.arc_link[a])
        if lid >= 0:
            delta[lid] = delta.get(lid, 0) + 1
        else:
            c = int(g.arc_cand[a])
            gamma[c] = gamma.get(c, 0.0) + float(g.arc_duration[a])
            visits[c] = visits.get(c, 0) + 1
            stops += 1
    return ExpandedPath(arcs, od, delta, gamma, stops, visits)


def write_graph_csv(g: ExpandedGraph, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "expanded_nodes.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "node", "battery"])
        for i, n in enumerate(g.nodes):
            w.writerow([i, n.phys, n.level * g.quantum])
    with open(os.path.join(directory, "expanded_arcs.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "kind", "tail", "head", "link", "candidate", "charge_hours"])
        for a in range(g.n_arcs):
            arc = g.arc(a)
            w.writerow([a, arc.kind, arc.tail, arc.head, arc.link, arc.cand, arc.duration])

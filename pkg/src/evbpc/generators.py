"""Synthetic instances: grids, rings, and an EMA-sized planar road network.

Every generator takes a seed and is deterministic. Link lengths double as
energy use, so ``battery_capacity`` relative to typical trip lengths decides
how many trips need a charging stop.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from .config import InstanceConfig
from .network import DemandTable, Link, PhysicalNetwork


@dataclass(frozen=True)
class Instance:
    net: PhysicalNetwork
    demand: DemandTable
    cfg: InstanceConfig
    name: str = ""


def _bidirectional(edges, lengths, rng, speed=1.0, cap_range=(50.0, 150.0)):
    links = []
    for (a, b), L in zip(edges, lengths):
        cap = float(rng.uniform(*cap_range))
        t0 = max(float(L) / speed, 1e-3)
        links.append(Link(int(a), int(b), t0, cap, float(L)))
        links.append(Link(int(b), int(a), t0, cap, float(L)))
    return tuple(links)


def _demand(rng, zones, n_pairs, lo, hi):
    pairs = [(r, s) for r in zones for s in zones if r != s]
    idx = rng.choice(len(pairs), size=min(n_pairs, len(pairs)), replace=False)
    return DemandTable({pairs[i]: float(np.round(rng.uniform(lo, hi), 1)) for i in sorted(idx)})


def _candidates(rng, nodes, k, cost_range):
    pick = sorted(rng.choice(np.array(nodes), size=k, replace=False).tolist())
    return tuple((int(n), float(np.round(rng.uniform(*cost_range), 1))) for n in pick)


def grid_network(rows: int, cols: int, rng: np.random.Generator, length_range=(2.0, 5.0)) -> PhysicalNetwork:
    nid = lambda r, c: r * cols + c + 1
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < rows:
                edges.append((nid(r, c), nid(r + 1, c)))
    lengths = np.round(rng.uniform(*length_range, size=len(edges)), 1)
    nodes = tuple(range(1, rows * cols + 1))
    return PhysicalNetwork(nodes, _bidirectional(edges, lengths, rng), nodes)


def ring_network(n: int, rng: np.random.Generator, chords: int = 1, length_range=(2.0, 5.0)) -> PhysicalNetwork:
    edges = [(i + 1, (i + 1) % n + 1) for i in range(n)]
    seen = {frozenset(e) for e in edges}
    while chords > 0:
        a, b = (int(v) + 1 for v in rng.choice(n, size=2, replace=False))
        if frozenset((a, b)) not in seen:
            seen.add(frozenset((a, b)))
            edges.append((a, b))
            chords -= 1
    lengths = np.round(rng.uniform(*length_range, size=len(edges)), 1)
    nodes = tuple(range(1, n + 1))
    return PhysicalNetwork(nodes, _bidirectional(edges, lengths, rng), nodes)


def planar_network(n_nodes: int, n_edges: int, rng: np.random.Generator, size: float = 100.0,
                   cap_range=(1500.0, 4000.0)) -> PhysicalNetwork:
    """Connected geometric graph: Euclidean MST plus the shortest remaining edges."""
    pts = rng.uniform(0, size, size=(n_nodes, 2))
    dist = squareform(pdist(pts))
    tree = minimum_spanning_tree(dist).tocoo()
    chosen = {(min(i, j), max(i, j)) for i, j in zip(tree.row.tolist(), tree.col.tolist())}
    iu, ju = np.triu_indices(n_nodes, 1)
    for k in np.argsort(dist[iu, ju], kind="stable"):
        if len(chosen) >= n_edges:
            break
        chosen.add((int(iu[k]), int(ju[k])))
    edges = sorted(chosen)
    lengths = [round(float(dist[i, j]), 2) for i, j in edges]
    edges = [(i + 1, j + 1) for i, j in edges]
    nodes = tuple(range(1, n_nodes + 1))
    return PhysicalNetwork(nodes, _bidirectional(edges, lengths, rng, speed=1.0, cap_range=cap_range), nodes)


def random_small_instance(seed: int, n_candidates: int | None = None) -> Instance:
    """Grid or ring with 6-12 nodes and 3-6 candidates; some trips need a charge."""
    rng = np.random.default_rng(seed)
    if seed % 2 == 0:
        rows, cols = [(2, 3), (3, 3), (2, 4), (3, 4), (2, 5), (2, 6)][int(rng.integers(6))]
        net = grid_network(rows, cols, rng)
        kind = f"grid{rows}x{cols}"
    else:
        n = int(rng.integers(6, 13))
        net = ring_network(n, rng, chords=int(rng.integers(1, 3)))
        kind = f"ring{n}"
    k = n_candidates or int(rng.integers(3, 7))
    net = net.with_candidates(_candidates(rng, net.nodes, k, (1.0, 3.0)))
    demand = _demand(rng, net.zones, int(rng.integers(3, 7)), 20.0, 120.0)
    total = float(net.candidate_costs.sum())
    cfg = InstanceConfig(
        budget=float(np.round(rng.uniform(0.3, 0.7) * total, 1)),
        charge_price=float(np.round(rng.uniform(0.5, 2.0), 2)),
        charge_value=float(np.round(rng.uniform(0.5, 2.0), 2)),
        unmet_weight=float(np.round(rng.uniform(1.0, 10.0), 2)),
        battery_capacity=float(rng.integers(6, 11)),
        battery_quantum=1.0,
        charge_rate=float(np.round(rng.uniform(4.0, 10.0), 1)),
        mtap_tol=1e-7,
    )
    return Instance(net, demand, cfg, f"{kind}-s{seed}")


def ema_like_instance(seed: int = 0, n_candidates: int = 10, n_pairs: int = 400,
                      demand_scale: float = 1.0) -> Instance:
    """74 nodes / 248 links with EMA-like size, moderate congestion and range limits."""
    rng = np.random.default_rng(seed)
    net = planar_network(74, 124, rng)
    net = net.with_candidates(_candidates(rng, net.nodes, n_candidates, (1.0, 5.0)))
    demand = _demand(rng, net.zones, n_pairs, 20.0 * demand_scale, 200.0 * demand_scale)
    cfg = InstanceConfig(budget=10.0, charge_price=1.0, charge_value=1.0, unmet_weight=5.0,
                         battery_capacity=60.0, battery_quantum=2.0, charge_rate=30.0)
    return Instance(net, demand, cfg, f"ema-like-s{seed}")


def twenty_candidate_instance(seed: int = 7) -> Instance:
    """4x5 grid with every node a candidate; budget admits well over 10^4 designs."""
    rng = np.random.default_rng(seed)
    net = grid_network(4, 5, rng, length_range=(2.0, 4.0))
    net = net.with_candidates(tuple((n, float(np.round(rng.uniform(1.0, 2.0), 1))) for n in net.nodes))
    demand = _demand(rng, net.zones, 8, 20.0, 80.0)
    cfg = InstanceConfig(budget=float(np.round(0.5 * net.candidate_costs.sum(), 1)),
                         charge_price=1.0, charge_value=1.0, unmet_weight=4.0,
                         battery_capacity=8.0, battery_quantum=1.0, charge_rate=8.0)
    return Instance(net, demand, cfg, f"twenty-s{seed}")


def line_instance(charge_rate: float = 6.0, demand: float = 100.0, **cfg_kw) -> Instance:
    """1 -> 2 -> 3 with 6 energy units per link and a single candidate at 2."""
    net = PhysicalNetwork((1, 2, 3), (Link(1, 2, 10.0, 100.0, 6.0), Link(2, 3, 10.0, 100.0, 6.0)),
                          (1, 2, 3), ((2, 1.0),))
    kw = dict(budget=1.0, battery_capacity=10.0, battery_quantum=1.0, charge_rate=charge_rate)
    kw.update(cfg_kw)
    return Instance(net, DemandTable({(1, 3): demand}), InstanceConfig(**kw), "line")

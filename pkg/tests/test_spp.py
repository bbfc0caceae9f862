import numpy as np
import pytest

from evbpc import _pykernels
from evbpc.config import InstanceConfig
from evbpc.expand import ExpandedNode, expand_graph
from evbpc.generators import ema_like_instance, line_instance
from evbpc.network import Link, PhysicalNetwork
from evbpc.spp import (
    CostView, NegativeCostError, enumerate_paths, extract_path, layered_walks, shortest_paths_one_to_all,
    walk_cost,
)

try:
    from evbpc import _ckernels
except ImportError:       # extension not built
    _ckernels = None


def tiny_instance(rng):
    """3-4 physical nodes, battery of 2 quanta: at most 12 expanded nodes."""
    n = int(rng.integers(3, 5))
    links = []
    for a in range(1, n + 1):
        for b in range(1, n + 1):
            if a != b and rng.random() < 0.5:
                links.append(Link(a, b, float(rng.uniform(0.5, 3)), 10.0, float(rng.integers(0, 3))))
    nodes = tuple(range(1, n + 1))
    k = int(rng.integers(1, n + 1))
    cands = tuple((int(c), 1.0) for c in sorted(rng.choice(n, size=k, replace=False) + 1))
    net = PhysicalNetwork(nodes, tuple(links), nodes, cands)
    cfg = InstanceConfig(battery_capacity=2.0, battery_quantum=1.0, charge_rate=float(rng.uniform(0.5, 2)))
    return net, cfg


def test_line_costs():
    inst = line_instance(charge_rate=6.0)
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    cv = CostView(np.array([10.0, 10.0]), np.array([3.0]))      # 3 per hour, 1 hour stop
    tree = shortest_paths_one_to_all(g, 1, cv)
    tree.check()
    assert tree.dist[g.node_index[ExpandedNode(3, 4)]] == pytest.approx(23.0)
    p = extract_path(tree, 3)
    kinds = [g.arc(a).kind for a in p.arcs]
    assert kinds == ["road", "charge", "road"]
    assert [g.nodes[g.arc_tail[a]] for a in p.arcs] == [ExpandedNode(1, 10), ExpandedNode(2, 4), ExpandedNode(2, 10)]
    assert p.gamma == {0: pytest.approx(1.0)}
    assert extract_path(tree, 1).arcs == ()
    assert walk_cost(g, p, tree.cost) == pytest.approx(23.0)


def test_single_arc_and_unreachable():
    inst = line_instance()
    g = expand_graph(inst.net, inst.cfg, (), origins=[1])
    tree = shortest_paths_one_to_all(g, 1, CostView(np.array([5.0, 5.0]), np.array([1.0])))
    assert tree.dist[g.node_index[ExpandedNode(2, 4)]] == 5.0
    assert extract_path(tree, 3) is None


def test_negative_cost_rejected():
    inst = line_instance()
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    with pytest.raises(NegativeCostError):
        shortest_paths_one_to_all(g, 1, CostView(np.array([-1.0, 5.0]), np.array([1.0])))
    with pytest.raises(NegativeCostError):
        layered_walks(g, 1, -np.ones(g.n_arcs), 1)


@pytest.mark.parametrize("seed", range(60))
def test_dijkstra_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    net, cfg = tiny_instance(rng)
    g = expand_graph(net, cfg, frozenset(range(len(net.candidates))))
    assert g.n_nodes <= 12
    cost = rng.uniform(0, 5, g.n_arcs)
    cost[rng.random(g.n_arcs) < 0.2] = 0.0            # ties and zero arcs
    for r in net.zones:
        tree = shortest_paths_one_to_all(g, r, cost)
        tree.check()
        for s in net.zones:
            paths = enumerate_paths(g, r, s)
            best = min((walk_cost(g, p, cost) for p in paths), default=np.inf)
            p = extract_path(tree, s)
            if not np.isfinite(best):
                assert p is None
            else:
                assert walk_cost(g, p, cost) == pytest.approx(best, abs=1e-12)


def bellman_ford_layers(g, src, cost, k):
    """Product graph (node, stops) relaxed to a fixed point; charging arcs go one stop up."""
    d = np.full((k + 1, g.n_nodes), np.inf)
    d[0, src] = 0.0
    for _ in range((k + 1) * g.n_nodes + 1):
        changed = False
        for a in range(g.n_arcs):
            t, h = g.arc_tail[a], g.arc_head[a]
            up = 0 if g.is_road[a] else 1
            for c in range(k + 1 - up):
                if d[c, t] + cost[a] < d[c + up, h] - 1e-12:
                    d[c + up, h] = d[c, t] + cost[a]
                    changed = True
        if not changed:
            return d
    raise AssertionError("no fixed point")


@pytest.mark.parametrize("seed", range(40))
def test_layered_walks_match_product_graph(seed):
    rng = np.random.default_rng(1000 + seed)
    net, cfg = tiny_instance(rng)
    g = expand_graph(net, cfg, frozenset(range(len(net.candidates))))
    cost = rng.uniform(0, 5, g.n_arcs)
    ca = g.charge_arcs
    cost[ca] = rng.uniform(-6, 3, ca.size)             # pricing duals: any sign on charging arcs
    k = int(rng.integers(0, 4))
    for r in net.zones:
        src = g.origin_entry[r]
        ref = bellman_ford_layers(g, src, cost, k)
        tree = layered_walks(g, r, cost, k)
        for s in net.zones:
            if s == r:
                continue
            exits = g.dest_exit.get(s, np.empty(0, dtype=int))
            want = ref[:, exits].min() if exits.size else np.inf
            val, p = tree.best(s)
            assert val == pytest.approx(want, abs=1e-9)
            if p is not None:
                assert walk_cost(g, p, cost) == pytest.approx(val, abs=1e-9)
                assert p.n_charges <= k
                for lval, lp in tree.per_layer(s):
                    assert walk_cost(g, lp, cost) == pytest.approx(lval, abs=1e-9)


def test_deterministic():
    inst = ema_like_instance(0)
    g = expand_graph(inst.net, inst.cfg, frozenset(range(10)))
    cost = np.round(np.random.default_rng(0).uniform(0, 3, g.n_arcs), 1)   # many ties
    a = shortest_paths_one_to_all(g, 1, cost)
    b = shortest_paths_one_to_all(g, 1, cost)
    assert np.array_equal(a.pred, b.pred) and np.array_equal(a.dist, b.dist)


@pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
@pytest.mark.parametrize("seed", range(5))
def test_compiled_kernels_match_python(seed):
    inst = ema_like_instance(seed, n_pairs=100)
    g = expand_graph(inst.net, inst.cfg, frozenset(range(10)))
    rng = np.random.default_rng(seed)
    cost = np.round(rng.uniform(0, 3, g.n_arcs), 1)
    srcs = [g.origin_entry[z] for z in inst.net.zones[:5]]
    d1, p1, o1 = _pykernels.dijkstra(g.indptr, g.heads, g.arc_ids, cost, srcs, [0.0] * 5)
    d2, p2, o2 = _ckernels.dijkstra(g.indptr, g.heads, g.arc_ids, cost, srcs, [0.0] * 5)
    assert np.array_equal(d1, d2) and np.array_equal(p1, p2) and np.array_equal(o1, o2)
    zones = list(inst.net.zones)
    ptr, nodes = g.dest_csr(zones)
    origins = np.array([g.origin_entry[z] for z in zones[:10]], dtype=np.int64)
    dem = rng.uniform(0, 10, (10, len(zones))) * (rng.random((10, len(zones))) < 0.3)
    f1, c1 = _pykernels.aon_assign(g.indptr, g.heads, g.arc_ids, cost, g.arc_tail, origins, ptr, nodes, dem)
    f2, c2 = _ckernels.aon_assign(g.indptr, g.heads, g.arc_ids, cost, g.arc_tail, origins, ptr, nodes, dem)
    np.testing.assert_allclose(f1, f2, rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(c1, c2)

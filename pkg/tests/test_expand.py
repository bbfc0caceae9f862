import csv

import numpy as np
import pytest

from evbpc.config import InstanceConfig
from evbpc.expand import (
    ExpandedNode, expand_graph, make_path, open_candidates, project_solution, quantize_energy,
    reachable_od_pairs, write_graph_csv,
)
from evbpc.generators import ema_like_instance, line_instance, random_small_instance
from evbpc.network import DemandTable


def reachable_keys(g, origin):
    from evbpc.expand import reachable_nodes
    mask = reachable_nodes(g, g.origin_entry[origin])
    return {g.nodes[i] for i in np.flatnonzero(mask)}


def test_quantize():
    assert quantize_energy(6.0, 1.0) == 6
    assert quantize_energy(5.01, 1.0) == 6
    assert quantize_energy(6.0, 4.0) == 2
    assert quantize_energy(0.0, 1.0) == 0


def test_line_without_station():
    inst = line_instance()
    g = expand_graph(inst.net, inst.cfg, (), origins=[1])
    assert reachable_keys(g, 1) == {ExpandedNode(1, 10), ExpandedNode(2, 4)}
    assert not any(n.phys == 3 for n in g.nodes)
    assert reachable_od_pairs(g, inst.demand) == {(1, 3): 0.0}


def test_line_with_station():
    inst = line_instance(charge_rate=6.0)
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    charge = [a for a in g.arcs() if a.kind == "charge"]
    assert len(charge) == 1
    a = charge[0]
    assert g.nodes[a.tail] == ExpandedNode(2, 4) and g.nodes[a.head] == ExpandedNode(2, 10)
    assert a.duration == pytest.approx(1.0)
    assert ExpandedNode(3, 4) in reachable_keys(g, 1)
    assert reachable_od_pairs(g, inst.demand) == {(1, 3): 100.0}


def test_intrazonal_feasible():
    inst = line_instance()
    g = expand_graph(inst.net, inst.cfg, ())
    assert reachable_od_pairs(g, DemandTable({(2, 2): 5.0}))[(2, 2)] == 5.0


def test_big_battery_mirrors_physical_graph():
    inst = random_small_instance(3)
    cfg = inst.cfg.replace(battery_capacity=1000.0, battery_quantum=1000.0 / 8)
    origin = inst.net.zones[0]
    g = expand_graph(inst.net, cfg, (), origins=[origin])
    phys = {n.phys for n in reachable_keys(g, origin)}
    assert phys == set(inst.net.nodes)           # generators build connected graphs


def test_road_arcs_respect_battery():
    inst = ema_like_instance(0)
    cfg = inst.cfg
    g = expand_graph(inst.net, cfg, frozenset(range(len(inst.net.candidates))))
    for a in g.arcs():
        t, h = g.nodes[a.tail], g.nodes[a.head]
        if a.kind == "road":
            need = quantize_energy(inst.net.links[a.link].energy, cfg.battery_quantum)
            assert h.level == t.level - need >= 0
        else:
            assert t.phys == h.phys and h.level == cfg.levels > t.level
            assert a.duration == pytest.approx((cfg.levels - t.level) * cfg.battery_quantum / cfg.charge_rate)


@pytest.mark.parametrize("seed", range(12))
def test_node_bound_and_monotone_reachability(seed):
    inst = random_small_instance(seed)
    net, cfg = inst.net, inst.cfg
    n_c = len(net.candidates)
    bound = len(net.nodes) * (cfg.b_max / cfg.battery_quantum + 1)
    rng = np.random.default_rng(seed)
    prev = None
    opened: list[int] = []
    for l in list(rng.permutation(n_c)) + [None]:
        g = expand_graph(net, cfg, frozenset(opened))
        assert g.n_nodes <= bound
        served = {od for od, d in reachable_od_pairs(g, inst.demand).items() if d > 0}
        if prev is not None:
            assert prev <= served
        prev = served
        if l is not None:
            opened.append(int(l))


def test_open_candidates_forms():
    inst = line_instance()
    assert open_candidates(inst.net, (1,)) == frozenset({0})
    assert open_candidates(inst.net, [2]) == frozenset({0})
    assert open_candidates(inst.net, frozenset()) == frozenset()
    with pytest.raises(ValueError):
        open_candidates(inst.net, [3])


def test_project_solution():
    inst = line_instance(charge_rate=6.0)
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    x, v = project_solution(g, np.zeros(g.n_arcs))
    assert not x.any() and not v.any()
    f = np.zeros(g.n_arcs)
    f[:] = 100.0                  # every arc lies on the single charged path
    x, v = project_solution(g, f)
    assert x.tolist() == [100.0, 100.0] and v.tolist() == [pytest.approx(100.0)]
    with pytest.raises(ValueError):
        project_solution(g, -f)


def test_project_sums_battery_copies():
    inst = random_small_instance(0)
    g = expand_graph(inst.net, inst.cfg, ())
    link = 0
    copies = np.flatnonzero(g.arc_link == link)
    assert len(copies) >= 2
    f = np.zeros(g.n_arcs)
    f[copies[0]], f[copies[1]] = 30.0, 70.0
    x, _ = project_solution(g, f)
    assert x[link] == 100.0


def test_make_path_counts():
    inst = line_instance(charge_rate=6.0)
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    p = make_path(g, [a for a in (0, 1, 2) if g.arc_link[a] == 0] + list(g.charge_arcs)
                  + [a for a in (0, 1, 2) if g.arc_link[a] == 1], (1, 3))
    assert p.delta == {0: 1, 1: 1} and p.gamma == {0: pytest.approx(1.0)} and p.visits == {0: 1}
    with pytest.raises(ValueError):
        make_path(g, list(reversed(p.arcs)), (1, 3))


def test_graph_dump(tmp_path):
    inst = line_instance(charge_rate=6.0)
    g = expand_graph(inst.net, inst.cfg, [2], origins=[1])
    write_graph_csv(g, tmp_path)
    with open(tmp_path / "expanded_arcs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["kind"] for r in rows].count("charge") == 1
    with open(tmp_path / "expanded_nodes.csv") as fh:
        assert len(list(csv.DictReader(fh))) == g.n_nodes


def test_origin_option_default_covers_all_zones():
    inst = line_instance()
    g = expand_graph(inst.net, InstanceConfig(battery_capacity=10.0), ())
    assert set(g.origin_entry) == {1, 2, 3}

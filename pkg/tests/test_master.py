import numpy as np
import pytest

from evbpc.config import InstanceConfig
from evbpc.generators import line_instance, random_small_instance
from evbpc.lp import OPTIMAL, solve_lp
from evbpc.master import (
    OACut, OAPool, PathPool, VFPool, active_stations, add_oa_cut, add_vf_cut, build_master_lp,
    prepare_master_data, read_master_solution, vf_big_m,
)
from evbpc.mtap import solve_mtap
from evbpc.network import DemandTable, Link, PhysicalNetwork, beckmann_integral_link
from evbpc.spp import extract_path, shortest_paths_one_to_all


def solve(data, pool, fixed_zero=(), fixed_one=(), oa=None, vf=None):
    idx = build_master_lp(frozenset(fixed_zero), frozenset(fixed_one), pool, oa or OAPool(), vf or VFPool(), data)
    lp = solve_lp(idx.model)
    assert lp.status == OPTIMAL
    return read_master_solution(idx, lp, data)


def charged_line_path(data):
    g = data.graph
    tree = shortest_paths_one_to_all(g, 1, np.ones(g.n_arcs))
    return extract_path(tree, 3)


def test_all_unmet_without_paths():
    net = PhysicalNetwork((1, 2), (Link(1, 2, 1.0, 10.0, 1.0),), (1, 2))
    cfg = InstanceConfig(unmet_weight=3.0)
    data = prepare_master_data(net, DemandTable({(1, 2): 100.0}), cfg)
    msol = solve(data, PathPool())
    assert msol.objective == pytest.approx(300.0)


def test_line_master_opens_station():
    inst = line_instance(charge_rate=6.0, charge_price=2.0, unmet_weight=3.0)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    pool = PathPool()
    pool.add(charged_line_path(data))
    msol = solve(data, pool)
    assert msol.objective == pytest.approx(-200.0)
    assert msol.y[0] == pytest.approx(1.0) and msol.h[0] == pytest.approx(100.0)
    assert msol.v[0] == pytest.approx(100.0)


def test_line_master_station_fixed_closed():
    inst = line_instance(charge_rate=6.0, charge_price=2.0, unmet_weight=3.0)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    pool = PathPool()
    pool.add(charged_line_path(data))
    msol = solve(data, pool, fixed_zero={0})
    assert msol.objective == pytest.approx(300.0)
    assert msol.h[0] == pytest.approx(0.0, abs=1e-9) and msol.v[0] == pytest.approx(0.0, abs=1e-9)


def test_relaxation_bound_below_every_design():
    # the root relaxation with all walks priced can never exceed a design's value
    inst = line_instance(charge_rate=6.0, charge_price=0.5, unmet_weight=0.2)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    pool = PathPool()
    pool.add(charged_line_path(data))
    lb = solve(data, pool).objective
    assert lb <= min(-0.5 * 100, 0.2 * 100) + 1e-9


def test_oa_examples():
    link = Link(1, 2, 10.0, 100.0, 6.0)
    at0 = OACut.at(0, link, 0.0)
    assert at0.slope == 10 and at0.intercept == 0
    cut = OACut.at(0, link, 100.0)
    assert cut.slope == pytest.approx(11.5) and cut.intercept == pytest.approx(-120.0)
    net = PhysicalNetwork((1, 2), (link,), (1, 2))
    pool = OAPool()
    assert add_oa_cut(pool, net, 0, 100.0) == 0
    assert add_oa_cut(pool, net, 0, 100.0) is None and len(pool) == 1


@pytest.mark.parametrize("seed", range(10))
def test_oa_cuts_underestimate(seed):
    rng = np.random.default_rng(seed)
    inst = random_small_instance(seed)
    net = inst.net
    pool = OAPool()
    for a in range(len(net.links)):
        for x1 in rng.uniform(0, 3 * net.links[a].capacity, 5):
            add_oa_cut(pool, net, a, float(x1))
    for _ in range(1000):
        a = int(rng.integers(len(net.links)))
        x = float(rng.uniform(0, 5 * net.links[a].capacity))
        assert pool.bound(a, x) <= beckmann_integral_link(net.links[a], x) + 1e-9


def test_vf_cut_examples():
    inst = line_instance(charge_rate=6.0)
    net, cfg = inst.net, inst.cfg
    data = prepare_master_data(net, inst.demand, cfg)
    closed = solve_mtap(net, cfg, DemandTable({(1, 3): 0.0}), (0,))
    pool, oa = VFPool(), OAPool()
    k = add_vf_cut(pool, oa, closed, net, cfg, 1000.0, {})
    assert pool.cuts[k].active_set == frozenset()
    sol = solve_mtap(net, cfg, inst.demand, (1,))
    k = add_vf_cut(pool, oa, sol, net, cfg, 1000.0, data.allopen_served)
    cut = pool.cuts[k]
    assert cut.active_set == frozenset({0}) and cut.extra == frozenset()
    eta = sum(beckmann_integral_link(l, 100.0) for l in net.links)
    assert cut.slack(eta, sol.v, (1,), cfg.charge_value) == pytest.approx(0.0, abs=1e-6)
    # with the station closed the cut relaxes by M
    assert cut.slack(eta + 50.0, sol.v, (0,), cfg.charge_value) > 0
    assert cut.slack(eta + 50.0, sol.v, (1,), cfg.charge_value) < 0
    assert add_vf_cut(pool, oa, sol, net, cfg, 1000.0, data.allopen_served) is None
    assert len(pool) == 2


def test_vf_cut_steps_aside_when_closing_loses_demand():
    inst = line_instance(charge_rate=6.0)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    sol = solve_mtap(inst.net, inst.cfg, inst.demand, (0,))          # trip infeasible
    pool = VFPool()
    cut = pool.cuts[add_vf_cut(pool, OAPool(), sol, inst.net, inst.cfg, 1000.0, data.allopen_served)]
    assert cut.extra == frozenset({0})
    open_sol = solve_mtap(inst.net, inst.cfg, inst.demand, (1,))
    assert cut.slack(inst.net.links[0].free_flow_time * 200, open_sol.v, (1,), 1.0) >= 0


def test_vf_requires_convergence():
    inst = line_instance()
    sol = solve_mtap(inst.net, inst.cfg, inst.demand, (1,))
    sol.converged = False
    with pytest.raises(ValueError):
        add_vf_cut(VFPool(), OAPool(), sol, inst.net, inst.cfg, 1.0, {})


def test_big_m_rule():
    assert vf_big_m(100.0, 50.0, 2, 10.0) == (1000.0, 1000.0)
    assert vf_big_m(10.0, 500.0, 1, 10.0) == (4990.0,)
    assert active_stations(np.array([0.0, 1e-9, 2.0])) == frozenset({2})


def test_master_row_layout_and_duals():
    inst = random_small_instance(2)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    pool = PathPool()
    g = data.graph
    for r, s in data.od_pairs:
        p = extract_path(shortest_paths_one_to_all(g, r, np.ones(g.n_arcs)), s)
        pool.add(p)
    msol = solve(data, pool)
    names = [c.name for c in build_master_lp(frozenset(), frozenset(), pool, OAPool(), VFPool(), data).model.constraints]
    assert names[0] == "budget" and any(n.startswith("odlink[") for n in names)
    assert min(msol.sigma.values()) >= -1e-9 and msol.zeta.min() >= -1e-9
    assert min(msol.mu.values(), default=0.0) >= -1e-9


def test_linking_bound_per_station():
    inst = line_instance(charge_rate=5.0, battery_capacity=10.0)
    data = prepare_master_data(inst.net, inst.demand, inst.cfg)
    assert data.link_m.tolist() == [pytest.approx(10.0 / 5.0 * 100.0)]
    data = prepare_master_data(inst.net, inst.demand, inst.cfg.replace(big_m=7.0))
    assert data.link_m.tolist() == [7.0]

import numpy as np
import pytest

from evbpc.config import InstanceConfig
from evbpc.generators import line_instance, random_small_instance
from evbpc.mtap import lower_level_value, solve_mtap, upper_level_value
from evbpc.network import DemandTable, Link, PhysicalNetwork, beckmann_integral_link


def test_zero_demand():
    inst = line_instance(demand=0.0)
    sol = solve_mtap(inst.net, inst.cfg, inst.demand, (1,))
    assert not sol.x.any() and not sol.v.any()
    assert sol.L_value == 0 and sol.rel_gap == 0 and sol.converged
    assert lower_level_value(sol, inst.net) == 0


def test_line_closed_form():
    inst = line_instance(charge_rate=6.0, charge_value=2.0, charge_price=3.0, unmet_weight=4.0)
    sol = solve_mtap(inst.net, inst.cfg, inst.demand, (1,))
    assert sol.converged
    np.testing.assert_allclose(sol.x, [100.0, 100.0])
    np.testing.assert_allclose(sol.v, [100.0])
    want = sum(beckmann_integral_link(l, 100.0) for l in inst.net.links) + 2.0 * 100.0
    assert sol.L_value == pytest.approx(want, rel=1e-12)
    assert lower_level_value(sol, inst.net) == pytest.approx(want, rel=1e-12)
    assert upper_level_value(sol, inst.demand, inst.cfg) == pytest.approx(-300.0)


def test_line_closed_station():
    inst = line_instance(unmet_weight=4.0)
    sol = solve_mtap(inst.net, inst.cfg, inst.demand, (0,))
    assert not sol.v.any() and sol.served[(1, 3)] == 0
    assert upper_level_value(sol, inst.demand, inst.cfg) == pytest.approx(400.0)


def test_no_charging_needed_zero_objective():
    net = PhysicalNetwork((1, 2), (Link(1, 2, 1.0, 10.0, 1.0),), (1, 2))
    sol = solve_mtap(net, InstanceConfig(), DemandTable({(1, 2): 5.0}), ())
    assert upper_level_value(sol, DemandTable({(1, 2): 5.0}), InstanceConfig()) == 0.0


def test_parallel_links_split_evenly():
    # two routes 1->2->4 and 1->3->4 with identical links
    links = tuple(Link(a, b, 5.0, 50.0, 1.0) for a, b in ((1, 2), (2, 4), (1, 3), (3, 4)))
    net = PhysicalNetwork((1, 2, 3, 4), links, (1, 2, 3, 4))
    cfg = InstanceConfig(battery_capacity=10.0, mtap_tol=1e-8)
    sol = solve_mtap(net, cfg, DemandTable({(1, 4): 100.0}), ())
    assert sol.converged
    assert sol.x[0] == pytest.approx(50.0, rel=1e-3) and sol.x[2] == pytest.approx(50.0, rel=1e-3)


@pytest.mark.parametrize("seed", range(8))
def test_tight_tolerance_self_oracle(seed):
    inst = random_small_instance(seed)
    y = tuple(1 for _ in inst.net.candidates)
    loose = solve_mtap(inst.net, inst.cfg.replace(mtap_tol=1e-5), inst.demand, y)
    tight = solve_mtap(inst.net, inst.cfg.replace(mtap_tol=1e-9, mtap_max_iter=20000), inst.demand, y)
    assert loose.converged
    assert loose.L_value == pytest.approx(tight.L_value, rel=1e-4)


@pytest.mark.parametrize("seed", range(8))
def test_conjugate_variant_agrees(seed):
    inst = random_small_instance(seed)
    y = tuple(1 for _ in inst.net.candidates)
    fw = solve_mtap(inst.net, inst.cfg.replace(mtap_tol=1e-8, mtap_max_iter=20000), inst.demand, y)
    cfw = solve_mtap(inst.net, inst.cfg.replace(mtap_tol=1e-8, mtap_method="cfw"), inst.demand, y)
    assert cfw.converged
    assert cfw.L_value == pytest.approx(fw.L_value, rel=1e-5)
    assert cfw.iterations <= fw.iterations


@pytest.mark.parametrize("method", ["fw", "cfw"])
@pytest.mark.parametrize("seed", range(6))
def test_objective_monotone_and_closed_stations_idle(seed, method):
    inst = random_small_instance(seed)
    rng = np.random.default_rng(seed)
    y = tuple(int(b) for b in rng.integers(0, 2, len(inst.net.candidates)))
    sol = solve_mtap(inst.net, inst.cfg.replace(mtap_method=method), inst.demand, y)
    h = np.array(sol.history)
    assert (np.diff(h) <= 1e-9 * np.maximum(1.0, np.abs(h[:-1]))).all()
    assert (np.array(sol.gap_history) >= 0).all()
    for l, open_ in enumerate(y):
        if not open_:
            assert sol.v[l] == 0.0


def test_served_matches_reachability():
    inst = line_instance()
    assert solve_mtap(inst.net, inst.cfg, inst.demand, (1,)).total_served == 100.0
    assert solve_mtap(inst.net, inst.cfg, inst.demand, (0,)).total_served == 0.0

import pathlib

import numpy as np
import pytest
import scipy.sparse as sp

from evbpc.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpModel, solve_lp
from oracles import lp_vertex_enumeration

DATA = pathlib.Path(__file__).parent / "data"


def random_lp(rng):
    """At most 6 variables and 6 rows; mixes senses, free and bounded variables."""
    n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    A = np.round(rng.normal(size=(m, n)), 1) * (rng.random((m, n)) < 0.7)
    senses = list(rng.choice(["<=", ">=", "="], size=m, p=[0.45, 0.4, 0.15]))
    if rng.random() < 0.5:
        x0 = rng.uniform(-1, 2, n)
        sign = np.select([np.array(senses) == "<=", np.array(senses) == ">="], [1.0, -1.0], 0.0)
        b = np.round(A @ x0 + sign * np.round(rng.uniform(0, 2, m), 1), 3)
    else:
        b = np.round(rng.normal(size=m) * 3, 1)
    c = np.round(rng.normal(size=n), 1)
    lo = np.where(rng.random(n) < 0.8, np.round(rng.uniform(-3, 0, n), 1), -np.inf)
    hi = np.where(rng.random(n) < 0.6, np.round(rng.uniform(0.5, 4, n), 1), np.inf)
    return A, b, senses, c, lo, hi


def build(A, b, senses, c, lo, hi):
    mod = LpModel()
    for j in range(len(c)):
        mod.add_var(f"x{j}", lo[j], hi[j], c[j])
    for i in range(len(b)):
        mod.add_constraint(f"r{i}", {j: A[i, j] for j in range(len(c))}, senses[i], b[i])
    return mod


def lp_from_npz(path):
    import scipy.sparse as sp
    z = np.load(path)
    A = sp.coo_matrix((z["val"], (z["row"], z["col"])), shape=tuple(z["shape"])).tocsr()
    mod = LpModel(obj_constant=float(z["const"]))
    for name, lo, hi, c in zip(z["var_names"], z["lo"], z["hi"], z["c"]):
        mod.add_var(str(name), lo, hi, c)
    for i, (name, sense, rhs) in enumerate(zip(z["row_names"], z["senses"], z["b"])):
        row = A.getrow(i)
        mod.add_constraint(str(name), dict(zip(row.indices.tolist(), row.data.tolist())), str(sense), rhs)
    warm = {"vars": {str(n): str(s) for n, s in zip(z["var_names"], z["warm_vars"]) if s},
            "rows": {str(n): str(s) for n, s in zip(z["row_names"], z["warm_rows"]) if s}}
    return mod, warm


def test_one_variable():
    mod = LpModel()
    x = mod.add_var("x", -np.inf, np.inf, 1.0)
    mod.add_constraint("c", {x: 1.0}, ">=", 3.0)
    sol = solve_lp(mod)
    assert sol.status == OPTIMAL and sol.x[0] == pytest.approx(3.0)
    assert sol.duals[0] == pytest.approx(1.0)


def test_box_simplex():
    mod = LpModel()
    x = mod.add_var("x", 0, 1, -1.0)
    y = mod.add_var("y", 0, 1, -1.0)
    mod.add_constraint("c", {x: 1.0, y: 1.0}, "<=", 1.0)
    sol = solve_lp(mod)
    assert sol.objective == pytest.approx(-1.0)
    assert abs(sol.objective - float(mod.constraints[0].rhs * sol.duals[0])) <= 1e-6


def test_statuses():
    mod = LpModel()
    x = mod.add_var("x", 0, np.inf, -1.0)
    assert solve_lp(mod).status == UNBOUNDED
    mod.add_constraint("c", {x: 1.0}, "<=", -1.0)
    assert solve_lp(mod).status == INFEASIBLE


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(20261014)
    counts = {}
    for _ in range(500):
        A, b, senses, c, lo, hi = random_lp(rng)
        want, val = lp_vertex_enumeration(A, b, senses, c, lo, hi)
        got = solve_lp(build(A, b, senses, c, lo, hi))    # certification asserts run inside
        counts[want] = counts.get(want, 0) + 1
        assert got.status == want
        if want == OPTIMAL:
            assert abs(got.objective - val) <= 1e-6 * (1 + abs(val))
    assert counts.get(OPTIMAL, 0) >= 150 and counts.get(INFEASIBLE, 0) >= 20


def test_warm_start_same_optimum():
    rng = np.random.default_rng(5)
    done = 0
    while done < 50:
        A, b, senses, c, lo, hi = random_lp(rng)
        mod = build(A, b, senses, c, lo, hi)
        first = solve_lp(mod)
        if first.status != OPTIMAL:
            continue
        done += 1
        mod.add_constraint("extra", {j: float(rng.normal()) for j in range(len(c))}, "<=", float(rng.uniform(0, 2)))
        cold, warm = solve_lp(mod), solve_lp(mod, warm_start=first.basis)
        assert cold.status == warm.status
        if cold.status == OPTIMAL:
            assert warm.objective == pytest.approx(cold.objective, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_highs_backend_agrees(seed):
    rng = np.random.default_rng(100 + seed)
    A, b, senses, c, lo, hi = random_lp(rng)
    mod = build(A, b, senses, c, lo, hi)
    a, h = solve_lp(mod), solve_lp(mod, backend="highs")
    assert a.status == h.status
    if a.status == OPTIMAL:
        assert a.objective == pytest.approx(h.objective, abs=1e-7)


@pytest.mark.parametrize("name", ["stall2", "stall3"])
def test_degenerate_master_regression(name):
    # masters that cycled under Bland's rule before bound perturbation existed
    mod, warm = lp_from_npz(DATA / f"{name}_lp.npz")
    ref = solve_lp(mod, backend="highs")
    for start in (None, warm):
        sol = solve_lp(mod, warm_start=start)
        assert sol.status == OPTIMAL
        assert sol.objective == pytest.approx(ref.objective, rel=1e-8)


def test_lp_text_dump():
    mod = LpModel()
    x = mod.add_var("x[0]", 0, 2, 1.5)
    mod.add_var("y", -np.inf, np.inf, 0.0)
    mod.add_constraint("c[0]", {x: -1.0}, ">=", -1.0)
    text = mod.to_lp_text()
    assert text.startswith("Minimize\n obj: 1.5 x(0)\nSubject To\n c(0): - 1.0 x(0) >= -1.0\n")
    assert " -inf <= y <= +inf" in text and text.endswith("End\n")


def test_model_validation():
    mod = LpModel()
    mod.add_var("x")
    with pytest.raises(ValueError):
        mod.add_var("x")
    with pytest.raises(ValueError):
        mod.add_var("z", 1, 0)
    with pytest.raises(ValueError):
        mod.add_constraint("c", {3: 1.0}, "<=", 0)
    with pytest.raises(ValueError):
        mod.add_constraint("c", {0: 1.0}, "<", 0)


def test_block_inverse_matches_dense():
    from evbpc.lp import AT_LOWER, BASIC, _Simplex
    rng = np.random.default_rng(5)
    for _ in range(30):
        m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        A = sp.random(m, n, density=0.6, random_state=rng) + sp.eye(m, n)
        Af = sp.hstack([A, sp.identity(m)], format="csc")
        status = np.full(n + m, AT_LOWER, dtype=np.int64)
        basic = rng.choice(n + m, m, replace=False)
        status[basic] = BASIC
        B = Af[:, np.sort(basic)].toarray()
        if abs(np.linalg.det(B)) < 1e-6:
            continue
        N = n + m
        s = _Simplex(Af, np.ones(m), np.zeros(N), np.zeros(N), np.full(N, np.inf), status, 100)
        assert np.allclose(s.Binv @ B, np.eye(m), atol=1e-9)
        assert s.condition() == pytest.approx(np.linalg.cond(B, 1), rel=1e-9)

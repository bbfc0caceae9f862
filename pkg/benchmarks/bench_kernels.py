"""Compare the compiled and pure-Python kernels on an EMA-sized expanded graph.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times one Dijkstra sweep from every origin and one all-or-nothing load, and
checks that both backends return the same distances and flows.
"""
import argparse
import time

import numpy as np

from evbpc import _pykernels
from evbpc.expand import expand_graph
from evbpc.generators import ema_like_instance

try:
    from evbpc import _ckernels
except ImportError:  # not built
    _ckernels = None


def _problem():
    inst = ema_like_instance(seed=0)
    net, cfg = inst.net, inst.cfg
    od = [(r, s, d) for (r, s), d in inst.demand.positive() if r != s]
    origins = sorted({r for r, _, _ in od})
    g = expand_graph(net, cfg, frozenset(range(len(net.candidates))), origins)
    dests = sorted({s for _, s, _ in od})
    oi = {r: i for i, r in enumerate(origins)}
    di = {s: j for j, s in enumerate(dests)}
    dem = np.zeros((len(origins), len(dests)))
    for r, s, d in od:
        dem[oi[r], di[s]] = d
    cost = g.arc_costs(net.link_arrays()["t0"], np.full(len(net.candidates), cfg.charge_value))
    src = np.array([g.origin_entry[r] for r in origins], dtype=np.int64)
    dptr, dnodes = g.dest_csr(dests)
    return g, cost, src, dptr, dnodes, dem


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    g, cost, src, dptr, dnodes, dem = _problem()
    print(f"expanded graph: {g.n_nodes} nodes, {g.n_arcs} arcs, {len(src)} origins")
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    results = {}
    for name, k in backends:
        t_sp, d = _time(lambda: [k.dijkstra(g.indptr, g.heads, g.arc_ids, cost, [s], [0.0])[0] for s in src],
                        args.repeat)
        t_aon, f = _time(lambda: k.aon_assign(g.indptr, g.heads, g.arc_ids, cost, g.arc_tail,
                                              src, dptr, dnodes, dem), args.repeat)
        results[name] = (t_sp, t_aon, d, f)
        print(f"{name:7s} dijkstra x{len(src)}: {t_sp * 1e3:9.2f} ms   aon: {t_aon * 1e3:9.2f} ms")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        same_d = all(np.array_equal(a, b) for a, b in zip(py[2], cy[2]))
        same_f = np.allclose(py[3][0], cy[3][0], rtol=0, atol=1e-9)
        print(f"speedup: dijkstra {py[0] / cy[0]:.1f}x, aon {py[1] / cy[1]:.1f}x; "
              f"identical distances: {same_d}, identical flows: {same_f}")
    else:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()

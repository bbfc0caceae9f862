"""Command-line entry point: ``evbpc --net N --trips T --candidates C --config F --mode bpc``.

Writes ``result.json`` to ``--out`` (and ``trace.csv`` in bpc mode). Any
failure prints ``error: <ErrorName>: <message>`` and exits nonzero.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from .bpc import BpcResult, run_bpc
from .config import InstanceConfig, load_config
from .mtap import solve_mtap, upper_level_value
from .network import load_instance
from .oracle import enumerate_designs, evaluate_all, brute_force_optimum

log = logging.getLogger("evbpc")

TRACE_COLUMNS = ("node_index", "node_lb", "global_lb", "global_ub", "gap_pct",
                 "num_paths", "num_oa_cuts", "num_vf_cuts", "phase_seconds")

# flag -> config field
OVERRIDES = {
    "budget": "budget", "price": "charge_price", "charge_value": "charge_value",
    "unmet_weight": "unmet_weight", "battery": "battery_capacity", "quantum": "battery_quantum",
    "charge_rate": "charge_rate", "epsilon": "epsilon", "time_limit": "time_limit",
}


class CliError(Exception):
    pass


class MissingFileError(CliError):
    pass


class InvalidDesignError(CliError):
    pass


class OutputDirError(CliError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evbpc", description=__doc__.splitlines()[0])
    p.add_argument("--net", required=True, help="TNTP network file")
    p.add_argument("--trips", required=True, help="TNTP trips file")
    p.add_argument("--candidates", help="CSV with header node_id,cost")
    p.add_argument("--config", help="key = value instance parameters")
    p.add_argument("--budget", type=float)
    p.add_argument("--price", type=float, help="charge price p per charging-hour")
    p.add_argument("--charge-value", type=float, help="user cost t per charging-hour")
    p.add_argument("--unmet-weight", type=float, help="penalty w per unserved vehicle")
    p.add_argument("--battery", type=float, help="battery capacity")
    p.add_argument("--quantum", type=float, help="battery quantization step")
    p.add_argument("--charge-rate", type=float, help="energy units per hour")
    p.add_argument("--epsilon", type=float, help="absolute stopping gap")
    p.add_argument("--time-limit", type=float, help="seconds")
    p.add_argument("--mode", choices=("bpc", "oracle", "mtap"), default="bpc")
    p.add_argument("--design", help="0/1 string, one character per candidate (mtap mode)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, help="recorded; the solvers are deterministic")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _require(path: str | None, flag: str) -> None:
    if path is not None and not os.path.isfile(path):
        raise MissingFileError(f"{flag}: no such file {path!r}")


def load_inputs(args):
    for flag in ("net", "trips", "candidates", "config"):
        _require(getattr(args, flag), "--" + flag)
    net, demand = load_instance(args.net, args.trips, args.candidates)
    cfg = load_config(args.config) if args.config else InstanceConfig()
    changes = {f: getattr(args, a) for a, f in OVERRIDES.items() if getattr(args, a) is not None}
    return net, demand, cfg.replace(**changes)


def parse_design(text: str | None, n: int) -> tuple[int, ...]:
    if text is None:
        raise InvalidDesignError("--design is required in mtap mode")
    text = text.strip()
    if len(text) != n:
        raise InvalidDesignError(f"design has {len(text)} entries, network has {n} candidates")
    if set(text) - {"0", "1"}:
        raise InvalidDesignError(f"design must be a 0/1 string, got {text!r}")
    return tuple(int(c) for c in text)


def _num(v):
    """JSON-safe float: infinities become null."""
    v = float(v)
    return v if math.isfinite(v) else None


def _ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OutputDirError(f"cannot create {path!r}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise OutputDirError(f"{path!r} is not writable")


def emit_trace(result: BpcResult, out_dir: str) -> str:
    _ensure_dir(out_dir)
    path = os.path.join(out_dir, "trace.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for row in result.trace:
            w.writerow([getattr(row, c) for c in TRACE_COLUMNS])
    return path


def bpc_payload(res: BpcResult) -> dict:
    return {
        "mode": "bpc",
        "objective": _num(res.ub),
        "design": list(res.best_y) if res.best_y is not None else None,
        "status": res.status,
        "lower_bound": _num(res.lb),
        "upper_bound": _num(res.ub),
        "gap_pct": _num(res.gap_pct),
        "root_lower_bound": _num(res.root_lb),
        "counts": {"nodes": res.nodes_processed, "paths": res.num_paths, "oa_cuts": res.num_oa_cuts,
                   "vf_cuts": res.num_vf_cuts, "designs_evaluated": res.designs_evaluated,
                   "nonconverged_mtap": res.nonconverged_mtap},
        "timings": dict(res.timings),
    }


def run(args) -> dict:
    t0 = time.perf_counter()
    net, demand, cfg = load_inputs(args)
    if args.mode == "bpc":
        res = run_bpc(net, demand, cfg)
        payload = bpc_payload(res)
        emit_trace(res, args.out)
    elif args.mode == "oracle":
        list(enumerate_designs(net.candidate_costs, cfg.budget, cfg.enum_cap))   # cap check up front
        table = evaluate_all(net, demand, cfg)
        y, obj = brute_force_optimum(net, demand, cfg, table)
        w = csv.writer(sys.stdout)
        w.writerow(["design", "objective", "converged"])
        for d, o, sol in table:
            w.writerow(["".join(map(str, d)), repr(o), int(sol.converged)])
        payload = {"mode": "oracle", "objective": _num(obj), "design": list(y),
                   "designs_enumerated": len(table),
                   "counts": {"nonconverged_mtap": sum(not s.converged for _, _, s in table)},
                   "timings": {"total": time.perf_counter() - t0}}
    else:
        y = parse_design(args.design, len(net.candidates))
        sol = solve_mtap(net, cfg, demand, y)
        payload = {"mode": "mtap", "objective": _num(upper_level_value(sol, demand, cfg)),
                   "design": list(y), "L_value": sol.L_value, "rel_gap": sol.rel_gap,
                   "converged": sol.converged, "iterations": sol.iterations,
                   "station_hours": [float(v) for v in sol.v],
                   "link_flows": [float(v) for v in sol.x], "served": sol.total_served,
                   "timings": {"total": time.perf_counter() - t0}}
    payload["config"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in asdict(cfg).items()}
    payload["seed"] = args.seed
    write_result(payload, args.out)
    return payload


def write_result(payload: dict, out_dir: str) -> str:
    _ensure_dir(out_dir)
    path = os.path.join(out_dir, "result.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except (CliError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

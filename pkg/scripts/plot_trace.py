"""Plot a bpc ``trace.csv``: bounds, gap and pool sizes against B&B node index.

    python3 scripts/plot_trace.py OUT/trace.csv [-o trace.png]
"""
import argparse
import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

NUMERIC = ("node_index", "node_lb", "global_lb", "global_ub", "gap_pct",
           "num_paths", "num_oa_cuts", "num_vf_cuts", "phase_seconds")


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = set(NUMERIC) - set(rows[0] if rows else NUMERIC)
    if missing:
        raise SystemExit(f"{path}: missing columns {sorted(missing)}")
    return {c: [float(r[c]) for r in rows] for c in NUMERIC}


def finite(xs, ys):
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    return [p[0] for p in pts], [p[1] for p in pts]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("trace")
    ap.add_argument("-o", "--output", default="trace.png")
    args = ap.parse_args(argv)
    t = read_trace(args.trace)
    n = t["node_index"]
    fig, (ax1, ax2, ax3) = plt.subplots(3, 1, figsize=(7, 9), sharex=True)
    ax1.plot(*finite(n, t["global_lb"]), label="global LB")
    ax1.plot(*finite(n, t["global_ub"]), label="global UB")
    ax1.set_ylabel("objective")
    ax1.legend()
    ax2.plot(*finite(n, t["gap_pct"]))
    ax2.set_ylabel("gap (%)")
    ax2.set_yscale("symlog", linthresh=1.0)
    ax3.plot(n, t["num_paths"], label="paths")
    ax3.plot(n, t["num_oa_cuts"], label="OA cuts")
    ax3.plot(n, t["num_vf_cuts"], label="VF cuts")
    ax3.set_ylabel("pool size")
    ax3.set_xlabel("B&B node")
    ax3.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()

"""Solve the bundled benchmarks under each guidance mode and print a table.

    python3 scripts/run_benchmarks.py [--timeout 120] [--csv out.csv] [--only car]
"""

from __future__ import annotations

import argparse
import csv
import sys

from hyra import modelio
from hyra.hnsolve import GUIDANCE, SolverConfig, hnsolve

# (model, k) pairs; k is the shortest bound with a plan
ROWS = [
    ("generator_linear_0", 3), ("generator_linear_1", 7), ("generator_linear_2", 11), ("generator_linear_3", 15),
    ("generator_linear_0_lock1", 2), ("generator_linear_1_lock1", 4), ("generator_linear_2_lock1", 6),
    ("car_linear_1", 6), ("car_linear_2", 5), ("car_linear_3", 5),
    ("dribble", 8), ("dribble", 12),
    ("generator_nonlinear_1", 7), ("generator_nonlinear_2", 11), ("car_nonlinear_1", 6),
]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--modes", nargs="+", choices=GUIDANCE, default=list(GUIDANCE))
    p.add_argument("--only", help="substring filter on model names")
    p.add_argument("--csv")
    args = p.parse_args(argv)
    out = []
    print(f"{'model':28} {'k':>3} {'mode':16} {'verdict':10} {'time':>8}  stats")
    for name, k in ROWS:
        if args.only and args.only not in name:
            continue
        doc = modelio.load_bundled(name)
        for mode in args.modes:
            cfg = SolverConfig(mode, k, doc.max_delay, doc.delta, timeout=args.timeout)
            r = hnsolve(doc.network, doc.goal, cfg)
            s = r.stats
            print(f"{name:28} {k:>3} {mode:16} {r.verdict:10} {s.seconds:8.2f}  {s.line()}", flush=True)
            out.append({"model": name, "k": k, "mode": mode, "verdict": r.verdict, "seconds": round(s.seconds, 3),
                        "runs": s.runs, "learned": s.learned, "boxes": s.boxes})
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=list(out[0]))
            w.writeheader()
            w.writerows(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Increase k until a model becomes delta-sat; prints one line per bound.

    python3 scripts/k_sweep.py car_linear_2 --k-max 8
"""

from __future__ import annotations

import argparse
import sys

from hyra import modelio
from hyra.hnsolve import GUIDANCE, SolverConfig, hnsolve


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("model", help="bundled name or path")
    p.add_argument("--k-min", type=int, default=0)
    p.add_argument("--k-max", type=int, default=12)
    p.add_argument("--mode", choices=GUIDANCE, default="heuristic-learn")
    p.add_argument("--timeout", type=float, default=120.0)
    p.add_argument("--keep-going", action="store_true", help="do not stop at the first delta-sat bound")
    args = p.parse_args(argv)
    doc = modelio.parse_model(modelio.resolve_model(args.model))
    for k in range(args.k_min, args.k_max + 1):
        cfg = SolverConfig(args.mode, k, doc.max_delay, doc.delta, timeout=args.timeout)
        r = hnsolve(doc.network, doc.goal, cfg)
        print(f"k={k:<3} {r.verdict:10} {r.stats.line()}", flush=True)
        if r.verdict == "delta-sat" and not args.keep_going:
            labels = [",".join(sorted(l)) for l in r.run.labels]
            print("labels: " + " | ".join(labels))
            return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``hyra --model FILE [-k K] [-M M] [--delta D] ...``"""

from __future__ import annotations

import argparse
import sys

from . import modelio
from .encode import encode
from .hnsolve import GUIDANCE, SolverConfig, hnsolve

EXIT = {"delta-sat": 0, "unsat": 1, "unknown": 2}
USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyra", description="Bounded reachability for hybrid automata networks.")
    p.add_argument("--model", required=True, help="model file, or the name of a bundled model")
    p.add_argument("-k", type=int, help="unrolling bound (model default if absent)")
    p.add_argument("-M", type=float, dest="max_delay", help="per-step duration bound")
    p.add_argument("--delta", type=float)
    p.add_argument("--mode", choices=GUIDANCE, default="heuristic-learn")
    p.add_argument("--n-flow-steps", type=int, default=32)
    p.add_argument("--max-boxes", type=int, default=100_000)
    p.add_argument("--timeout", type=float)
    p.add_argument("--witness-out")
    p.add_argument("--dump-encoding")
    p.add_argument("--trace")
    p.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = modelio.parse_model(modelio.resolve_model(args.model))
    except (OSError, ValueError) as e:
        print(f"hyra: cannot load model {args.model}: {e}", file=sys.stderr)
        return USAGE
    k = doc.k if args.k is None else args.k
    m = doc.max_delay if args.max_delay is None else args.max_delay
    delta = doc.delta if args.delta is None else args.delta
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        cfg = SolverConfig(args.mode, k, m, delta, n_flow_steps=args.n_flow_steps,
                           max_boxes=args.max_boxes, threads=args.threads,
                           timeout=args.timeout, trace=trace)
    except ValueError as e:
        print(f"hyra: {e}", file=sys.stderr)
        return USAGE
    try:
        if args.dump_encoding:
            with open(args.dump_encoding, "w", encoding="utf-8") as f:
                f.write(encode(doc.network, doc.goal, k, m).dump())
        res = hnsolve(doc.network, doc.goal, cfg)
    finally:
        if trace is not None:
            trace.close()
    verdict = res.verdict if res.verdict != "unknown" else f"unknown ({res.reason})"
    print(f"verdict: {verdict}")
    print(res.stats.line())
    if res.run is not None:
        if args.witness_out:
            with open(args.witness_out, "w", encoding="utf-8") as f:
                f.write(modelio.serialize_witness(res.run))
            print(f"witness: {args.witness_out}")
        labels = [",".join(sorted(l)) or "-" for l in res.run.labels]
        print("labels: " + " | ".join(labels))
    return EXIT[res.verdict]


if __name__ == "__main__":
    sys.exit(main())

"""Time the corpus with and without equality elimination, and test equisatisfiability."""

import argparse
import sys

from tfit.checker import CheckConfig
from tfit.corpus import load_corpus
from tfit.experiments import equisatisfiability, run_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--timeout", type=float, default=10.0)
    ap.add_argument("--only", help="restrict to one corpus program by name")
    args = ap.parse_args()

    programs = [p for p in load_corpus() if not args.only or p.name == args.only]

    print(f"{'program':32} {'elim':>8} {'no elim':>8}  undecided without")
    on = run_corpus(CheckConfig(timeout=args.timeout), programs)
    off = run_corpus(CheckConfig(timeout=args.timeout, eliminate=False), programs)
    for a, b in zip(on, off):
        print(f"{a.name:32} {a.seconds:7.2f}s {b.seconds:7.2f}s  {b.undecided}")

    bad = 0
    for case in equisatisfiability(programs, args.timeout):
        ok = case.consistent
        bad += not ok
        if not ok or case.original != case.reduced:
            print(f"{'ok ' if ok else 'BAD'} {case.label}: original={case.original} "
                  f"reduced={case.reduced} witness={case.witness}")
    print(f"equisatisfiability violations: {bad}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())

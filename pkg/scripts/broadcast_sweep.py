"""Exhaustively compare the solver's broadcast encoding with the reference rule."""

import argparse
import sys

from tfit.experiments import broadcast_sweep


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-rank", type=int, default=3)
    ap.add_argument("--max-dim", type=int, default=4)
    ap.add_argument("--literal", action="store_true",
                    help="use literal operands instead of pinned shape variables")
    ap.add_argument("--solver-cmd")
    args = ap.parse_args()

    res = broadcast_sweep(args.max_rank, args.max_dim, args.solver_cmd, symbolic=not args.literal)
    for m in res.mismatches:
        print(m)
    print(f"{res.pairs} pairs, {res.queries} queries, {len(res.mismatches)} mismatches, "
          f"{res.seconds:.1f}s")
    return 1 if res.mismatches else 0


if __name__ == "__main__":
    sys.exit(main())

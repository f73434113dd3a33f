"""Run random programs through both the checker and the interpreter."""

import argparse
import collections
import sys
import time

from tfit.checker import CheckConfig
from tfit.experiments import differential


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=500)
    ap.add_argument("--start", type=int, default=0)
    ap.add_argument("--timeout", type=float, default=10.0)
    args = ap.parse_args()

    start = time.monotonic()
    tally = collections.Counter()
    fps, missed = [], []
    for case in differential(range(args.start, args.start + args.seeds), CheckConfig(timeout=args.timeout)):
        tally[(case.static_error, case.oracle_status)] += 1
        if case.false_positive:
            fps.append(case.seed)
        if case.missed_assert:
            missed.append(case.seed)
    for (static, status), n in sorted(tally.items()):
        print(f"static_error={static!s:5} oracle={status:18} {n}")
    print(f"false positives: {fps}")
    print(f"missed assertion failures: {missed}")
    print(f"{args.seeds} programs in {time.monotonic() - start:.1f}s")
    return 1 if fps or missed else 0


if __name__ == "__main__":
    sys.exit(main())

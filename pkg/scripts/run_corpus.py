"""Check every corpus program against its recorded verdicts and report timings."""

import argparse
import sys
import time

from tfit.checker import CheckConfig
from tfit.experiments import run_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--timeout", type=float, default=10.0, help="per-query solver timeout (s)")
    ap.add_argument("--no-eliminate", action="store_true", help="skip equality elimination")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    config = CheckConfig(timeout=args.timeout, eliminate=not args.no_eliminate, jobs=args.jobs)
    start = time.monotonic()
    runs = run_corpus(config)
    bad = 0
    for r in runs:
        mark = "ok  " if not r.problems else "DIFF"
        print(f"{mark} {r.name:32} {r.seconds:6.2f}s  contradictions={r.contradictions} "
              f"undecided={r.undecided}")
        for p in r.problems:
            print(f"       {p}")
        bad += bool(r.problems)
    print(f"{len(runs)} programs, {bad} differing, {time.monotonic() - start:.1f}s total")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())

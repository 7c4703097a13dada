#!/usr/bin/env python3
"""Run the full parameter sweeps and drop CSV/JSON results under results/.

Grid defaults: budget {0.2,0.4,0.6,0.8}, support size {6..14}, request level
cap {0..4}, k {1..5}, error rate {0.05..0.25}, three repetitions per point
with paired seeds across each axis.

Usage:
    python3 scripts/run_sweeps.py [outdir] [--seed N] [--reps N]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from pacas.harness import SweepConfig, run_sweep  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", nargs="?", default="results")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--reps", type=int, default=3)
    args = parser.parse_args()

    config = SweepConfig(base_seed=args.seed, repetitions=args.reps)
    started = time.perf_counter()
    summary = run_sweep(config, args.outdir)
    elapsed = time.perf_counter() - started

    for axis, rows in summary.items():
        print(f"\n== {axis} ==")
        for row in rows:
            print(f"  {axis}={row['value']}: repair_error={row['repair_error']:.3f} "
                  f"violations_after={row['violations_after']:.1f} "
                  f"purchases={row['purchases']:.1f}")
    print(f"\nwrote {args.outdir}/ in {elapsed:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

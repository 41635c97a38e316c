#!/usr/bin/env python3
"""Run every scenario at desk scale and write report bundles under out/.

Usage: python scripts/run_all.py [--seed N] [--out DIR] [--only name,name]
Afterwards the TypeScript reporter renders each bundle:
    node frontend/dist/cli.js report out/<scenario>
"""

import argparse
import sys
import time
from pathlib import Path

from voigtflow.runfile import default_runfile, parse_runfile
from voigtflow.scenarios import SCENARIOS, run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out")
    ap.add_argument("--only", help="comma-separated scenario subset")
    args = ap.parse_args()

    names = sorted(SCENARIOS) if not args.only else args.only.split(",")
    failures = 0
    for name in names:
        t0 = time.time()
        rf = parse_runfile(default_runfile(name))
        bundle = run_scenario(name, rf, outdir=Path(args.out) / name, seed=args.seed)
        for crit in bundle.criteria:
            mark = "PASS" if crit.passed else "FAIL"
            print(f"[{mark}] {name}/{crit.name}: {crit.value:.6g} ({crit.threshold})")
            failures += 0 if crit.passed else 1
        print(f"  {name}: {time.time() - t0:.1f}s -> {bundle.summary_path}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: run scenarios, self-check, list the inventory."""

from __future__ import annotations

import argparse
import sys

from .runfile import RunFileError, default_runfile, load_runfile, parse_runfile
from .scenarios import SCENARIO_SUMMARIES, SCENARIOS, run_scenario


def _add_run_args(p):
    p.add_argument("--config", help="run file (YAML); defaults to the desk-scale config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out", help="output directory for the report bundle")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voigtflow",
        description="Spectral experiments for Voigt-regularized flow with fading memory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named scenario")
    run_p.add_argument("scenario", choices=sorted(SCENARIOS))
    _add_run_args(run_p)

    check_p = sub.add_parser("check", help="run the structural self-check scenario")
    _add_run_args(check_p)

    sub.add_parser("list", help="list available scenarios")
    return parser


def _load(args, scenario):
    if args.config:
        rf = load_runfile(args.config)
        if rf.experiment != scenario:
            raise RunFileError(
                f"{args.config}: experiment.name is {rf.experiment!r}, expected {scenario!r}"
            )
        return rf
    return parse_runfile(default_runfile(scenario))


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in sorted(SCENARIOS):
            print(f"{name:14s} {SCENARIO_SUMMARIES[name]}")
        return 0

    scenario = "selfcheck" if args.command == "check" else args.scenario
    try:
        rf = _load(args, scenario)
        bundle = run_scenario(scenario, rf, outdir=args.out, seed=args.seed)
    except RunFileError as exc:
        print(f"error: invalid run file: {exc}", file=sys.stderr)
        return 2
    for crit in bundle.criteria:
        status = "PASS" if crit.passed else "FAIL"
        print(f"[{status}] {crit.name}: value={crit.value:.6g} threshold: {crit.threshold}")
    print(f"summary: {bundle.summary_path}")
    return 0 if bundle.all_passed else 1


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line front end: seeded benchmark runs and summary tables."""

from __future__ import annotations

import argparse
import sys

from .bench import default_config, run_trials, summarize
from .geometry import SCENARIO_DIR_ENV, load_scenario
from .search import (
    FHAT,
    FIRST_INTERSECTION_PLUS_LB,
    K_NN,
    LB_ONLY,
    MM_MAX,
    R_DISK,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btit",
        description="Anytime kinodynamic motion-planning benchmarks.",
        epilog=f"Set {SCENARIO_DIR_ENV} to search extra scenario directories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "plan",
        help="run seeded planner trials and write events.csv / summary.csv",
    )
    run.add_argument("--scenario", required=True, help="bundled name or JSON path")
    run.add_argument("--planner", choices=("btit", "baseline"), default="btit")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=0, help="first trial's seed")
    run.add_argument("--batch-size", type=int, default=None, metavar="M")
    run.add_argument(
        "--budget", type=float, default=None, metavar="SECONDS",
        help="model-time budget per trial",
    )
    run.add_argument("--segments", type=int, default=None, metavar="K")
    run.add_argument("--priority", choices=(FHAT, MM_MAX), default=None)
    run.add_argument(
        "--termination",
        choices=(FIRST_INTERSECTION_PLUS_LB, LB_ONLY),
        default=None,
    )
    run.add_argument("--connection", choices=(R_DISK, K_NN), default=None)
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--jobs", type=int, default=1)

    summ = sub.add_parser(
        "summarize",
        help="print success rates, medians, and ratios from summary CSVs",
    )
    summ.add_argument("paths", nargs="+", metavar="SUMMARY_CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            scenario = load_scenario(args.scenario)
            config = default_config(
                scenario,
                seed=args.seed,
                batch_size=args.batch_size,
                time_budget=args.budget,
                segments=args.segments,
                priority_policy=args.priority,
                termination_policy=args.termination,
                connection=args.connection,
            )
            results = run_trials(
                scenario,
                planner=args.planner,
                trials=args.trials,
                config=config,
                jobs=args.jobs,
                out_dir=args.out,
            )
            solved = sum(1 for r in results if r.final_cost is not None)
            print(
                f"{args.planner} on {scenario.name}:"
                f" {solved}/{len(results)} trials solved; wrote {args.out}/events.csv"
                f" and {args.out}/summary.csv"
            )
        else:
            print(summarize(args.paths), end="")
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

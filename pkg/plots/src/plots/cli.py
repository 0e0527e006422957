"""Command-line entry point: plots --events ... --out fig.png."""

import argparse
import sys

from .figure import PlotSpec, render
from .series import GRID_POINTS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plots",
        description="Render success-rate and median-cost figures from "
        "benchmark events.csv (and optionally summary.csv) files.",
    )
    p.add_argument("--events", nargs="+", required=True, help="events.csv paths")
    p.add_argument(
        "--summary",
        nargs="+",
        default=[],
        help="summary.csv paths; adds unsolved trials to the success rates",
    )
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--scenario", default=None, help="only plot this scenario")
    p.add_argument("--planners", nargs="+", default=None, help="only these planners")
    p.add_argument("--t-min", type=float, default=None, help="time axis start")
    p.add_argument("--t-max", type=float, default=None, help="time axis end")
    p.add_argument(
        "--points", type=int, default=GRID_POINTS, help="time grid resolution"
    )
    p.add_argument(
        "--ci99",
        action="store_true",
        help="draw the more conservative 99%% band behind the 95%% band",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t_range = None
    if args.t_min is not None or args.t_max is not None:
        t_range = (args.t_min, args.t_max)
    spec = PlotSpec(
        events=tuple(args.events),
        out=args.out,
        summary=tuple(args.summary),
        t_range=t_range,
        planners=None if args.planners is None else tuple(args.planners),
        scenario=args.scenario,
        points=args.points,
        shadow=args.ci99,
    )
    try:
        written = render(spec)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Seeded multi-trial benchmark runs, CSV emission, and summary tables.

Trials run on the planner's deterministic model clock, so a fixed seed
replays byte-identically; CSV floats use 17 significant digits for exact
round-trips. The events file holds one row per incumbent improvement and
the summary file one row per trial, with empty cost fields (never a
sentinel) for trials that found no solution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from multiprocessing import Pool
from pathlib import Path

from .errors import PreconditionError, SummarySchemaError
from .geometry import Scenario, load_scenario
from .search import (
    K_NN,
    R_DISK,
    AnytimeEvent,
    PlannerConfig,
    plan,
    plan_baseline,
)

EVENTS_HEADER = ("planner", "scenario", "seed", "batch", "wall_time_s", "cost")
SUMMARY_HEADER = (
    "planner",
    "scenario",
    "seed",
    "first_solution_s",
    "final_cost",
    "success",
)

PLANNERS = {"btit": plan, "baseline": plan_baseline}

# Benchmark defaults per dynamics preset: sample-batch size, model-time
# budget, and the connection rule (r-disk degenerates toward the complete
# graph in 10-D, so the quadrotor runs k-nearest).
SYSTEM_DEFAULTS = {
    "dir4d": {"batch_size": 200, "time_budget": 2.0, "connection": R_DISK},
    "lq10d": {"batch_size": 300, "time_budget": 10.0, "connection": K_NN},
}


@dataclass(frozen=True)
class TrialResult:
    """One trial's improvement events plus its two summary numbers."""

    planner: str
    scenario: str
    seed: int
    events: tuple[AnytimeEvent, ...]
    first_solution_time: float | None
    final_cost: float | None


def default_config(scenario: Scenario, **overrides) -> PlannerConfig:
    """Planner settings for a scenario: per-system benchmark defaults,
    then any overrides that are not None."""
    fields = dict(SYSTEM_DEFAULTS.get(scenario.system, {}))
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return PlannerConfig(**fields)


def _run_trial(task) -> TrialResult:
    scenario, planner, cfg = task
    res = PLANNERS[planner](scenario, cfg)
    events = tuple(res.events)
    return TrialResult(
        planner=res.planner,
        scenario=res.scenario,
        seed=res.seed,
        events=events,
        first_solution_time=events[0].wall_time_s if events else None,
        final_cost=events[-1].cost if events else None,
    )


def run_trials(
    scenario,
    planner: str = "btit",
    trials: int = 1,
    config: PlannerConfig | None = None,
    jobs: int = 1,
    out_dir=None,
) -> list[TrialResult]:
    """Run independent trials seeded seed+0 .. seed+trials-1 and, when
    out_dir is given, write events.csv and summary.csv there."""
    if planner not in PLANNERS:
        raise PreconditionError(f"planner must be one of {sorted(PLANNERS)}")
    if not isinstance(trials, int) or trials < 1:
        raise PreconditionError("trials must be a positive integer")
    if not isinstance(jobs, int) or jobs < 1:
        raise PreconditionError("jobs must be a positive integer")
    if isinstance(scenario, (str, Path)):
        scenario = load_scenario(scenario)
    if config is None:
        config = default_config(scenario)
    out = None
    if out_dir is not None:
        # Fail on an unwritable destination before spending planner time.
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    tasks = [
        (scenario, planner, replace(config, seed=config.seed + i))
        for i in range(trials)
    ]
    if jobs > 1 and trials > 1:
        with Pool(processes=min(jobs, trials)) as pool:
            results = pool.map(_run_trial, tasks)
    else:
        results = [_run_trial(task) for task in tasks]
    # Collected order must not depend on worker scheduling.
    results.sort(key=lambda r: (r.planner, r.scenario, r.seed))
    if out is not None:
        write_events_csv(out / "events.csv", results)
        write_summary_csv(out / "summary.csv", results)
    return results


# -- CSV emission -------------------------------------------------------------


def _fmt(value) -> str:
    return "" if value is None else format(float(value), ".17g")


def events_rows(results) -> list[tuple[str, ...]]:
    return [
        (
            r.planner,
            r.scenario,
            str(r.seed),
            str(ev.batch),
            _fmt(ev.wall_time_s),
            _fmt(ev.cost),
        )
        for r in results
        for ev in r.events
    ]


def summary_rows(results) -> list[tuple[str, ...]]:
    return [
        (
            r.planner,
            r.scenario,
            str(r.seed),
            _fmt(r.first_solution_time),
            _fmt(r.final_cost),
            "1" if r.final_cost is not None and math.isfinite(r.final_cost) else "0",
        )
        for r in results
    ]


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_events_csv(path, results) -> None:
    _write_csv(path, EVENTS_HEADER, events_rows(results))


def write_summary_csv(path, results) -> None:
    _write_csv(path, SUMMARY_HEADER, summary_rows(results))


# -- summaries -----------------------------------------------------------------


@dataclass(frozen=True)
class GroupStats:
    """Aggregates for one (planner, scenario) group of trials."""

    planner: str
    scenario: str
    trials: int
    successes: int
    median_first_s: float | None
    median_final_cost: float | None

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def median(values) -> float | None:
    """Sort-based median; None on empty input."""
    ordered = sorted(values)
    k = len(ordered)
    if k == 0:
        return None
    mid = k // 2
    if k % 2:
        return float(ordered[mid])
    return 0.5 * (float(ordered[mid - 1]) + float(ordered[mid]))


def _parse_float(text: str, column: str, path) -> float | None:
    if text == "":
        return None
    try:
        return float(text)
    except ValueError as err:
        raise SummarySchemaError(
            f"bad value {text!r} in column {column!r} of {path}"
        ) from err


def read_summary_rows(paths) -> list[dict]:
    """Parse summary CSVs, enforcing the exact column layout."""
    rows = []
    for path in paths:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise SummarySchemaError(f"{path} is empty; expected a header row")
            for col in SUMMARY_HEADER:
                if col not in header:
                    raise SummarySchemaError(f"{path} is missing column {col!r}")
            for col in header:
                if col not in SUMMARY_HEADER:
                    raise SummarySchemaError(f"{path} has unexpected column {col!r}")
            idx = {col: header.index(col) for col in SUMMARY_HEADER}
            for record in reader:
                if len(record) != len(header):
                    raise SummarySchemaError(
                        f"{path} row {reader.line_num} has {len(record)} fields,"
                        f" expected {len(header)}"
                    )
                success_text = record[idx["success"]]
                if success_text not in ("0", "1"):
                    raise SummarySchemaError(
                        f"bad value {success_text!r} in column 'success' of {path}"
                    )
                rows.append(
                    {
                        "planner": record[idx["planner"]],
                        "scenario": record[idx["scenario"]],
                        "seed": int(record[idx["seed"]]),
                        "first_solution_s": _parse_float(
                            record[idx["first_solution_s"]], "first_solution_s", path
                        ),
                        "final_cost": _parse_float(
                            record[idx["final_cost"]], "final_cost", path
                        ),
                        "success": success_text == "1",
                    }
                )
    return rows


def summary_stats(paths):
    """Group parsed rows into per-(planner, scenario) stats plus pairwise
    first-solution median ratios, keyed (scenario, slower, faster)."""
    rows = read_summary_rows(paths)
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["planner"], row["scenario"]), []).append(row)
    stats = []
    for (planner, scenario), members in sorted(groups.items()):
        wins = [m for m in members if m["success"]]
        stats.append(
            GroupStats(
                planner=planner,
                scenario=scenario,
                trials=len(members),
                successes=len(wins),
                median_first_s=median(
                    m["first_solution_s"] for m in wins
                    if m["first_solution_s"] is not None
                ),
                median_final_cost=median(
                    m["final_cost"] for m in wins if m["final_cost"] is not None
                ),
            )
        )
    ratios: dict[tuple[str, str, str], float] = {}
    by_scenario: dict[str, list[GroupStats]] = {}
    for st in stats:
        by_scenario.setdefault(st.scenario, []).append(st)
    for scenario, members in by_scenario.items():
        timed = [st for st in members if st.median_first_s is not None]
        for i, a in enumerate(timed):
            for b in timed[i + 1 :]:
                slow, fast = (a, b) if a.median_first_s >= b.median_first_s else (b, a)
                ratios[(scenario, slow.planner, fast.planner)] = (
                    slow.median_first_s / fast.median_first_s
                    if fast.median_first_s > 0.0
                    else math.inf
                )
    return stats, ratios


def summarize(paths) -> str:
    """Success rates, medians over successful trials, and pairwise
    first-solution ratios, as a printable table."""
    stats, ratios = summary_stats(paths)

    def num(value):
        return "-" if value is None else format(value, ".6g")

    header = ("planner", "scenario", "trials", "success", "first_s", "final_cost")
    table = [header] + [
        (
            st.planner,
            st.scenario,
            str(st.trials),
            f"{100.0 * st.success_rate:.1f}%",
            num(st.median_first_s),
            num(st.median_final_cost),
        )
        for st in stats
    ]
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in table
    ]
    for (scenario, slow, fast), ratio in sorted(ratios.items()):
        lines.append(
            f"{scenario}: median first-solution ratio {slow}/{fast} = {ratio:.2f}x"
        )
    return "\n".join(lines) + "\n"

"""Series computation behind the figures.

Reads the benchmark CSVs, rebuilds each trial's incumbent-cost staircase,
and reduces the trials of one (scenario, planner) group to success-rate and
median-cost series on a shared time grid. Unsolved trials contribute an
infinite cost, so the median goes infinite exactly when fewer than half the
trials have solved; the figure layer masks those stretches. Confidence
bounds on the median are nonparametric binomial order-statistic intervals,
so everything here is exact arithmetic on the CSV contents: identical
inputs always produce identical series.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputDataError

EVENTS_HEADER = ("planner", "scenario", "seed", "batch", "wall_time_s", "cost")
SUMMARY_HEADER = (
    "planner",
    "scenario",
    "seed",
    "first_solution_s",
    "final_cost",
    "success",
)
GRID_POINTS = 200


@dataclass(frozen=True)
class EventRow:
    """One incumbent improvement from events.csv."""

    planner: str
    scenario: str
    seed: int
    batch: int
    wall_time_s: float
    cost: float


@dataclass(frozen=True)
class SummaryRow:
    """One trial outcome from summary.csv; costs are None when unsolved."""

    planner: str
    scenario: str
    seed: int
    first_solution_s: float | None
    final_cost: float | None
    success: bool


@dataclass(frozen=True, eq=False)
class Trial:
    """One trial's improvement staircase: event times and running best cost."""

    planner: str
    scenario: str
    seed: int
    times: np.ndarray
    costs: np.ndarray

    def cost_at(self, grid: np.ndarray) -> np.ndarray:
        """Incumbent cost at each grid time; +inf before the first event."""
        out = np.full(grid.shape, np.inf)
        if self.times.size == 0:
            return out
        idx = np.searchsorted(self.times, grid, side="right") - 1
        hit = idx >= 0
        out[hit] = self.costs[idx[hit]]
        return out

    @property
    def first_time(self) -> float:
        return float(self.times[0]) if self.times.size else math.inf

    @property
    def first_cost(self) -> float:
        return float(self.costs[0]) if self.costs.size else math.inf


@dataclass(frozen=True, eq=False)
class PlannerSeries:
    """All plotted data for one planner on one scenario."""

    planner: str
    scenario: str
    trials: int
    times: np.ndarray
    success: np.ndarray
    median_cost: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    shadow_lo: np.ndarray
    shadow_hi: np.ndarray
    masked: np.ndarray
    first_time_stats: tuple[float, float, float]
    first_cost_stats: tuple[float, float, float]


# ---------------------------------------------------------------------------
# CSV readers. The schemas are fixed; anything else is a hard error that
# names the file (and column) at fault.


def _read_rows(path, header):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise InputDataError(f"cannot read {path}: {err}") from err
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise InputDataError(f"{path} is empty; expected a {header[0]},... header")
    got = tuple(rows[0])
    for name in header:
        if name not in got:
            raise InputDataError(f"{path} is missing column {name!r}")
    for name in got:
        if name not in header:
            raise InputDataError(f"{path} has unexpected column {name!r}")
    if got != header:
        raise InputDataError(f"{path} columns are out of order: {got}")
    if len(rows) == 1:
        raise InputDataError(f"no data rows in {path}")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputDataError(f"{path} line {i} has {len(row)} fields")
    return rows[1:]


def _float(value, path, column):
    try:
        out = float(value)
    except ValueError as err:
        raise InputDataError(f"{path}: bad {column} value {value!r}") from err
    if not math.isfinite(out):
        raise InputDataError(f"{path}: {column} must be finite, got {value!r}")
    return out


def _int(value, path, column):
    try:
        return int(value)
    except ValueError as err:
        raise InputDataError(f"{path}: bad {column} value {value!r}") from err


def read_events(paths) -> list[EventRow]:
    """Parse one or more events.csv files into typed rows."""
    out = []
    for path in paths:
        for row in _read_rows(path, EVENTS_HEADER):
            planner, scenario, seed, batch, wall, cost = row
            out.append(
                EventRow(
                    planner=planner,
                    scenario=scenario,
                    seed=_int(seed, path, "seed"),
                    batch=_int(batch, path, "batch"),
                    wall_time_s=_float(wall, path, "wall_time_s"),
                    cost=_float(cost, path, "cost"),
                )
            )
    return out


def read_summary(paths) -> list[SummaryRow]:
    """Parse one or more summary.csv files into typed rows."""
    out = []
    for path in paths:
        for row in _read_rows(path, SUMMARY_HEADER):
            planner, scenario, seed, first, final, success = row
            if success not in ("0", "1"):
                raise InputDataError(f"{path}: success must be 0 or 1, got {success!r}")
            out.append(
                SummaryRow(
                    planner=planner,
                    scenario=scenario,
                    seed=_int(seed, path, "seed"),
                    first_solution_s=(
                        None if first == "" else _float(first, path, "first_solution_s")
                    ),
                    final_cost=(
                        None if final == "" else _float(final, path, "final_cost")
                    ),
                    success=success == "1",
                )
            )
    return out


# ---------------------------------------------------------------------------
# Trials and reductions.


def build_trials(
    events: list[EventRow], summary: list[SummaryRow] | None = None
) -> dict[tuple[str, str], list[Trial]]:
    """Group events into per-trial staircases, keyed by (scenario, planner).

    When summary rows are given they define the trial roster, so trials that
    never solved still count toward success rates; a summary row marked
    solved with no matching events (or the reverse) is rejected as
    inconsistent input.
    """
    by_trial: dict[tuple[str, str, int], list[EventRow]] = {}
    for row in events:
        by_trial.setdefault((row.planner, row.scenario, row.seed), []).append(row)

    roster = set(by_trial)
    if summary:
        roster = {(r.planner, r.scenario, r.seed) for r in summary}
        for r in summary:
            key = (r.planner, r.scenario, r.seed)
            if r.success and key not in by_trial:
                raise InputDataError(
                    f"summary marks trial {key} solved but there are no events for it"
                )
            if not r.success and key in by_trial:
                raise InputDataError(
                    f"summary marks trial {key} unsolved but events exist for it"
                )
        extra = set(by_trial) - roster
        if extra:
            raise InputDataError(f"events for trial {sorted(extra)[0]} not in summary")

    out: dict[tuple[str, str], list[Trial]] = {}
    for planner, scenario, seed in sorted(roster):
        rows = sorted(
            by_trial.get((planner, scenario, seed), ()), key=lambda r: r.wall_time_s
        )
        times = np.array([r.wall_time_s for r in rows])
        costs = np.minimum.accumulate([r.cost for r in rows]) if rows else np.array([])
        out.setdefault((scenario, planner), []).append(
            Trial(planner=planner, scenario=scenario, seed=seed, times=times, costs=costs)
        )
    return out


def median_ci_ranks(n: int, level: float) -> tuple[int, int]:
    """1-indexed order-statistic ranks bounding the median at >= level.

    Exact binomial(n, 1/2) tail construction: the largest lower rank with
    left tail <= alpha/2 and the smallest upper rank with cumulative
    >= 1 - alpha/2, clamped to [1, n] when n is too small for the level.
    """
    if n < 1:
        raise InputDataError("need at least one trial")
    if not 0.0 < level < 1.0:
        raise InputDataError("confidence level must be inside (0, 1)")
    alpha = 1.0 - level
    scale = 0.5**n
    cdf = []
    acc = 0.0
    for k in range(n + 1):
        acc += math.comb(n, k) * scale
        cdf.append(acc)

    def f(k):  # P(Bin(n, 1/2) <= k), with F(-1) = 0
        return 0.0 if k < 0 else cdf[min(k, n)]

    lo = max(k for k in range(n + 1) if f(k - 1) <= alpha / 2.0)
    hi = min(k for k in range(1, n + 2) if f(k - 1) >= 1.0 - alpha / 2.0)
    return max(lo, 1), min(hi, n)


def _median_sorted(col: np.ndarray) -> np.ndarray:
    """Median along axis 0 of already-sorted data, infinity-aware."""
    n = col.shape[0]
    if n % 2:
        return col[(n - 1) // 2]
    return 0.5 * (col[n // 2 - 1] + col[n // 2])


def _marker_stats(values: np.ndarray, level: float) -> tuple[float, float, float]:
    ordered = np.sort(values)
    lo, hi = median_ci_ranks(len(ordered), level)
    return (
        float(_median_sorted(ordered)),
        float(ordered[lo - 1]),
        float(ordered[hi - 1]),
    )


def planner_series(
    events: list[EventRow],
    summary: list[SummaryRow] | None,
    times: np.ndarray,
    scenario: str | None = None,
    planners=None,
) -> list[PlannerSeries]:
    """Reduce trials to one PlannerSeries per (scenario, planner) group."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times <= 0.0):
        raise InputDataError("the time grid must be 1-D and strictly positive")
    wanted = None if planners is None else set(planners)
    out = []
    for (scn, planner), trials in sorted(build_trials(events, summary).items()):
        if scenario is not None and scn != scenario:
            continue
        if wanted is not None and planner not in wanted:
            continue
        n = len(trials)
        costs = np.vstack([t.cost_at(times) for t in trials])
        firsts = np.array([t.first_time for t in trials])
        success = (firsts[:, None] <= times[None, :]).mean(axis=0)
        ordered = np.sort(costs, axis=0)
        med = _median_sorted(ordered)
        lo95, hi95 = median_ci_ranks(n, 0.95)
        lo99, hi99 = median_ci_ranks(n, 0.99)
        out.append(
            PlannerSeries(
                planner=planner,
                scenario=scn,
                trials=n,
                times=times,
                success=success,
                median_cost=med,
                ci_lo=ordered[lo95 - 1],
                ci_hi=ordered[hi95 - 1],
                shadow_lo=ordered[lo99 - 1],
                shadow_hi=ordered[hi99 - 1],
                masked=(success < 0.5) | ~np.isfinite(med),
                first_time_stats=_marker_stats(firsts, 0.95),
                first_cost_stats=_marker_stats(
                    np.array([t.first_cost for t in trials]), 0.95
                ),
            )
        )
    if scenario is not None and not out:
        raise InputDataError(f"no rows for scenario {scenario!r}")
    return out


def time_grid(events: list[EventRow], t_range=None, points: int = GRID_POINTS):
    """Logarithmic grid over the data's time span; either end of t_range
    overrides the corresponding data-derived bound."""
    if points < 2:
        raise InputDataError("the grid needs at least two points")
    lo_req, hi_req = (None, None) if t_range is None else t_range
    if lo_req is None or hi_req is None:
        spans = [r.wall_time_s for r in events if r.wall_time_s > 0.0]
        if not spans:
            raise InputDataError("no positive event times to span a grid")
        lo = 0.8 * min(spans) if lo_req is None else float(lo_req)
        hi = 1.05 * max(spans) if hi_req is None else float(hi_req)
    else:
        lo, hi = float(lo_req), float(hi_req)
    lo = max(lo, 1e-6)
    if hi <= lo:
        hi = 10.0 * lo
    return np.geomspace(lo, hi, points)

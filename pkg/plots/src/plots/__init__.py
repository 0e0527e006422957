"""Figures for benchmark CSVs: success rate and median cost over time."""

from .errors import InputDataError
from .figure import PlotSpec, render
from .series import (
    EVENTS_HEADER,
    GRID_POINTS,
    SUMMARY_HEADER,
    EventRow,
    PlannerSeries,
    SummaryRow,
    Trial,
    build_trials,
    median_ci_ranks,
    planner_series,
    read_events,
    read_summary,
    time_grid,
)

__all__ = [
    "EVENTS_HEADER",
    "GRID_POINTS",
    "SUMMARY_HEADER",
    "EventRow",
    "InputDataError",
    "PlannerSeries",
    "PlotSpec",
    "SummaryRow",
    "Trial",
    "build_trials",
    "median_ci_ranks",
    "planner_series",
    "read_events",
    "read_summary",
    "render",
    "time_grid",
]

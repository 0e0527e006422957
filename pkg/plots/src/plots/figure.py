"""Figure rendering: two panels per scenario from the computed series."""

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .series import (
    GRID_POINTS,
    planner_series,
    read_events,
    read_summary,
    time_grid,
)


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: inputs, output image, time range, planner filter."""

    events: tuple[str, ...]
    out: str
    summary: tuple[str, ...] = ()
    t_range: tuple[float | None, float | None] | None = None
    planners: tuple[str, ...] | None = None
    scenario: str | None = None
    points: int = GRID_POINTS
    shadow: bool = False


def render(spec: PlotSpec) -> list[str]:
    """Render success-rate and median-cost panels; returns written files.

    One row of two panels per scenario: a success-rate-vs-time step curve,
    and the median incumbent cost with a 95% confidence band (99% shadow
    behind it when requested), masked wherever fewer than half the trials
    have solved, plus a first-solution marker with its own intervals.
    """
    events = read_events(spec.events)
    summary = read_summary(spec.summary) if spec.summary else None
    grid = time_grid(events, spec.t_range, spec.points)
    series = planner_series(
        events, summary, grid, scenario=spec.scenario, planners=spec.planners
    )

    scenarios = sorted({s.scenario for s in series})
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    color_of = {
        name: colors[i % len(colors)]
        for i, name in enumerate(sorted({s.planner for s in series}))
    }

    fig, axes = plt.subplots(
        len(scenarios),
        2,
        figsize=(11.0, 3.4 * len(scenarios)),
        squeeze=False,
    )
    for row, scn in enumerate(scenarios):
        ax_rate, ax_cost = axes[row]
        for s in [x for x in series if x.scenario == scn]:
            color = color_of[s.planner]
            label = f"{s.planner} ({s.trials} trials)"
            ax_rate.step(s.times, s.success, where="post", color=color, label=label)

            line = np.where(s.masked, np.nan, s.median_cost)
            band_ok = ~s.masked & np.isfinite(s.ci_lo) & np.isfinite(s.ci_hi)
            if spec.shadow:
                shadow_ok = ~s.masked & np.isfinite(s.shadow_lo)
                shadow_ok &= np.isfinite(s.shadow_hi)
                ax_cost.fill_between(
                    s.times,
                    s.shadow_lo,
                    s.shadow_hi,
                    where=shadow_ok,
                    color=color,
                    alpha=0.12,
                    linewidth=0,
                )
            ax_cost.fill_between(
                s.times,
                s.ci_lo,
                s.ci_hi,
                where=band_ok,
                color=color,
                alpha=0.25,
                linewidth=0,
            )
            ax_cost.plot(s.times, line, color=color, label=label)

            mt, mt_lo, mt_hi = s.first_time_stats
            mc, mc_lo, mc_hi = s.first_cost_stats
            if np.isfinite(mt) and np.isfinite(mc):
                xerr = (
                    [[mt - mt_lo], [mt_hi - mt]]
                    if np.isfinite(mt_lo) and np.isfinite(mt_hi)
                    else None
                )
                yerr = (
                    [[mc - mc_lo], [mc_hi - mc]]
                    if np.isfinite(mc_lo) and np.isfinite(mc_hi)
                    else None
                )
                ax_cost.errorbar(
                    mt, mc, xerr=xerr, yerr=yerr, fmt="D", ms=5, capsize=3, color=color
                )

        for ax in (ax_rate, ax_cost):
            ax.set_xscale("log")
            ax.set_xlabel("time [s]")
            ax.grid(alpha=0.3)
        ax_rate.set_ylim(-0.02, 1.02)
        ax_rate.set_ylabel("success rate")
        ax_rate.set_title(scn)
        ax_cost.set_ylabel("solution cost")
        ax_cost.set_title(scn)
        ax_rate.legend(loc="lower right", fontsize="small")

    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)
    return [spec.out]

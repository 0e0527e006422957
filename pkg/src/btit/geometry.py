"""Planning scenarios: state bounds, axis-aligned box obstacles over the
position coordinates, and JSON loading for bundled or user files."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ScenarioError
from .presets import PRESETS

SCENARIO_DIR_ENV = "BTIT_SCENARIO_DIR"
_BUNDLED_DIR = Path(__file__).parent / "scenarios"
SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class Scenario:
    """A planning problem: dynamics preset name, closed state bounds, closed
    box obstacles over the position coordinates, and start/goal states."""

    system: str
    lower: np.ndarray
    upper: np.ndarray
    position_dims: tuple[int, ...]
    obstacles_lo: np.ndarray
    obstacles_hi: np.ndarray
    start: np.ndarray
    goal: np.ndarray
    name: str = ""
    notes: str = ""
    radius_gamma: float | None = None

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ScenarioError("bounds must be two equal-length vectors")
        n = lower.shape[0]
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ScenarioError("bounds must be finite")
        if np.any(lower >= upper):
            raise ScenarioError("each lower bound must be below its upper bound")
        dims = tuple(int(d) for d in self.position_dims)
        if len(dims) == 0 or len(set(dims)) != len(dims):
            raise ScenarioError("position_dims must be distinct and non-empty")
        if any(d < 0 or d >= n for d in dims):
            raise ScenarioError("position_dims out of range")
        lo = np.asarray(self.obstacles_lo, dtype=float).reshape(-1, len(dims))
        hi = np.asarray(self.obstacles_hi, dtype=float).reshape(-1, len(dims))
        if lo.shape != hi.shape:
            raise ScenarioError("obstacle corner arrays must match")
        if lo.size and (not np.isfinite(lo).all() or not np.isfinite(hi).all()):
            raise ScenarioError("obstacle corners must be finite")
        if np.any(lo > hi):
            raise ScenarioError("each obstacle needs min <= max per axis")
        start = np.asarray(self.start, dtype=float)
        goal = np.asarray(self.goal, dtype=float)
        if start.shape != (n,) or goal.shape != (n,):
            raise ScenarioError("start and goal must be n-vectors")
        for attr, arr in (
            ("lower", lower),
            ("upper", upper),
            ("position_dims", dims),
            ("obstacles_lo", lo),
            ("obstacles_hi", hi),
            ("start", start),
            ("goal", goal),
        ):
            object.__setattr__(self, attr, arr)
        for arr in (lower, upper, lo, hi, start, goal):
            arr.setflags(write=False)
        if not bool(self.states_valid(start[None, :])[0]):
            raise ScenarioError("start state is out of bounds or in collision")
        if not bool(self.states_valid(goal[None, :])[0]):
            raise ScenarioError("goal state is out of bounds or in collision")

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def obstacle_count(self) -> int:
        return self.obstacles_lo.shape[0]

    def states_valid(self, states: np.ndarray) -> np.ndarray:
        """Validity mask for a (K, n) stack: inside the closed bounds and not
        touching any closed obstacle box."""
        states = np.asarray(states, dtype=float)
        ok = (
            (states >= self.lower[None, :]) & (states <= self.upper[None, :])
        ).all(axis=1)
        ok &= np.isfinite(states).all(axis=1)
        if self.obstacle_count:
            pos = states[:, list(self.position_dims)]
            inside = (
                (pos[:, None, :] >= self.obstacles_lo[None, :, :])
                & (pos[:, None, :] <= self.obstacles_hi[None, :, :])
            ).all(axis=2)
            ok &= ~inside.any(axis=1)
        return ok

    def state_valid(self, state) -> bool:
        """Validity of a single state."""
        return bool(self.states_valid(np.asarray(state, dtype=float)[None, :])[0])


def _as_float_list(obj, what: str) -> list[float]:
    if not isinstance(obj, (list, tuple)) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj
    ):
        raise ScenarioError(f"{what} must be a list of numbers")
    return [float(v) for v in obj]


def scenario_from_dict(data: dict, name: str = "") -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be a JSON object")
    if data.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(f"scenario schema must be {SCHEMA_VERSION}")
    required = ("system", "bounds", "position_dims", "obstacles", "start", "goal")
    missing = [k for k in required if k not in data]
    if missing:
        raise ScenarioError(f"scenario is missing fields: {missing}")
    system = data["system"]
    if system not in PRESETS:
        raise ScenarioError(
            f"unknown system {system!r}; available: {sorted(PRESETS)}"
        )
    bounds = data["bounds"]
    if not isinstance(bounds, dict) or "lower" not in bounds or "upper" not in bounds:
        raise ScenarioError("bounds must be an object with lower and upper")
    lower = _as_float_list(bounds["lower"], "bounds.lower")
    upper = _as_float_list(bounds["upper"], "bounds.upper")
    pdims = data["position_dims"]
    if not isinstance(pdims, list) or not all(isinstance(d, int) for d in pdims):
        raise ScenarioError("position_dims must be a list of integers")
    obstacles = data["obstacles"]
    if not isinstance(obstacles, list):
        raise ScenarioError("obstacles must be a list")
    lo_rows, hi_rows = [], []
    for i, box in enumerate(obstacles):
        if not isinstance(box, dict) or "min" not in box or "max" not in box:
            raise ScenarioError(f"obstacle {i} must have min and max")
        lo_rows.append(_as_float_list(box["min"], f"obstacle {i} min"))
        hi_rows.append(_as_float_list(box["max"], f"obstacle {i} max"))
        if len(lo_rows[-1]) != len(pdims) or len(hi_rows[-1]) != len(pdims):
            raise ScenarioError(f"obstacle {i} must match position_dims length")
    gamma = data.get("radius_gamma")
    if gamma is not None:
        if not isinstance(gamma, (int, float)) or isinstance(gamma, bool):
            raise ScenarioError("radius_gamma must be a number")
        gamma = float(gamma)
        if gamma <= 0:
            raise ScenarioError("radius_gamma must be positive")
    return Scenario(
        system=system,
        lower=np.array(lower),
        upper=np.array(upper),
        position_dims=tuple(pdims),
        obstacles_lo=np.array(lo_rows, dtype=float).reshape(len(lo_rows), len(pdims)),
        obstacles_hi=np.array(hi_rows, dtype=float).reshape(len(hi_rows), len(pdims)),
        start=np.array(_as_float_list(data["start"], "start")),
        goal=np.array(_as_float_list(data["goal"], "goal")),
        name=str(data.get("name", name)),
        notes=str(data.get("notes", "")),
        radius_gamma=gamma,
    )


def scenario_search_dirs() -> list[Path]:
    """Directories searched for named scenarios, in priority order."""
    dirs = []
    override = os.environ.get(SCENARIO_DIR_ENV)
    if override:
        dirs.append(Path(override))
    dirs.append(_BUNDLED_DIR)
    return dirs


def load_scenario(spec: str | Path) -> Scenario:
    """Load a scenario from a JSON file path or a bundled scenario name."""
    path = Path(spec)
    if not path.suffix == ".json" and not path.exists():
        for base in scenario_search_dirs():
            candidate = base / f"{spec}.json"
            if candidate.exists():
                path = candidate
                break
        else:
            names = sorted(
                p.stem
                for base in scenario_search_dirs()
                if base.is_dir()
                for p in base.glob("*.json")
            )
            raise ScenarioError(f"no scenario named {spec!r}; available: {names}")
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ScenarioError(f"invalid JSON in {path}: {err}") from err
    return scenario_from_dict(data, name=path.stem)

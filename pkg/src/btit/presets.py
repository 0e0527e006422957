"""Ready-made linear systems: double integrators, single integrators, and a
linearized planar-thrust quadrotor."""

from __future__ import annotations

import numpy as np

from .dynamics import LinearSystem

GRAVITY = 9.81


def make_single_integrator(dims: int = 2, effort_weight: float = 1.0) -> LinearSystem:
    """Velocity-controlled point: x' = u with effort penalty u^T (r I) u."""
    if dims < 1:
        raise ValueError("dims must be >= 1")
    a = np.zeros((dims, dims))
    b = np.eye(dims)
    return LinearSystem(a, b, np.zeros(dims), effort_weight * np.eye(dims))


def make_double_integrator(dims: int = 2) -> LinearSystem:
    """Acceleration-controlled point: positions then velocities, x' = [v; u]."""
    if dims < 1:
        raise ValueError("dims must be >= 1")
    n = 2 * dims
    a = np.zeros((n, n))
    a[:dims, dims:] = np.eye(dims)
    b = np.zeros((n, dims))
    b[dims:, :] = np.eye(dims)
    return LinearSystem(a, b, np.zeros(n), np.eye(dims))


def make_quadrotor() -> LinearSystem:
    """Near-hover quadrotor linearization with state
    [px, py, pz, vx, vy, vz, roll, pitch, roll_rate, pitch_rate] and inputs
    [vertical thrust offset, roll torque, pitch torque].

    Pitch tilts thrust along +x and roll along -y; unit mass and inertia.
    """
    n = 10
    a = np.zeros((n, n))
    a[0:3, 3:6] = np.eye(3)
    a[3, 7] = GRAVITY
    a[4, 6] = -GRAVITY
    a[6, 8] = 1.0
    a[7, 9] = 1.0
    b = np.zeros((n, 3))
    b[5, 0] = 1.0
    b[8, 1] = 1.0
    b[9, 2] = 1.0
    return LinearSystem(a, b, np.zeros(n), np.eye(3))


PRESETS = {
    "si2d": lambda: make_single_integrator(2),
    "dir4d": lambda: make_double_integrator(2),
    "lq10d": make_quadrotor,
}


def get_system(name: str) -> LinearSystem:
    """Look up a preset system by name."""
    try:
        ctor = PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown system {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return ctor()

"""Scripted collect/drive shepherd in the style of the classic sheepdog model.

Used both as a validation oracle for the simulator and as the source of the
landmark points (collecting point behind the furthest sheep, driving point
behind the herd centre) that the reward functions share.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from ._jit import njit
from .controller import ControlOutput
from .geometry import TWO_PI, Vec2, furthest_index, herd_threshold, mean2, unit
from .world import WorldParams, WorldState

__all__ = [
    "ShepherdMode",
    "mode_select",
    "collecting_point",
    "driving_point",
    "scripted_action",
    "ScriptedController",
]

# Transit behaviour: cap speed near sheep while still far from the target,
# to avoid scattering the flock in passing.
SLOW_RADIUS_FACTOR = 3.0  # slow down within this many r_a of any sheep
TRANSIT_SPEED_CAP = 0.3


class ShepherdMode(Enum):
    COLLECT = 0
    DRIVE = 1


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def collect_point_kernel(phi_x, phi_y, sig_x, sig_y, r_a) -> tuple[float, float]:
    """One interaction distance beyond the separated sheep, away from the herd centre.

    Degenerate (sheep at the centre) falls back to the sheep itself.
    """
    dx = sig_x - phi_x
    dy = sig_y - phi_y
    d = math.hypot(dx, dy)
    if d == 0.0:
        return sig_x, sig_y
    return sig_x + r_a * dx / d, sig_y + r_a * dy / d


@njit(cache=True)
def drive_point_kernel(phi_x, phi_y, goal_x, goal_y, r_a, n) -> tuple[float, float]:
    """Behind the herd centre on the goal line; the centre itself when already at the goal."""
    dx = phi_x - goal_x
    dy = phi_y - goal_y
    d = math.hypot(dx, dy)
    if d == 0.0:
        return phi_x, phi_y
    off = r_a * math.sqrt(n)
    return phi_x + off * dx / d, phi_y + off * dy / d


@njit(cache=True)
def scripted_kernel(pos, phi_x, phi_y, sig_x, sig_y, fdist,
                    shep_x, shep_y, goal_x, goal_y,
                    r_a, threshold, goal_radius, delta_s,
                    slow_within, standoff, slow_speed) -> tuple[float, float]:
    """Head for the collecting or driving point; never overshoot; slow near
    sheep in transit; stand still once the herd is gathered on the goal
    (success-pending: chasing the degenerate driving point would scatter it)."""
    collect = fdist > threshold
    if not collect and math.hypot(phi_x - goal_x, phi_y - goal_y) <= goal_radius:
        return 0.0, 0.0
    if collect and sig_x == phi_x and sig_y == phi_y:
        collect = False  # sheep on the centre: no collect direction, drive instead
    if collect:
        tx, ty = collect_point_kernel(phi_x, phi_y, sig_x, sig_y, r_a)
    else:
        tx, ty = drive_point_kernel(phi_x, phi_y, goal_x, goal_y, r_a, pos.shape[0])
    dx = tx - shep_x
    dy = ty - shep_y
    dist = math.hypot(dx, dy)
    direction = math.atan2(dy, dx) % TWO_PI
    if dist > delta_s:
        speed = 1.0
    else:
        speed = dist / delta_s
    if dist > standoff:
        near = False
        for j in range(pos.shape[0]):
            ddx = pos[j, 0] - shep_x
            ddy = pos[j, 1] - shep_y
            if math.hypot(ddx, ddy) < slow_within:
                near = True
                break
        if near and speed > slow_speed:
            speed = slow_speed
    return direction, speed


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def mode_select(world: WorldState, params: WorldParams) -> ShepherdMode:
    """Collect while the furthest sheep sits strictly outside the herd threshold."""
    phi_x, phi_y = mean2(world.sheep_pos)
    _, fdist = furthest_index(world.sheep_pos, phi_x, phi_y)
    threshold = herd_threshold(world.n_sheep, params.r_a)
    return ShepherdMode.COLLECT if fdist > threshold else ShepherdMode.DRIVE


def collecting_point(phi: Vec2, sigma: Vec2, r_a: float) -> Vec2:
    """P_c = sigma + r_a * unit(sigma - phi)."""
    if sigma[0] == phi[0] and sigma[1] == phi[1]:
        raise ValueError("sheep coincides with GCM")
    return np.asarray(sigma, dtype=np.float64) + r_a * unit(np.asarray(sigma) - np.asarray(phi))


def driving_point(phi: Vec2, goal: Vec2, r_a: float, n: int) -> Vec2:
    """P_d = phi + r_a*sqrt(N) * unit(phi - goal); phi itself when the herd is at the goal."""
    x, y = drive_point_kernel(float(phi[0]), float(phi[1]),
                              float(goal[0]), float(goal[1]), r_a, n)
    return np.array([x, y], dtype=np.float64)


def scripted_action(world: WorldState, params: WorldParams,
                    shepherd_speed: float,
                    slow_radius_factor: float = SLOW_RADIUS_FACTOR,
                    standoff: float | None = None,
                    transit_speed: float = TRANSIT_SPEED_CAP) -> ControlOutput:
    """One scripted decision: (direction, speed in [0, 1])."""
    phi_x, phi_y = mean2(world.sheep_pos)
    idx, fdist = furthest_index(world.sheep_pos, phi_x, phi_y)
    threshold = herd_threshold(world.n_sheep, params.r_a)
    if standoff is None:
        standoff = 3.0 * params.r_a
    direction, speed = scripted_kernel(
        world.sheep_pos, phi_x, phi_y,
        world.sheep_pos[idx, 0], world.sheep_pos[idx, 1], fdist,
        world.shepherd_pos[0], world.shepherd_pos[1],
        world.goal[0], world.goal[1],
        params.r_a, threshold, params.goal_radius, shepherd_speed,
        slow_radius_factor * params.r_a, standoff, transit_speed,
    )
    return ControlOutput(direction, speed)


class ScriptedController:
    """Callable wrapper so the scripted shepherd plugs into the episode engine."""

    def __init__(self, params: WorldParams, shepherd_speed: float,
                 slow_radius_factor: float = SLOW_RADIUS_FACTOR,
                 standoff: float | None = None,
                 transit_speed: float = TRANSIT_SPEED_CAP):
        self.params = params
        self.shepherd_speed = shepherd_speed
        self.slow_radius_factor = slow_radius_factor
        self.standoff = standoff
        self.transit_speed = transit_speed

    def __call__(self, world: WorldState) -> ControlOutput:
        return scripted_action(world, self.params, self.shepherd_speed,
                               self.slow_radius_factor, self.standoff,
                               self.transit_speed)

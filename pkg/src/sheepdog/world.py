"""Paddock state and the per-step flocking update for the sheep.

The update follows the classic predator-triggered flocking rules: sheep
within the shepherd's influence radius combine inertia, close-range
repulsion from each other, attraction to the local centre of mass of their
nearest neighbours, repulsion from the shepherd and angular noise; sheep
outside it graze (occasional random steps). All positions stay clamped to
the square paddock [0, L] x [0, L].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .geometry import TWO_PI, Vec2, clamp, herd_threshold

__all__ = [
    "WorldParams",
    "SheepParams",
    "WorldState",
    "resolve_n_neighbors",
    "lcm_n_nearest",
    "sheep_heading",
    "sheep_step",
]


@dataclass(frozen=True)
class WorldParams:
    """Static geometry of one scenario."""

    n_sheep: int = 15
    length: float = 150.0  # paddock side L
    r_a: float = 2.0  # sheep-sheep interaction distance
    r_s: float = 65.0  # shepherd influence distance
    goal_radius: float = 6.0  # arrival tolerance for the herd centre

    def __post_init__(self):
        if self.n_sheep < 1:
            raise ValueError("need at least one sheep")
        if self.length <= 0:
            raise ValueError("paddock side must be positive")
        if self.r_a <= 0:
            raise ValueError("r_a must be positive")
        if self.r_s <= self.r_a:
            raise ValueError("r_s must exceed r_a")
        if self.goal_radius <= 0:
            raise ValueError("goal_radius must be positive")

    def herd_threshold(self) -> float:
        return herd_threshold(self.n_sheep, self.r_a)


@dataclass(frozen=True)
class SheepParams:
    """Weights of the flocking update.

    ``n_neighbors`` of None means ceil(2N/3), capped at N-1.
    """

    rho_a: float = 2.0  # close-range sheep-sheep repulsion
    c: float = 1.05  # attraction to the local centre of mass
    rho_s: float = 1.0  # repulsion from the shepherd
    h: float = 0.5  # inertia
    e: float = 0.3  # angular noise
    delta: float = 1.0  # sheep step length
    p_graze: float = 0.05  # probability of a grazing step when unthreatened
    n_neighbors: int | None = None

    def __post_init__(self):
        for name in ("rho_a", "c", "rho_s", "h", "e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not 0.0 <= self.p_graze <= 1.0:
            raise ValueError("p_graze must be a probability")


def resolve_n_neighbors(params: SheepParams, n_sheep: int) -> int:
    if params.n_neighbors is not None:
        if not 0 <= params.n_neighbors <= n_sheep - 1:
            raise ValueError("n_neighbors must lie in [0, N-1]")
        return params.n_neighbors
    return min(math.ceil(2 * n_sheep / 3), n_sheep - 1)


@dataclass
class WorldState:
    """Full simulation state: every sheep, the shepherd, the goal, the clock."""

    sheep_pos: np.ndarray  # (N, 2)
    sheep_heading: np.ndarray  # (N, 2), unit rows (last movement direction)
    shepherd_pos: np.ndarray  # (2,)
    shepherd_last_move: np.ndarray  # (2,), displacement of the previous step
    goal: np.ndarray  # (2,)
    t: int = 0

    @property
    def n_sheep(self) -> int:
        return self.sheep_pos.shape[0]

    def copy(self) -> "WorldState":
        return WorldState(
            sheep_pos=self.sheep_pos.copy(),
            sheep_heading=self.sheep_heading.copy(),
            shepherd_pos=self.shepherd_pos.copy(),
            shepherd_last_move=self.shepherd_last_move.copy(),
            goal=self.goal.copy(),
            t=self.t,
        )

    def validate(self, params: WorldParams) -> None:
        arrays = (self.sheep_pos, self.sheep_heading, self.shepherd_pos,
                  self.shepherd_last_move, self.goal)
        if not all(np.isfinite(a).all() for a in arrays):
            raise ValueError("non-finite component in world state")
        if self.sheep_pos.shape != (params.n_sheep, 2):
            raise ValueError("sheep count does not match params")
        box = (self.sheep_pos.min() >= 0.0 and self.sheep_pos.max() <= params.length
               and 0.0 <= self.shepherd_pos.min() and self.shepherd_pos.max() <= params.length)
        if not box:
            raise ValueError("positions outside the paddock")
        norms = np.hypot(self.sheep_heading[:, 0], self.sheep_heading[:, 1])
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("sheep headings must be unit vectors")
        if self.t < 0:
            raise ValueError("negative step counter")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def lcm_kernel(pos: np.ndarray, i: int, k: int) -> tuple[float, float]:
    """Mean position of the k nearest other sheep; distance ties keep the lowest index."""
    n = pos.shape[0]
    d2 = np.empty(n, dtype=np.float64)
    for j in range(n):
        dx = pos[j, 0] - pos[i, 0]
        dy = pos[j, 1] - pos[i, 1]
        d2[j] = dx * dx + dy * dy
    d2[i] = np.inf
    sx = 0.0
    sy = 0.0
    for _ in range(k):
        best = 0
        best_d2 = np.inf
        for j in range(n):
            if d2[j] < best_d2:
                best_d2 = d2[j]
                best = j
        sx += pos[best, 0]
        sy += pos[best, 1]
        d2[best] = np.inf
    return sx / k, sy / k


@njit(cache=True)
def heading_kernel(pos, head, i, shep_x, shep_y,
                   rho_a, c, rho_s, h, e, n_neighbors, r_a, r_s,
                   nx, ny) -> tuple[float, float]:
    """New unit heading for sheep i; falls back to the old heading when the combination is zero.

    Attraction and shepherd repulsion only act while the shepherd is within
    r_s. (nx, ny) is the caller-supplied unit noise vector.
    """
    px = pos[i, 0]
    py = pos[i, 1]
    hx = h * head[i, 0]
    hy = h * head[i, 1]
    r_a2 = r_a * r_a
    for j in range(pos.shape[0]):
        if j == i:
            continue
        dx = px - pos[j, 0]
        dy = py - pos[j, 1]
        d2 = dx * dx + dy * dy
        if d2 > 0.0 and d2 < r_a2:
            d = math.sqrt(d2)
            hx += rho_a * dx / d
            hy += rho_a * dy / d
    dsx = px - shep_x
    dsy = py - shep_y
    d_shep = math.hypot(dsx, dsy)
    if d_shep < r_s:
        if n_neighbors > 0:
            lx, ly = lcm_kernel(pos, i, n_neighbors)
            ax = lx - px
            ay = ly - py
            an = math.hypot(ax, ay)
            if an > 0.0:
                hx += c * ax / an
                hy += c * ay / an
        if d_shep > 0.0:
            hx += rho_s * dsx / d_shep
            hy += rho_s * dsy / d_shep
    hx += e * nx
    hy += e * ny
    norm = math.hypot(hx, hy)
    if norm == 0.0:
        return head[i, 0], head[i, 1]
    return hx / norm, hy / norm


@njit(cache=True)
def sheep_step_kernel(pos, head, shep_x, shep_y,
                      rho_a, c, rho_s, h, e, delta, p_graze,
                      n_neighbors, r_a, r_s, length,
                      noise_ang, graze_u, out_pos, out_head) -> None:
    """Synchronous flock update: all new headings read the pre-step state.

    Per-sheep random input: noise_ang[i] doubles as the noise direction for
    threatened sheep and as the grazing direction otherwise; graze_u[i] is
    the grazing coin.
    """
    n = pos.shape[0]
    r_s2 = r_s * r_s
    for i in range(n):
        dsx = pos[i, 0] - shep_x
        dsy = pos[i, 1] - shep_y
        if dsx * dsx + dsy * dsy < r_s2:
            nx = math.cos(noise_ang[i])
            ny = math.sin(noise_ang[i])
            ux, uy = heading_kernel(pos, head, i, shep_x, shep_y,
                                    rho_a, c, rho_s, h, e,
                                    n_neighbors, r_a, r_s, nx, ny)
            out_head[i, 0] = ux
            out_head[i, 1] = uy
            out_pos[i, 0] = clamp(pos[i, 0] + delta * ux, 0.0, length)
            out_pos[i, 1] = clamp(pos[i, 1] + delta * uy, 0.0, length)
        elif graze_u[i] < p_graze:
            ux = math.cos(noise_ang[i])
            uy = math.sin(noise_ang[i])
            out_head[i, 0] = ux
            out_head[i, 1] = uy
            out_pos[i, 0] = clamp(pos[i, 0] + delta * ux, 0.0, length)
            out_pos[i, 1] = clamp(pos[i, 1] + delta * uy, 0.0, length)
        else:
            out_head[i, 0] = head[i, 0]
            out_head[i, 1] = head[i, 1]
            out_pos[i, 0] = pos[i, 0]
            out_pos[i, 1] = pos[i, 1]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def lcm_n_nearest(world: WorldState, i: int, n: int) -> Vec2:
    """Mean position of the n nearest other sheep to sheep i."""
    if world.n_sheep < 2:
        raise ValueError("no neighbours")
    if not 1 <= n <= world.n_sheep - 1:
        raise ValueError("n must lie in [1, N-1]")
    return np.array(lcm_kernel(world.sheep_pos, i, n), dtype=np.float64)


def sheep_heading(world: WorldState, i: int, params: SheepParams,
                  noise: Vec2, world_params: WorldParams) -> Vec2:
    """New unit heading for sheep i given a caller-drawn unit noise vector."""
    k = resolve_n_neighbors(params, world.n_sheep)
    ux, uy = heading_kernel(
        world.sheep_pos, world.sheep_heading, i,
        world.shepherd_pos[0], world.shepherd_pos[1],
        params.rho_a, params.c, params.rho_s, params.h, params.e,
        k, world_params.r_a, world_params.r_s,
        float(noise[0]), float(noise[1]),
    )
    return np.array([ux, uy], dtype=np.float64)


def sheep_step(world: WorldState, params: SheepParams,
               world_params: WorldParams, rng: np.random.Generator) -> WorldState:
    """Advance every sheep one step; shepherd, goal and t are untouched.

    Consumes exactly one uniform block of shape (2, N) from ``rng``:
    row 0 scaled to noise/graze angles, row 1 the grazing coins. The engine
    pre-draws the same blocks, so stepping here matches a fused episode run
    bit for bit.
    """
    n = world.n_sheep
    u = rng.random((2, n))
    return sheep_step_with_draws(world, params, world_params, u)


def sheep_step_with_draws(world: WorldState, params: SheepParams,
                          world_params: WorldParams, u: np.ndarray) -> WorldState:
    """sheep_step with the per-step uniform block supplied by the caller."""
    n = world.n_sheep
    noise_ang = TWO_PI * u[0]
    graze_u = u[1]
    out_pos = np.empty((n, 2), dtype=np.float64)
    out_head = np.empty((n, 2), dtype=np.float64)
    sheep_step_kernel(
        world.sheep_pos, world.sheep_heading,
        world.shepherd_pos[0], world.shepherd_pos[1],
        params.rho_a, params.c, params.rho_s, params.h, params.e,
        params.delta, params.p_graze,
        resolve_n_neighbors(params, n),
        world_params.r_a, world_params.r_s, world_params.length,
        noise_ang, graze_u, out_pos, out_head,
    )
    return WorldState(
        sheep_pos=out_pos,
        sheep_heading=out_head,
        shepherd_pos=world.shepherd_pos.copy(),
        shepherd_last_move=world.shepherd_last_move.copy(),
        goal=world.goal.copy(),
        t=world.t,
    )

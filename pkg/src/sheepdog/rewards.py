"""Reward functions: per-step collection and driving instruction sets, the
intuitive step-counting baseline, and episode-level objective assembly.

All step rewards are stateless functions of a (previous, current) state
pair. Landmarks (herd centre, separated sheep, collecting and driving
points) are computed per state; "hat" directions are taken from actual
displacements between the two states, and every alignment term silently
skips when its direction is degenerate (no displacement, coincident
points).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from ._jit import njit
from .geometry import ang_diff, furthest_index, herd_threshold, mean2
from .scripted import collect_point_kernel, drive_point_kernel
from .world import WorldParams, WorldState

if TYPE_CHECKING:  # pragma: no cover
    from .episode import EpisodeTrace

__all__ = [
    "RewardParams",
    "Skill",
    "Landmarks",
    "StepPair",
    "Objectives",
    "landmarks",
    "collect_reward_step",
    "drive_reward_step",
    "baseline_step",
    "baseline_fitness",
    "episode_objectives",
    "step_components",
]

BASELINE_EPS = 1e-9  # deadband below which a metric counts as unchanged


class Skill(str, Enum):
    COLLECT = "collect"
    DRIVE = "drive"
    COMBINED = "combined"
    BASELINE = "baseline"

    def n_objectives(self) -> int:
        return 2 if self is Skill.COMBINED else 1


@dataclass(frozen=True)
class RewardParams:
    """Every constant the instruction sets leave symbolic."""

    c0: float = 1.0  # per-step award while the herd is dispersed (collect)
    d0: float = 1.0  # per-step award while the herd is gathered (drive)
    u0: float = 5.0  # punishment for pressuring sheep while out of position
    cf0: float = 3.0  # award for force on the separated sheep (collect)
    df0: float = 3.0  # award for force on the herd (drive)
    dtheta: float = math.pi / 4  # alignment tolerance
    delta: float = 4.0  # arrival tolerance around the target point
    delta_psi: float = 6.0  # stand-off distance for the force punishment
    tau: float = 0.0  # baseline starting value
    beta: float = 10.0  # baseline per-metric step increment

    def __post_init__(self):
        if not 0.0 < self.dtheta <= math.pi:
            raise ValueError("dtheta must lie in (0, pi]")
        if self.delta <= 0 or self.delta_psi <= 0:
            raise ValueError("delta and delta_psi must be positive")
        for name in ("c0", "d0", "u0", "cf0", "df0", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def to_array(self) -> np.ndarray:
        return np.array([self.c0, self.d0, self.u0, self.cf0, self.df0,
                         self.dtheta, self.delta, self.delta_psi,
                         self.tau, self.beta], dtype=np.float64)


# rp array layout (see RewardParams.to_array)
RP_C0, RP_D0, RP_U0, RP_CF0, RP_DF0, RP_DTHETA, RP_DELTA, RP_DELTA_PSI, RP_TAU, RP_BETA = range(10)

# landmark array layout
LM_PHI_X, LM_PHI_Y, LM_SIG_X, LM_SIG_Y, LM_FDIST, LM_PC_X, LM_PC_Y, LM_PD_X, LM_PD_Y = range(9)


@dataclass(frozen=True)
class Landmarks:
    phi: np.ndarray  # herd centre
    sigma_idx: int  # furthest sheep from the centre (ties: lowest index)
    sigma: np.ndarray
    furthest: float
    p_c: np.ndarray  # collecting point
    p_d: np.ndarray  # driving point

    def to_array(self) -> np.ndarray:
        return np.array([self.phi[0], self.phi[1], self.sigma[0], self.sigma[1],
                         self.furthest, self.p_c[0], self.p_c[1],
                         self.p_d[0], self.p_d[1]], dtype=np.float64)


@dataclass
class StepPair:
    """Two consecutive world states plus their per-state landmarks."""

    prev: WorldState
    curr: WorldState
    prev_landmarks: Landmarks
    curr_landmarks: Landmarks

    @staticmethod
    def from_states(prev: WorldState, curr: WorldState, params: WorldParams) -> "StepPair":
        if prev.t + 1 != curr.t:
            raise ValueError("states must be consecutive")
        if prev.n_sheep != curr.n_sheep:
            raise ValueError("sheep count changed mid-pair")
        return StepPair(prev, curr, landmarks(prev, params), landmarks(curr, params))


@dataclass
class Objectives:
    """Per-genome fitness vector; 2-D for the combined skill, else 1-D."""

    values: np.ndarray
    success: bool = False

    @property
    def scalar(self) -> float:
        return float(self.values.sum())


def landmarks(world: WorldState, params: WorldParams) -> Landmarks:
    """Herd centre, separated sheep and the two shepherd target points of one state."""
    lm = np.empty(9, dtype=np.float64)
    idx = landmarks_kernel(world.sheep_pos, world.goal[0], world.goal[1], params.r_a, lm)
    return Landmarks(
        phi=lm[0:2].copy(), sigma_idx=int(idx), sigma=lm[2:4].copy(),
        furthest=float(lm[4]), p_c=lm[5:7].copy(), p_d=lm[7:9].copy(),
    )


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def landmarks_kernel(pos: np.ndarray, goal_x: float, goal_y: float,
                     r_a: float, out: np.ndarray) -> int:
    phi_x, phi_y = mean2(pos)
    idx, fdist = furthest_index(pos, phi_x, phi_y)
    sig_x = pos[idx, 0]
    sig_y = pos[idx, 1]
    pc_x, pc_y = collect_point_kernel(phi_x, phi_y, sig_x, sig_y, r_a)
    pd_x, pd_y = drive_point_kernel(phi_x, phi_y, goal_x, goal_y, r_a, pos.shape[0])
    out[0] = phi_x
    out[1] = phi_y
    out[2] = sig_x
    out[3] = sig_y
    out[4] = fdist
    out[5] = pc_x
    out[6] = pc_y
    out[7] = pd_x
    out[8] = pd_y
    return idx


@njit(cache=True)
def _min_sheep_dist(pos: np.ndarray, x: float, y: float) -> float:
    best = np.inf
    for j in range(pos.shape[0]):
        d = math.hypot(pos[j, 0] - x, pos[j, 1] - y)
        if d < best:
            best = d
    return best


@njit(cache=True)
def _alignment_term(move_x, move_y, to_x, to_y, dtheta) -> float:
    """Alignment of a displacement with a bearing: award (dtheta - diff)
    within tolerance, punish diff outside, both scaled by the displacement
    length. The scaling makes the term continuous at zero displacement
    (degenerate directions contribute nothing) and denies rate-free income
    to policies that merely orient while standing still."""
    norm = math.hypot(move_x, move_y)
    if norm == 0.0 or (to_x == 0.0 and to_y == 0.0):
        return 0.0
    diff = ang_diff(math.atan2(move_y, move_x), math.atan2(to_y, to_x))
    if diff <= dtheta:
        return (dtheta - diff) * norm
    return -diff * norm


@njit(cache=True)
def _point_chase_terms(ppsi_x, ppsi_y, cpsi_x, cpsi_y,
                       prev_tx, prev_ty, curr_tx, curr_ty,
                       curr_pos, dtheta, delta, delta_psi, u0, r_s) -> float:
    """Shared shepherd-vs-target block: alignment, approach, stand-off punishment, arrival."""
    total = _alignment_term(cpsi_x - ppsi_x, cpsi_y - ppsi_y,
                            curr_tx - cpsi_x, curr_ty - cpsi_y, dtheta)
    d_curr = math.hypot(curr_tx - cpsi_x, curr_ty - cpsi_y)
    d_prev = math.hypot(prev_tx - ppsi_x, prev_ty - ppsi_y)
    if d_curr < d_prev:
        total += d_prev - d_curr
    else:
        total -= 2.0 * (d_curr - d_prev)
    if d_curr > delta_psi and _min_sheep_dist(curr_pos, cpsi_x, cpsi_y) < r_s:
        total -= u0
    if d_curr <= delta:
        total += delta - d_curr
    return total


@njit(cache=True)
def collect_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                        lm_prev, lm_curr, sig_idx, threshold, r_s,
                        rp: np.ndarray) -> float:
    total = 0.0
    dispersed = lm_curr[LM_FDIST] > threshold
    if dispersed:
        total += rp[RP_C0]
    total += _point_chase_terms(ppsi_x, ppsi_y, cpsi_x, cpsi_y,
                                lm_prev[LM_PC_X], lm_prev[LM_PC_Y],
                                lm_curr[LM_PC_X], lm_curr[LM_PC_Y],
                                curr_pos, rp[RP_DTHETA], rp[RP_DELTA],
                                rp[RP_DELTA_PSI], rp[RP_U0], r_s)
    if dispersed:
        # separated-sheep block: only meaningful while a sheep is outside the herd
        sdx = curr_pos[sig_idx, 0] - prev_pos[sig_idx, 0]
        sdy = curr_pos[sig_idx, 1] - prev_pos[sig_idx, 1]
        total += _alignment_term(sdx, sdy,
                                 lm_curr[LM_PHI_X] - lm_curr[LM_SIG_X],
                                 lm_curr[LM_PHI_Y] - lm_curr[LM_SIG_Y],
                                 rp[RP_DTHETA])
        s_curr = lm_curr[LM_FDIST]
        s_prev = lm_prev[LM_FDIST]
        if s_curr < s_prev:
            total += 2.0 * (s_prev - s_curr)
        else:
            total -= 4.0 * (s_curr - s_prev)
        d_sig = math.hypot(curr_pos[sig_idx, 0] - cpsi_x, curr_pos[sig_idx, 1] - cpsi_y)
        if d_sig < r_s:
            total += rp[RP_CF0]
    return total


@njit(cache=True)
def drive_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                      goal_x, goal_y, lm_prev, lm_curr, threshold, r_s,
                      rp: np.ndarray) -> float:
    total = 0.0
    if lm_curr[LM_FDIST] <= threshold:
        total += rp[RP_D0]
    total += _point_chase_terms(ppsi_x, ppsi_y, cpsi_x, cpsi_y,
                                lm_prev[LM_PD_X], lm_prev[LM_PD_Y],
                                lm_curr[LM_PD_X], lm_curr[LM_PD_Y],
                                curr_pos, rp[RP_DTHETA], rp[RP_DELTA],
                                rp[RP_DELTA_PSI], rp[RP_U0], r_s)
    # herd-centre block: push the centre of mass toward the goal
    total += _alignment_term(lm_curr[LM_PHI_X] - lm_prev[LM_PHI_X],
                             lm_curr[LM_PHI_Y] - lm_prev[LM_PHI_Y],
                             goal_x - lm_curr[LM_PHI_X],
                             goal_y - lm_curr[LM_PHI_Y],
                             rp[RP_DTHETA])
    g_curr = math.hypot(goal_x - lm_curr[LM_PHI_X], goal_y - lm_curr[LM_PHI_Y])
    g_prev = math.hypot(goal_x - lm_prev[LM_PHI_X], goal_y - lm_prev[LM_PHI_Y])
    if g_curr < g_prev:
        total += 2.0 * (g_prev - g_curr)
    else:
        total -= 4.0 * (g_curr - g_prev)
    if _min_sheep_dist(curr_pos, cpsi_x, cpsi_y) < r_s:
        total += rp[RP_DF0]
    return total


@njit(cache=True)
def _mean_spread(pos: np.ndarray, phi_x: float, phi_y: float) -> float:
    s = 0.0
    for j in range(pos.shape[0]):
        s += math.hypot(pos[j, 0] - phi_x, pos[j, 1] - phi_y)
    return s / pos.shape[0]


@njit(cache=True)
def _step_sign(prev_v: float, curr_v: float, beta: float) -> float:
    if curr_v < prev_v - BASELINE_EPS:
        return beta
    if curr_v > prev_v + BASELINE_EPS:
        return -beta
    return 0.0


@njit(cache=True)
def baseline_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                         goal_x, goal_y, lm_prev, lm_curr, beta: float) -> float:
    total = 0.0
    # 1: shepherd toward the driving point
    total += _step_sign(math.hypot(lm_prev[LM_PD_X] - ppsi_x, lm_prev[LM_PD_Y] - ppsi_y),
                        math.hypot(lm_curr[LM_PD_X] - cpsi_x, lm_curr[LM_PD_Y] - cpsi_y),
                        beta)
    # 2: shepherd toward the herd centre
    total += _step_sign(math.hypot(lm_prev[LM_PHI_X] - ppsi_x, lm_prev[LM_PHI_Y] - ppsi_y),
                        math.hypot(lm_curr[LM_PHI_X] - cpsi_x, lm_curr[LM_PHI_Y] - cpsi_y),
                        beta)
    # 3: average spread of the herd
    total += _step_sign(_mean_spread(prev_pos, lm_prev[LM_PHI_X], lm_prev[LM_PHI_Y]),
                        _mean_spread(curr_pos, lm_curr[LM_PHI_X], lm_curr[LM_PHI_Y]),
                        beta)
    # 4: herd centre toward the goal
    total += _step_sign(math.hypot(goal_x - lm_prev[LM_PHI_X], goal_y - lm_prev[LM_PHI_Y]),
                        math.hypot(goal_x - lm_curr[LM_PHI_X], goal_y - lm_curr[LM_PHI_Y]),
                        beta)
    return total


@njit(cache=True)
def step_components_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                           goal_x, goal_y, lm_prev, lm_curr, sig_idx,
                           threshold, r_s, rp) -> tuple[float, float, float]:
    """Collect, drive and baseline values of one step, in that order."""
    c = collect_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                            lm_prev, lm_curr, sig_idx, threshold, r_s, rp)
    d = drive_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                          goal_x, goal_y, lm_prev, lm_curr, threshold, r_s, rp)
    b = baseline_step_kernel(prev_pos, ppsi_x, ppsi_y, curr_pos, cpsi_x, cpsi_y,
                             goal_x, goal_y, lm_prev, lm_curr, rp[RP_BETA])
    return c, d, b


@njit(cache=True)
def trace_sums_kernel(sheep_states, shep_states, goal_x, goal_y,
                      r_a, threshold, r_s, rp) -> tuple[float, float, float]:
    """Recompute the per-step reward sums of a captured state sequence."""
    k = sheep_states.shape[0]
    lm_prev = np.empty(9, dtype=np.float64)
    lm_curr = np.empty(9, dtype=np.float64)
    landmarks_kernel(sheep_states[0], goal_x, goal_y, r_a, lm_curr)
    sum_c = 0.0
    sum_d = 0.0
    sum_b = 0.0
    for t in range(1, k):
        for i in range(9):
            lm_prev[i] = lm_curr[i]
        sig_idx = landmarks_kernel(sheep_states[t], goal_x, goal_y, r_a, lm_curr)
        c, d, b = step_components_kernel(
            sheep_states[t - 1], shep_states[t - 1, 0], shep_states[t - 1, 1],
            sheep_states[t], shep_states[t, 0], shep_states[t, 1],
            goal_x, goal_y, lm_prev, lm_curr, sig_idx, threshold, r_s, rp)
        sum_c += c
        sum_d += d
        sum_b += b
    return sum_c, sum_d, sum_b


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def collect_reward_step(pair: StepPair, params: RewardParams,
                        world_params: WorldParams) -> float:
    """One step of the collection instruction set."""
    return collect_step_kernel(
        pair.prev.sheep_pos, pair.prev.shepherd_pos[0], pair.prev.shepherd_pos[1],
        pair.curr.sheep_pos, pair.curr.shepherd_pos[0], pair.curr.shepherd_pos[1],
        pair.prev_landmarks.to_array(), pair.curr_landmarks.to_array(),
        pair.curr_landmarks.sigma_idx,
        herd_threshold(pair.curr.n_sheep, world_params.r_a), world_params.r_s,
        params.to_array(),
    )


def drive_reward_step(pair: StepPair, params: RewardParams,
                      world_params: WorldParams) -> float:
    """One step of the driving instruction set."""
    return drive_step_kernel(
        pair.prev.sheep_pos, pair.prev.shepherd_pos[0], pair.prev.shepherd_pos[1],
        pair.curr.sheep_pos, pair.curr.shepherd_pos[0], pair.curr.shepherd_pos[1],
        pair.curr.goal[0], pair.curr.goal[1],
        pair.prev_landmarks.to_array(), pair.curr_landmarks.to_array(),
        herd_threshold(pair.curr.n_sheep, world_params.r_a), world_params.r_s,
        params.to_array(),
    )


def baseline_step(pair: StepPair, params: RewardParams,
                  world_params: WorldParams) -> float:
    """One step of the intuitive baseline: +/-beta per improving/worsening metric."""
    return baseline_step_kernel(
        pair.prev.sheep_pos, pair.prev.shepherd_pos[0], pair.prev.shepherd_pos[1],
        pair.curr.sheep_pos, pair.curr.shepherd_pos[0], pair.curr.shepherd_pos[1],
        pair.curr.goal[0], pair.curr.goal[1],
        pair.prev_landmarks.to_array(), pair.curr_landmarks.to_array(),
        params.beta,
    )


def step_components(pair: StepPair, params: RewardParams,
                    world_params: WorldParams) -> tuple[float, float, float]:
    """(collect, drive, baseline) values of one step."""
    return step_components_kernel(
        pair.prev.sheep_pos, pair.prev.shepherd_pos[0], pair.prev.shepherd_pos[1],
        pair.curr.sheep_pos, pair.curr.shepherd_pos[0], pair.curr.shepherd_pos[1],
        pair.curr.goal[0], pair.curr.goal[1],
        pair.prev_landmarks.to_array(), pair.curr_landmarks.to_array(),
        pair.curr_landmarks.sigma_idx,
        herd_threshold(pair.curr.n_sheep, world_params.r_a), world_params.r_s,
        params.to_array(),
    )


def _trace_sums(trace: "EpisodeTrace", params: RewardParams,
                world_params: WorldParams) -> tuple[float, float, float]:
    """Reward sums of a trace: recomputed from captured states when present,
    otherwise taken from the stored per-step components."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    if trace.sheep_states is not None:
        threshold = herd_threshold(trace.sheep_states.shape[1], world_params.r_a)
        return trace_sums_kernel(trace.sheep_states, trace.shepherd_states,
                                 trace.goal[0], trace.goal[1],
                                 world_params.r_a, threshold, world_params.r_s,
                                 params.to_array())
    if trace.components is None:
        raise ValueError("trace carries neither states nor reward components")
    sums = trace.components.sum(axis=0)
    return float(sums[0]), float(sums[1]), float(sums[2])


def baseline_fitness(trace: "EpisodeTrace", params: RewardParams,
                     world_params: WorldParams) -> float:
    """Episode baseline fitness: starting value plus step sum minus four
    times the terminal (shepherd-to-centre + shepherd-to-goal + furthest) distances."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    _, _, sum_b = _trace_sums(trace, params, world_params)
    psi = trace.shepherd_xy[-1]
    phi = trace.phi_xy[-1]
    fdist = float(trace.furthest[-1])
    d_shep_phi = math.hypot(psi[0] - phi[0], psi[1] - phi[1])
    d_shep_goal = math.hypot(psi[0] - trace.goal[0], psi[1] - trace.goal[1])
    return params.tau + sum_b - 4.0 * (d_shep_phi + d_shep_goal + fdist)


def episode_objectives(trace: "EpisodeTrace", mode: Skill, params: RewardParams,
                       world_params: WorldParams) -> Objectives:
    """Objective vector of a finished episode under the given skill."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    sum_c, sum_d, sum_b = _trace_sums(trace, params, world_params)
    if mode is Skill.COLLECT:
        values = np.array([sum_c])
    elif mode is Skill.DRIVE:
        values = np.array([sum_d])
    elif mode is Skill.COMBINED:
        values = np.array([sum_c, sum_d])
    else:
        values = np.array([baseline_fitness(trace, params, world_params)])
    # success latches on the first visited state satisfying the predicate
    gathered = trace.furthest <= herd_threshold(trace.n_sheep, world_params.r_a)
    if mode is Skill.COLLECT:
        success = bool(np.any(gathered))
    else:
        dist_goal = np.hypot(trace.phi_xy[:, 0] - trace.goal[0],
                             trace.phi_xy[:, 1] - trace.goal[1])
        success = bool(np.any(gathered & (dist_goal <= world_params.goal_radius)))
    return Objectives(values=values, success=success)

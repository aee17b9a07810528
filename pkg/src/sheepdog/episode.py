"""Episode engine: scenario initialization, the step loop coupling
controller -> shepherd motion -> flock update -> reward accumulation,
success detection, and trace capture.

Episodes are pure functions of (controller, config, reward params, seed).
The RNG contract: scenario initialization consumes the generator first,
then every simulation step consumes exactly one uniform block of shape
(2, N). Built-in controllers run inside one fused kernel; the same episode
stepped through the public operations is bit-identical (tested).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._jit import njit
from .controller import ControlOutput, NeuralController, encode_kernel, forward_kernel
from .geometry import TWO_PI, clamp, herd_threshold
from .rewards import (
    Objectives,
    RewardParams,
    Skill,
    StepPair,
    landmarks as compute_landmarks,
    landmarks_kernel,
    step_components,
    step_components_kernel,
)
from .scripted import ScriptedController, scripted_kernel
from .world import (
    SheepParams,
    WorldParams,
    WorldState,
    resolve_n_neighbors,
    sheep_step_kernel,
    sheep_step_with_draws,
)

__all__ = [
    "EnvKind",
    "EpisodeConfig",
    "EpisodeTrace",
    "EpisodeResult",
    "init_world",
    "apply_action",
    "run_episode",
    "save_trace",
    "load_trace",
]

WORST_OBJECTIVE = -sys.float_info.max

MODE_NAMES = ("collect", "drive")
SKILL_TO_INT = {Skill.COLLECT: 0, Skill.DRIVE: 1, Skill.COMBINED: 2, Skill.BASELINE: 3}


class EnvKind(str, Enum):
    COLLECT = "collect"  # dispersed start, tests gathering
    DRIVE = "drive"  # pre-clustered start far from the goal
    FULL = "full"  # dispersed start, must gather and deliver


@dataclass(frozen=True)
class EpisodeConfig:
    env_kind: EnvKind = EnvKind.FULL
    max_steps: int = 2000
    shepherd_speed: float = 1.5
    world: WorldParams = field(default_factory=WorldParams)
    sheep: SheepParams = field(default_factory=SheepParams)
    eval_episodes: int = 3
    # stop at the first step whose state satisfies the success predicate;
    # with False the episode always runs the full horizon while success
    # still latches on the first satisfying state
    stop_on_success: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.shepherd_speed <= self.sheep.delta:
            raise ValueError("the shepherd must be faster than the sheep")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be at least 1")


@dataclass
class EpisodeTrace:
    """Per-step record of one episode.

    ``data`` columns: t, psi_x, psi_y, phi_x, phi_y, sigma_x, sigma_y,
    furthest_dist. ``components`` columns: collect, drive, baseline step
    values (row 0 is zero). ``sheep_states``/``shepherd_states`` hold the
    full state sequence when the episode was run with capture enabled;
    traces loaded from CSV carry only the summary columns.
    """

    data: np.ndarray  # (K, 8)
    modes: np.ndarray  # (K,) int64, 0 collect / 1 drive
    reward: np.ndarray  # (K,) active-skill per-step value
    skill: Skill
    goal: np.ndarray  # (2,)
    length: float
    initial_sheep: np.ndarray  # (N, 2)
    final_sheep: np.ndarray  # (N, 2)
    components: np.ndarray | None = None  # (K, 3)
    sheep_states: np.ndarray | None = None  # (K, N, 2)
    shepherd_states: np.ndarray | None = None  # (K, 2)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def n_sheep(self) -> int:
        return self.initial_sheep.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def shepherd_xy(self) -> np.ndarray:
        return self.data[:, 1:3]

    @property
    def phi_xy(self) -> np.ndarray:
        return self.data[:, 3:5]

    @property
    def sigma_xy(self) -> np.ndarray:
        return self.data[:, 5:7]

    @property
    def furthest(self) -> np.ndarray:
        return self.data[:, 7]


@dataclass
class EpisodeResult:
    objectives: Objectives
    success: bool
    steps_used: int
    trace: EpisodeTrace | None = None
    aborted: bool = False


# ---------------------------------------------------------------------------
# Scenario initialization
# ---------------------------------------------------------------------------


def init_world(config: EpisodeConfig, seed) -> WorldState:
    """Deterministic scenario start; ``seed`` may be an int, SeedSequence or Generator.

    Draw order: sheep positions, then heading angles.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    wp = config.world
    n = wp.n_sheep
    length = wp.length
    if config.env_kind is EnvKind.DRIVE:
        center = np.array([0.3 * length, 0.3 * length])
        radius = herd_threshold(n, wp.r_a) / 2.0
        ang = rng.uniform(0.0, TWO_PI, n)
        rad = radius * np.sqrt(rng.random(n))
        pos = center + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        shepherd = np.array([0.1 * length, 0.1 * length])
    else:
        pos = rng.uniform(0.25 * length, 0.75 * length, (n, 2))
        shepherd = np.array([0.05 * length, 0.05 * length])
    head_ang = rng.uniform(0.0, TWO_PI, n)
    heading = np.column_stack([np.cos(head_ang), np.sin(head_ang)])
    return WorldState(
        sheep_pos=np.clip(pos, 0.0, length),
        sheep_heading=heading,
        shepherd_pos=shepherd,
        shepherd_last_move=np.zeros(2),
        goal=np.array([0.9 * length, 0.9 * length]),
        t=0,
    )


def apply_action(world: WorldState, action: ControlOutput, delta_s: float,
                 params: WorldParams) -> WorldState:
    """Move the shepherd one step; position clamps to the paddock and
    last_move records the realized displacement."""
    px = world.shepherd_pos[0]
    py = world.shepherd_pos[1]
    nx = clamp(px + action.speed * delta_s * math.cos(action.direction), 0.0, params.length)
    ny = clamp(py + action.speed * delta_s * math.sin(action.direction), 0.0, params.length)
    out = world.copy()
    out.shepherd_pos = np.array([nx, ny])
    out.shepherd_last_move = np.array([nx - px, ny - py])
    return out


# ---------------------------------------------------------------------------
# Fused episode kernel
# ---------------------------------------------------------------------------


@njit(cache=True)
def _success_kernel(fdist, phi_x, phi_y, goal_x, goal_y,
                    mode_int, threshold, goal_radius) -> bool:
    gathered = fdist <= threshold
    if mode_int == 0:  # collect: gathering alone suffices
        return gathered
    return gathered and math.hypot(phi_x - goal_x, phi_y - goal_y) <= goal_radius


@njit(cache=True)
def episode_kernel(pos0, head0, psi0, goal,
                   r_a, r_s, length, threshold, goal_radius,
                   rho_a, c, rho_s, h, e, delta, p_graze, n_neighbors,
                   ctrl_kind, w_ih, w_ho, mask_f, delta_s,
                   slow_within, standoff, slow_speed,
                   mode_int, max_steps, stop_on_success, draws, rp,
                   trace_data, trace_modes, comps,
                   cap_sheep, cap_shep, capture,
                   final_pos) -> tuple[int, bool, bool, float, float, float]:
    n = pos0.shape[0]
    pos = pos0.copy()
    head = head0.copy()
    nxt_pos = np.empty((n, 2), dtype=np.float64)
    nxt_head = np.empty((n, 2), dtype=np.float64)
    noise_ang = np.empty(n, dtype=np.float64)
    graze_u = np.empty(n, dtype=np.float64)
    lm_prev = np.empty(9, dtype=np.float64)
    lm_curr = np.empty(9, dtype=np.float64)
    x_in = np.empty(9, dtype=np.float64)
    psi_x = psi0[0]
    psi_y = psi0[1]

    sig_idx = landmarks_kernel(pos, goal[0], goal[1], r_a, lm_curr)
    trace_data[0, 0] = 0.0
    trace_data[0, 1] = psi_x
    trace_data[0, 2] = psi_y
    for i in range(5):
        trace_data[0, 3 + i] = lm_curr[i]
    trace_modes[0] = 0 if lm_curr[4] > threshold else 1
    comps[0, 0] = 0.0
    comps[0, 1] = 0.0
    comps[0, 2] = 0.0
    if capture:
        cap_sheep[0, :, :] = pos
        cap_shep[0, 0] = psi_x
        cap_shep[0, 1] = psi_y

    success = _success_kernel(lm_curr[4], lm_curr[0], lm_curr[1],
                              goal[0], goal[1], mode_int, threshold, goal_radius)
    steps = 0
    sum_c = 0.0
    sum_d = 0.0
    sum_b = 0.0
    aborted = False
    for t in range(max_steps):
        if stop_on_success and success:
            break
        if ctrl_kind == 0:
            encode_kernel(lm_curr[0], lm_curr[1], lm_curr[2], lm_curr[3],
                          psi_x, psi_y, goal[0], goal[1], length, x_in)
            direction, speed = forward_kernel(w_ih, w_ho, mask_f, x_in)
        else:
            direction, speed = scripted_kernel(pos, lm_curr[0], lm_curr[1],
                                               lm_curr[2], lm_curr[3], lm_curr[4],
                                               psi_x, psi_y, goal[0], goal[1],
                                               r_a, threshold, goal_radius, delta_s,
                                               slow_within, standoff, slow_speed)
        if not (math.isfinite(direction) and math.isfinite(speed)):
            aborted = True
            break
        new_x = clamp(psi_x + speed * delta_s * math.cos(direction), 0.0, length)
        new_y = clamp(psi_y + speed * delta_s * math.sin(direction), 0.0, length)
        for i in range(n):
            noise_ang[i] = TWO_PI * draws[t, 0, i]
            graze_u[i] = draws[t, 1, i]
        sheep_step_kernel(pos, head, new_x, new_y,
                          rho_a, c, rho_s, h, e, delta, p_graze,
                          n_neighbors, r_a, r_s, length,
                          noise_ang, graze_u, nxt_pos, nxt_head)
        for i in range(9):
            lm_prev[i] = lm_curr[i]
        sig_idx = landmarks_kernel(nxt_pos, goal[0], goal[1], r_a, lm_curr)
        cc, dd, bb = step_components_kernel(
            pos, psi_x, psi_y, nxt_pos, new_x, new_y,
            goal[0], goal[1], lm_prev, lm_curr, sig_idx, threshold, r_s, rp)
        sum_c += cc
        sum_d += dd
        sum_b += bb
        steps = t + 1
        trace_data[steps, 0] = float(steps)
        trace_data[steps, 1] = new_x
        trace_data[steps, 2] = new_y
        for i in range(5):
            trace_data[steps, 3 + i] = lm_curr[i]
        trace_modes[steps] = 0 if lm_curr[4] > threshold else 1
        comps[steps, 0] = cc
        comps[steps, 1] = dd
        comps[steps, 2] = bb
        if capture:
            cap_sheep[steps, :, :] = nxt_pos
            cap_shep[steps, 0] = new_x
            cap_shep[steps, 1] = new_y
        tmp = pos
        pos = nxt_pos
        nxt_pos = tmp
        tmp = head
        head = nxt_head
        nxt_head = tmp
        psi_x = new_x
        psi_y = new_y
        # success latches: the predicate held at some visited state
        if _success_kernel(lm_curr[4], lm_curr[0], lm_curr[1],
                           goal[0], goal[1], mode_int, threshold, goal_radius):
            success = True
    final_pos[:, :] = pos
    return steps, success, aborted, sum_c, sum_d, sum_b


# ---------------------------------------------------------------------------
# Episode driver
# ---------------------------------------------------------------------------


def run_episode(controller, config: EpisodeConfig, mode: Skill,
                params: RewardParams, seed, capture: bool = False) -> EpisodeResult:
    """Run one episode and return its objectives, success flag and trace.

    ``controller`` is any callable WorldState -> ControlOutput; the built-in
    neural and scripted controllers run on a fused fast path with identical
    results.
    """
    wp = config.world
    sp = config.sheep
    n = wp.n_sheep
    max_steps = config.max_steps
    rng = np.random.default_rng(seed)
    world0 = init_world(config, rng)
    draws = rng.random((max_steps, 2, n))

    trace_data = np.empty((max_steps + 1, 8), dtype=np.float64)
    trace_modes = np.empty(max_steps + 1, dtype=np.int64)
    comps = np.empty((max_steps + 1, 3), dtype=np.float64)
    cap_rows = max_steps + 1 if capture else 1
    cap_sheep = np.empty((cap_rows, n, 2), dtype=np.float64)
    cap_shep = np.empty((cap_rows, 2), dtype=np.float64)
    final_pos = np.empty((n, 2), dtype=np.float64)

    if _fast_path_ok(controller, config):
        if isinstance(controller, NeuralController):
            ctrl_kind = 0
            genome = controller.genome
            w_ih, w_ho = genome.w_ih, genome.w_ho
            mask_f = genome.mask.astype(np.float64)
            slow_within = standoff = slow_speed = 0.0
        else:
            ctrl_kind = 1
            w_ih = np.zeros((9, 20))
            w_ho = np.zeros((21, 2))
            mask_f = np.zeros(20)
            slow_within = controller.slow_radius_factor * wp.r_a
            standoff = controller.standoff if controller.standoff is not None else 3.0 * wp.r_a
            slow_speed = controller.transit_speed
        steps, success, aborted, sum_c, sum_d, sum_b = episode_kernel(
            world0.sheep_pos, world0.sheep_heading, world0.shepherd_pos, world0.goal,
            wp.r_a, wp.r_s, wp.length, wp.herd_threshold(), wp.goal_radius,
            sp.rho_a, sp.c, sp.rho_s, sp.h, sp.e, sp.delta, sp.p_graze,
            resolve_n_neighbors(sp, n),
            ctrl_kind, w_ih, w_ho, mask_f, config.shepherd_speed,
            slow_within, standoff, slow_speed,
            SKILL_TO_INT[mode], max_steps, config.stop_on_success, draws,
            params.to_array(),
            trace_data, trace_modes, comps,
            cap_sheep, cap_shep, capture, final_pos)
    else:
        steps, success, aborted, sum_c, sum_d, sum_b = _run_episode_generic(
            controller, config, mode, params, world0, draws,
            trace_data, trace_modes, comps, cap_sheep, cap_shep, capture, final_pos)

    k = steps + 1
    trace = None
    if capture:
        trace = EpisodeTrace(
            data=trace_data[:k].copy(),
            modes=trace_modes[:k].copy(),
            reward=_reward_column(comps[:k], mode),
            skill=mode,
            goal=world0.goal.copy(),
            length=wp.length,
            initial_sheep=cap_sheep[0].copy(),
            final_sheep=final_pos.copy(),
            components=comps[:k].copy(),
            sheep_states=cap_sheep[:k].copy(),
            shepherd_states=cap_shep[:k].copy(),
        )

    if aborted:
        values = np.full(mode.n_objectives(), WORST_OBJECTIVE)
        return EpisodeResult(Objectives(values=values, success=False),
                             success=False, steps_used=steps, trace=trace, aborted=True)

    if mode is Skill.COLLECT:
        values = np.array([sum_c])
    elif mode is Skill.DRIVE:
        values = np.array([sum_d])
    elif mode is Skill.COMBINED:
        values = np.array([sum_c, sum_d])
    else:
        final = trace_data[steps]
        d_shep_phi = math.hypot(final[1] - final[3], final[2] - final[4])
        d_shep_goal = math.hypot(final[1] - world0.goal[0], final[2] - world0.goal[1])
        values = np.array([params.tau + sum_b - 4.0 * (d_shep_phi + d_shep_goal + final[7])])
    return EpisodeResult(Objectives(values=values, success=bool(success)),
                         success=bool(success), steps_used=int(steps), trace=trace)


def _fast_path_ok(controller, config: EpisodeConfig) -> bool:
    """The fused kernel only applies when the controller's own parameters
    agree with the episode config; anything else takes the generic loop."""
    if isinstance(controller, NeuralController):
        return controller.params == config.world
    if isinstance(controller, ScriptedController):
        return (controller.params == config.world
                and controller.shepherd_speed == config.shepherd_speed)
    return False


def _reward_column(comps: np.ndarray, mode: Skill) -> np.ndarray:
    if mode is Skill.COLLECT:
        return comps[:, 0].copy()
    if mode is Skill.DRIVE:
        return comps[:, 1].copy()
    if mode is Skill.COMBINED:
        return comps[:, 0] + comps[:, 1]
    return comps[:, 2].copy()


def _run_episode_generic(controller, config, mode, params, world0, draws,
                         trace_data, trace_modes, comps,
                         cap_sheep, cap_shep, capture, final_pos):
    """Reference step loop composing the public operations; bit-identical
    to the fused kernel for equivalent controllers."""
    wp = config.world
    sp = config.sheep
    threshold = wp.herd_threshold()
    mode_int = SKILL_TO_INT[mode]
    world = world0
    lm = compute_landmarks(world, wp)

    trace_data[0] = [0.0, world.shepherd_pos[0], world.shepherd_pos[1],
                     lm.phi[0], lm.phi[1], lm.sigma[0], lm.sigma[1], lm.furthest]
    trace_modes[0] = 0 if lm.furthest > threshold else 1
    comps[0] = 0.0
    if capture:
        cap_sheep[0] = world.sheep_pos
        cap_shep[0] = world.shepherd_pos

    success = _success_kernel(lm.furthest, lm.phi[0], lm.phi[1],
                              world.goal[0], world.goal[1],
                              mode_int, threshold, wp.goal_radius)
    steps = 0
    sum_c = sum_d = sum_b = 0.0
    aborted = False
    for t in range(config.max_steps):
        if config.stop_on_success and success:
            break
        action = controller(world)
        if not (math.isfinite(action.direction) and math.isfinite(action.speed)):
            aborted = True
            break
        moved = apply_action(world, ControlOutput(action.direction, action.speed),
                             config.shepherd_speed, wp)
        stepped = sheep_step_with_draws(moved, sp, wp, draws[t])
        stepped.t = world.t + 1
        lm_next = compute_landmarks(stepped, wp)
        pair = StepPair(prev=world, curr=stepped,
                        prev_landmarks=lm, curr_landmarks=lm_next)
        cc, dd, bb = step_components(pair, params, wp)
        sum_c += cc
        sum_d += dd
        sum_b += bb
        steps = t + 1
        trace_data[steps] = [float(steps), stepped.shepherd_pos[0], stepped.shepherd_pos[1],
                             lm_next.phi[0], lm_next.phi[1],
                             lm_next.sigma[0], lm_next.sigma[1], lm_next.furthest]
        trace_modes[steps] = 0 if lm_next.furthest > threshold else 1
        comps[steps] = [cc, dd, bb]
        if capture:
            cap_sheep[steps] = stepped.sheep_pos
            cap_shep[steps] = stepped.shepherd_pos
        world = stepped
        lm = lm_next
        if _success_kernel(lm.furthest, lm.phi[0], lm.phi[1],
                           world.goal[0], world.goal[1],
                           mode_int, threshold, wp.goal_radius):
            success = True
    final_pos[:, :] = world.sheep_pos
    return steps, bool(success), aborted, sum_c, sum_d, sum_b


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

TRACE_HEADER = "t,psi_x,psi_y,phi_x,phi_y,sigma_x,sigma_y,furthest_dist,mode,reward"


def _fmt(v: float) -> str:
    return repr(float(v))


def _sheep_line(pos: np.ndarray) -> str:
    return ";".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in pos)


def save_trace(trace: EpisodeTrace, path) -> None:
    """Write the step table plus sidecar lines (initial/final sheep, goal,
    paddock, skill) with shortest round-trip float formatting."""
    lines = [
        f"# initial_sheep: {_sheep_line(trace.initial_sheep)}",
        f"# final_sheep: {_sheep_line(trace.final_sheep)}",
        f"# goal: {_fmt(trace.goal[0])} {_fmt(trace.goal[1])}",
        f"# paddock: {_fmt(trace.length)}",
        f"# skill: {trace.skill.value}",
        TRACE_HEADER,
    ]
    for i in range(len(trace)):
        row = trace.data[i]
        lines.append(",".join([
            str(int(row[0])),
            _fmt(row[1]), _fmt(row[2]), _fmt(row[3]), _fmt(row[4]),
            _fmt(row[5]), _fmt(row[6]), _fmt(row[7]),
            MODE_NAMES[int(trace.modes[i])],
            _fmt(trace.reward[i]),
        ]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_sheep_line(text: str) -> np.ndarray:
    pts = [[float(v) for v in chunk.split()] for chunk in text.split(";")]
    return np.array(pts, dtype=np.float64)


def load_trace(path) -> EpisodeTrace:
    """Read a trace CSV back; summary columns only (no captured states)."""
    sidecar: dict[str, str] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                sidecar[key.strip()] = value.strip()
            elif not line.startswith("t,"):
                rows.append(line.split(","))
    if not rows:
        raise ValueError("empty trace file")
    data = np.array([[float(r[i]) for i in range(8)] for r in rows])
    modes = np.array([MODE_NAMES.index(r[8]) for r in rows], dtype=np.int64)
    reward = np.array([float(r[9]) for r in rows])
    goal = np.array([float(v) for v in sidecar["goal"].split()])
    return EpisodeTrace(
        data=data,
        modes=modes,
        reward=reward,
        skill=Skill(sidecar["skill"]),
        goal=goal,
        length=float(sidecar["paddock"]),
        initial_sheep=_parse_sheep_line(sidecar["initial_sheep"]),
        final_sheep=_parse_sheep_line(sidecar["final_sheep"]),
    )

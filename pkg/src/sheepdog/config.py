"""Experiment configuration: presets, the flat ``key = value`` file format,
and the echo written next to every run so artifacts are self-describing.

Dotted prefixes group keys by module (``sheep.rho_a = 2.0``). Unknown keys
are config errors. Floats echo in shortest round-trip form so identical
configs produce byte-identical echoes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .episode import EnvKind, EpisodeConfig
from .evolution import EvolutionConfig
from .rewards import RewardParams, Skill
from .world import SheepParams, WorldParams

__all__ = [
    "ExperimentConfig",
    "desk_config",
    "paper_config",
    "config_to_flat",
    "flat_to_config",
    "config_to_text",
    "parse_config_text",
    "load_config_file",
]

SKILL_ENV = {
    Skill.COLLECT: EnvKind.COLLECT,
    Skill.DRIVE: EnvKind.DRIVE,
    Skill.COMBINED: EnvKind.FULL,
    Skill.BASELINE: EnvKind.FULL,
}


@dataclass(frozen=True)
class ExperimentConfig:
    skill: Skill = Skill.COMBINED
    runs: int = 10
    master_seed: int = 0
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    rewards: RewardParams = field(default_factory=RewardParams)
    heatmap_bins: int = 30
    checkpoint_every: int = 50
    trace_checkpoint_gens: tuple[int, ...] = (1, 50, 125, 250)
    holdout_episodes: int = 5
    output_dir: str | None = None  # set by the CLI; never echoed

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.holdout_episodes < 1:
            raise ValueError("holdout_episodes must be at least 1")
        if self.heatmap_bins < 1:
            raise ValueError("heatmap_bins must be at least 1")


# Preset tuning, shared by both scales: a small mutation floor keeps the
# self-adaptive rates from dying in an all-clone parent pool; a gentle
# stand-off punishment (the influence radius spans half the paddock, so
# "force on sheep" is nearly unavoidable in transit) keeps the reward
# landscape climbable; and training episodes run the full horizon so that
# finishing early converts into post-success income instead of truncating
# it - success then means reaching AND holding the target state.
PRESET_MUT_FLOOR = 0.05
PRESET_MUT_SIGMA = 0.25
PRESET_U0 = 0.5
PRESET_C0 = 0.1
PRESET_CF0 = 0.5
PRESET_DTHETA = math.pi  # full alignment corridor: income scales with stride anyway
PRESET_DELTA = 25.0  # arrival tolerance spans the herd, so holding near the point pays
PRESET_GOAL_RADIUS = 18.0  # delivery zone matched to the gathered herd's own spread
PRESET_STOP_ON_SUCCESS = False


def paper_config(skill: Skill = Skill.COMBINED, master_seed: int = 0) -> ExperimentConfig:
    """Protocol-scale preset: population 50, 250 generations, 10 runs."""
    return ExperimentConfig(
        skill=skill,
        runs=10,
        master_seed=master_seed,
        evolution=EvolutionConfig(pop_size=50, generations=250,
                                  mut_sigma=PRESET_MUT_SIGMA,
                                  mut_floor=PRESET_MUT_FLOOR),
        episode=EpisodeConfig(
            env_kind=SKILL_ENV[skill],
            max_steps=2000,
            world=WorldParams(n_sheep=40, goal_radius=PRESET_GOAL_RADIUS),
            stop_on_success=PRESET_STOP_ON_SUCCESS,
        ),
        rewards=RewardParams(u0=PRESET_U0, c0=PRESET_C0, cf0=PRESET_CF0,
                             dtheta=PRESET_DTHETA, delta=PRESET_DELTA),
    )


def desk_config(skill: Skill = Skill.COMBINED, master_seed: int = 0) -> ExperimentConfig:
    """Desk-scale preset: N=15, population 30, 100 generations, 10 runs;
    the full four-skill comparison finishes within an hour on one core."""
    return ExperimentConfig(
        skill=skill,
        runs=10,
        master_seed=master_seed,
        evolution=EvolutionConfig(pop_size=30, generations=100,
                                  mut_sigma=PRESET_MUT_SIGMA,
                                  mut_floor=PRESET_MUT_FLOOR),
        episode=EpisodeConfig(
            env_kind=SKILL_ENV[skill],
            max_steps=1500,
            world=WorldParams(n_sheep=15, goal_radius=PRESET_GOAL_RADIUS),
            stop_on_success=PRESET_STOP_ON_SUCCESS,
        ),
        rewards=RewardParams(u0=PRESET_U0, c0=PRESET_C0, cf0=PRESET_CF0,
                             dtheta=PRESET_DTHETA, delta=PRESET_DELTA),
    )


# ---------------------------------------------------------------------------
# Flat representation
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_to_flat(cfg: ExperimentConfig) -> dict[str, str]:
    ev, ep, wp, sp, rp = cfg.evolution, cfg.episode, cfg.episode.world, cfg.episode.sheep, cfg.rewards
    return {
        "experiment.skill": cfg.skill.value,
        "experiment.runs": _fmt(cfg.runs),
        "experiment.master_seed": _fmt(cfg.master_seed),
        "experiment.heatmap_bins": _fmt(cfg.heatmap_bins),
        "experiment.checkpoint_every": _fmt(cfg.checkpoint_every),
        "experiment.trace_checkpoint_gens": ",".join(str(g) for g in cfg.trace_checkpoint_gens),
        "experiment.holdout_episodes": _fmt(cfg.holdout_episodes),
        "evolution.pop_size": _fmt(ev.pop_size),
        "evolution.generations": _fmt(ev.generations),
        "evolution.parent_pool_target": _fmt(ev.parent_pool_target),
        "evolution.parent_pool_min": _fmt(ev.parent_pool_min),
        "evolution.diff_scale": _fmt(ev.diff_scale),
        "evolution.mut_sigma": _fmt(ev.mut_sigma),
        "evolution.mut_floor": _fmt(ev.mut_floor),
        "episode.env_kind": ep.env_kind.value,
        "episode.max_steps": _fmt(ep.max_steps),
        "episode.shepherd_speed": _fmt(ep.shepherd_speed),
        "episode.eval_episodes": _fmt(ep.eval_episodes),
        "episode.stop_on_success": _fmt(ep.stop_on_success),
        "world.n_sheep": _fmt(wp.n_sheep),
        "world.length": _fmt(wp.length),
        "world.r_a": _fmt(wp.r_a),
        "world.r_s": _fmt(wp.r_s),
        "world.goal_radius": _fmt(wp.goal_radius),
        "sheep.rho_a": _fmt(sp.rho_a),
        "sheep.c": _fmt(sp.c),
        "sheep.rho_s": _fmt(sp.rho_s),
        "sheep.h": _fmt(sp.h),
        "sheep.e": _fmt(sp.e),
        "sheep.delta": _fmt(sp.delta),
        "sheep.p_graze": _fmt(sp.p_graze),
        "sheep.n_neighbors": "auto" if sp.n_neighbors is None else _fmt(sp.n_neighbors),
        "rewards.c0": _fmt(rp.c0),
        "rewards.d0": _fmt(rp.d0),
        "rewards.u0": _fmt(rp.u0),
        "rewards.cf0": _fmt(rp.cf0),
        "rewards.df0": _fmt(rp.df0),
        "rewards.dtheta": _fmt(rp.dtheta),
        "rewards.delta": _fmt(rp.delta),
        "rewards.delta_psi": _fmt(rp.delta_psi),
        "rewards.tau": _fmt(rp.tau),
        "rewards.beta": _fmt(rp.beta),
    }


def flat_to_config(flat: dict[str, str]) -> ExperimentConfig:
    """Build a config from flat keys; missing keys fall back to defaults,
    unknown keys are errors."""
    flat = dict(flat)

    def take(key, conv, default):
        if key in flat:
            raw = flat.pop(key)
            try:
                return conv(raw)
            except ValueError as exc:
                raise ValueError(f"bad value for {key}: {raw}") from exc
        return default

    def to_gens(raw: str) -> tuple[int, ...]:
        raw = raw.strip()
        if not raw:
            return ()
        return tuple(int(v) for v in raw.split(","))

    def to_neighbors(raw: str):
        return None if raw.strip() == "auto" else int(raw)

    def to_bool(raw: str) -> bool:
        low = raw.strip().lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(raw)

    skill = take("experiment.skill", Skill, Skill.COMBINED)
    wp = WorldParams(
        n_sheep=take("world.n_sheep", int, 15),
        length=take("world.length", float, 150.0),
        r_a=take("world.r_a", float, 2.0),
        r_s=take("world.r_s", float, 65.0),
        goal_radius=take("world.goal_radius", float, 6.0),
    )
    sp = SheepParams(
        rho_a=take("sheep.rho_a", float, 2.0),
        c=take("sheep.c", float, 1.05),
        rho_s=take("sheep.rho_s", float, 1.0),
        h=take("sheep.h", float, 0.5),
        e=take("sheep.e", float, 0.3),
        delta=take("sheep.delta", float, 1.0),
        p_graze=take("sheep.p_graze", float, 0.05),
        n_neighbors=take("sheep.n_neighbors", to_neighbors, None),
    )
    ep = EpisodeConfig(
        env_kind=take("episode.env_kind", EnvKind, SKILL_ENV[skill]),
        max_steps=take("episode.max_steps", int, 1500),
        shepherd_speed=take("episode.shepherd_speed", float, 1.5),
        world=wp,
        sheep=sp,
        eval_episodes=take("episode.eval_episodes", int, 3),
        stop_on_success=take("episode.stop_on_success", to_bool, True),
    )
    ev = EvolutionConfig(
        pop_size=take("evolution.pop_size", int, 30),
        generations=take("evolution.generations", int, 100),
        parent_pool_target=take("evolution.parent_pool_target", int, 8),
        parent_pool_min=take("evolution.parent_pool_min", int, 3),
        diff_scale=take("evolution.diff_scale", float, 1.0),
        mut_sigma=take("evolution.mut_sigma", float, 0.1),
        mut_floor=take("evolution.mut_floor", float, 0.0),
    )
    rp = RewardParams(
        c0=take("rewards.c0", float, 1.0),
        d0=take("rewards.d0", float, 1.0),
        u0=take("rewards.u0", float, 5.0),
        cf0=take("rewards.cf0", float, 3.0),
        df0=take("rewards.df0", float, 3.0),
        dtheta=take("rewards.dtheta", float, RewardParams().dtheta),
        delta=take("rewards.delta", float, 4.0),
        delta_psi=take("rewards.delta_psi", float, 6.0),
        tau=take("rewards.tau", float, 0.0),
        beta=take("rewards.beta", float, 10.0),
    )
    cfg = ExperimentConfig(
        skill=skill,
        runs=take("experiment.runs", int, 10),
        master_seed=take("experiment.master_seed", int, 0),
        evolution=ev,
        episode=ep,
        rewards=rp,
        heatmap_bins=take("experiment.heatmap_bins", int, 30),
        checkpoint_every=take("experiment.checkpoint_every", int, 50),
        trace_checkpoint_gens=take("experiment.trace_checkpoint_gens", to_gens, (1, 50, 125, 250)),
        holdout_episodes=take("experiment.holdout_episodes", int, 5),
    )
    if flat:
        raise ValueError(f"unknown config keys: {', '.join(sorted(flat))}")
    return cfg


def config_to_text(cfg: ExperimentConfig) -> str:
    flat = config_to_flat(cfg)
    return "\n".join(f"{k} = {flat[k]}" for k in sorted(flat)) + "\n"


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and #-comments are skipped."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def load_config_file(path, overrides: dict[str, str] | None = None,
                     base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Config file on top of a preset base, then explicit overrides on top."""
    flat = config_to_flat(base) if base is not None else {}
    if path is not None:
        with open(path) as fh:
            flat.update(parse_config_text(fh.read()))
    if overrides:
        flat.update(overrides)
    return flat_to_config(flat)


def with_skill(cfg: ExperimentConfig, skill: Skill) -> ExperimentConfig:
    """Same config retargeted at another skill (environment follows)."""
    return replace(cfg, skill=skill,
                   episode=replace(cfg.episode, env_kind=SKILL_ENV[skill]))

"""Deterministic shepherding simulator and neuroevolution trainer."""

from .config import ExperimentConfig, desk_config, paper_config
from .controller import (
    ControlOutput,
    Genome,
    NeuralController,
    encode_inputs,
    forward,
    init_genome,
    load_genome,
    save_genome,
)
from .episode import (
    EnvKind,
    EpisodeConfig,
    EpisodeResult,
    EpisodeTrace,
    apply_action,
    init_world,
    load_trace,
    run_episode,
    save_trace,
)
from .evolution import (
    EvolutionConfig,
    Member,
    Population,
    breed_child,
    dominates,
    evolve,
    non_dominated_fronts,
    repair_rate,
    select_parent_pool,
)
from .experiment import RunStats, heatmap, recompute_stats, run_experiment, summarize
from .geometry import angular_diff, furthest_from, gcm, herd_threshold, unit, vec
from .rewards import (
    Objectives,
    RewardParams,
    Skill,
    StepPair,
    baseline_fitness,
    baseline_step,
    collect_reward_step,
    drive_reward_step,
    episode_objectives,
    landmarks,
)
from .scripted import (
    ScriptedController,
    ShepherdMode,
    collecting_point,
    driving_point,
    mode_select,
    scripted_action,
)
from .world import (
    SheepParams,
    WorldParams,
    WorldState,
    lcm_n_nearest,
    sheep_heading,
    sheep_step,
)

__version__ = "0.1.0"

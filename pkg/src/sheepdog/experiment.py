"""Batch experiment driver: independent evolution runs per skill,
aggregate statistics, fitness curves, heat maps, and deterministic
artifact files.

Per-run artifacts land in ``run_NN/``: fitness.csv, best_genome.txt,
trace_best.csv, trace checkpoints, genome checkpoints, the two heat-map
grids, and a config echo. The top level gets stats.csv and the overall
config echo. Identical (config, master_seed) reproduce every byte.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, config_to_text
from .controller import Genome, NeuralController, load_genome, save_genome
from .episode import EpisodeResult, EpisodeTrace, run_episode, save_trace
from .evolution import GenerationStats, Member, evolve
from .rewards import Objectives, Skill
from .experiment_io import (  # re-exported file helpers live next door
    FITNESS_HEADER,
    STATS_HEADER,
    fmt,
    read_fitness_csv,
    write_fitness_csv,
    write_heatmap_csv,
    write_stats_csv,
)

__all__ = [
    "RunStats",
    "RunOutcome",
    "summarize",
    "heatmap",
    "run_experiment",
    "recompute_stats",
    "make_evaluator",
    "holdout_results",
]


@dataclass(frozen=True)
class RunStats:
    """Across-run aggregate in the shape of the results table: mean of the
    per-run final-generation min/avg/max fitness, std of the avg, and the
    fraction of runs whose best genome passes the held-out evaluation."""

    skill: Skill
    runs: int
    min_fitness: float
    avg_fitness: float
    std_fitness: float
    max_fitness: float
    success_rate: float


@dataclass(frozen=True)
class RunOutcome:
    run_index: int
    final: GenerationStats
    success: bool
    best_scalar: float


def summarize(values) -> tuple[float, float, float, float]:
    """(min, mean, sample std, max); std is 0 for a single value."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("empty value list")
    n = len(vals)
    mean = sum(vals) / n
    if n > 1:
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (n - 1))
    else:
        std = 0.0
    return min(vals), mean, std, max(vals)


def heatmap(traces: list[EpisodeTrace], bins: int, channel: str,
            length: float | None = None) -> np.ndarray:
    """Bin trace positions into a (bins, bins) grid over the paddock.

    channel 'shepherd' bins the shepherd footprint; 'herd' bins the herd
    centre while driving and the separated sheep while collecting. Row
    index is the y bin, column the x bin; points on the far edge fall into
    the last bin.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    if channel not in ("shepherd", "herd"):
        raise ValueError("channel must be 'shepherd' or 'herd'")
    if length is None:
        if not traces:
            raise ValueError("need a paddock length or at least one trace")
        length = traces[0].length
    grid = np.zeros((bins, bins), dtype=np.int64)
    for trace in traces:
        if channel == "shepherd":
            pts = trace.shepherd_xy
        else:
            drive = (trace.modes == 1)[:, None]
            pts = np.where(drive, trace.phi_xy, trace.sigma_xy)
        ix = np.minimum((pts[:, 0] / length * bins).astype(np.int64), bins - 1)
        iy = np.minimum((pts[:, 1] / length * bins).astype(np.int64), bins - 1)
        np.add.at(grid, (iy, ix), 1)
    return grid


# ---------------------------------------------------------------------------
# Seed derivation (documented contract: everything hangs off master_seed)
# ---------------------------------------------------------------------------


def _evolve_seed(cfg: ExperimentConfig, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((cfg.master_seed, run, 0))


def _eval_seed(cfg: ExperimentConfig, run: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((cfg.master_seed, run, 1, episode))


def _holdout_seed(cfg: ExperimentConfig, run: int, episode: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((cfg.master_seed, run, 2, episode))


def make_evaluator(cfg: ExperimentConfig, run: int):
    """Genome -> Objectives: mean objective vector over the run's fixed
    evaluation episodes, success by majority."""
    seeds = [_eval_seed(cfg, run, e) for e in range(cfg.episode.eval_episodes)]
    wp = cfg.episode.world

    def evaluate(genome: Genome) -> Objectives:
        controller = NeuralController(genome, wp)
        stack = []
        successes = 0
        for seed in seeds:
            res = run_episode(controller, cfg.episode, cfg.skill, cfg.rewards, seed)
            stack.append(res.objectives.values)
            successes += int(res.success)
        values = np.stack(stack).mean(axis=0)
        return Objectives(values=values, success=2 * successes > len(seeds))

    return evaluate


def holdout_results(cfg: ExperimentConfig, run: int, genome: Genome) -> list[EpisodeResult]:
    """The run's held-out evaluation episodes for its best genome."""
    controller = NeuralController(genome, cfg.episode.world)
    return [run_episode(controller, cfg.episode, cfg.skill, cfg.rewards,
                        _holdout_seed(cfg, run, i))
            for i in range(cfg.holdout_episodes)]


def _majority(flags) -> bool:
    flags = list(flags)
    return 2 * sum(bool(f) for f in flags) > len(flags)


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


def _best_member(members: list[Member]) -> Member:
    best = members[0]
    for m in members[1:]:
        if m.objectives.scalar > best.objectives.scalar:
            best = m
    return best


def _run_one(cfg: ExperimentConfig, run: int, run_dir: str | None) -> RunOutcome:
    fitness_rows: list[GenerationStats] = []

    def on_generation(stats: GenerationStats, members: list[Member]) -> None:
        fitness_rows.append(stats)
        if run_dir is None:
            return
        gen = stats.generation
        if cfg.checkpoint_every > 0 and gen > 0 and gen % cfg.checkpoint_every == 0:
            save_genome(_best_member(members).genome,
                        os.path.join(run_dir, "checkpoints", f"gen_{gen:04d}.txt"))
        if gen in cfg.trace_checkpoint_gens:
            res = run_episode(NeuralController(_best_member(members).genome, cfg.episode.world),
                              cfg.episode, cfg.skill, cfg.rewards,
                              _holdout_seed(cfg, run, 0), capture=True)
            save_trace(res.trace, os.path.join(run_dir, f"trace_gen_{gen:04d}.csv"))

    if run_dir is not None:
        os.makedirs(os.path.join(run_dir, "checkpoints"), exist_ok=True)

    rng = np.random.default_rng(_evolve_seed(cfg, run))
    best, history = evolve(cfg.evolution, make_evaluator(cfg, run), rng, on_generation)

    held = holdout_results(cfg, run, best)
    success = _majority(r.success for r in held)

    if run_dir is not None:
        write_fitness_csv(os.path.join(run_dir, "fitness.csv"), fitness_rows)
        save_genome(best, os.path.join(run_dir, "best_genome.txt"))
        best_trace_res = run_episode(NeuralController(best, cfg.episode.world),
                                     cfg.episode, cfg.skill, cfg.rewards,
                                     _holdout_seed(cfg, run, 0), capture=True)
        save_trace(best_trace_res.trace, os.path.join(run_dir, "trace_best.csv"))
        for channel in ("shepherd", "herd"):
            grid = heatmap([best_trace_res.trace], cfg.heatmap_bins, channel)
            write_heatmap_csv(os.path.join(run_dir, f"heatmap_{channel}.csv"), grid)
        with open(os.path.join(run_dir, "config_echo.txt"), "w", newline="\n") as fh:
            fh.write(config_to_text(cfg))
            fh.write(f"run.index = {run}\n")

    final = history[-1]
    return RunOutcome(run_index=run, final=final, success=success,
                      best_scalar=max(g.max_fitness for g in history))


def _aggregate(cfg: ExperimentConfig, outcomes: list[RunOutcome]) -> RunStats:
    mins = [o.final.min_fitness for o in outcomes]
    avgs = [o.final.avg_fitness for o in outcomes]
    maxs = [o.final.max_fitness for o in outcomes]
    _, mean_avg, std_avg, _ = summarize(avgs)
    return RunStats(
        skill=cfg.skill,
        runs=len(outcomes),
        min_fitness=sum(mins) / len(mins),
        avg_fitness=mean_avg,
        std_fitness=std_avg,
        max_fitness=sum(maxs) / len(maxs),
        success_rate=sum(o.success for o in outcomes) / len(outcomes),
    )


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> RunStats:
    """Run ``cfg.runs`` independent evolutions and aggregate them.

    With ``out_dir`` set, writes all artifacts there; the directory must be
    creatable and writable before any computation starts.
    """
    out_dir = out_dir if out_dir is not None else cfg.output_dir
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("ok")
        os.remove(probe)
        with open(os.path.join(out_dir, "config_echo.txt"), "w", newline="\n") as fh:
            fh.write(config_to_text(cfg))
    outcomes = []
    for run in range(cfg.runs):
        run_dir = os.path.join(out_dir, f"run_{run:02d}") if out_dir is not None else None
        outcomes.append(_run_one(cfg, run, run_dir))
    stats = _aggregate(cfg, outcomes)
    if out_dir is not None:
        write_stats_csv(os.path.join(out_dir, "stats.csv"), stats)
    return stats


def recompute_stats(out_dir: str) -> RunStats:
    """Rebuild RunStats from persisted artifacts alone: fitness curves give
    the fitness columns and re-running the held-out episodes from each
    best_genome.txt gives the success flags."""
    from .config import flat_to_config, parse_config_text

    with open(os.path.join(out_dir, "config_echo.txt")) as fh:
        cfg = flat_to_config(parse_config_text(fh.read()))
    outcomes = []
    for run in range(cfg.runs):
        run_dir = os.path.join(out_dir, f"run_{run:02d}")
        rows = read_fitness_csv(os.path.join(run_dir, "fitness.csv"))
        best = load_genome(os.path.join(run_dir, "best_genome.txt"))
        success = _majority(r.success for r in holdout_results(cfg, run, best))
        outcomes.append(RunOutcome(run_index=run, final=rows[-1], success=success,
                                   best_scalar=max(r.max_fitness for r in rows)))
    return _aggregate(cfg, outcomes)

"""Command-line interface.

Subcommands: train (batch evolution runs), eval (run a saved genome),
replay (print a trace table), stats (recompute aggregates from artifacts),
oracle (scripted-shepherd simulator validation). Exit codes: 0 success,
1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (
    ExperimentConfig,
    config_to_text,
    desk_config,
    load_config_file,
    paper_config,
)
from .controller import NeuralController, load_genome
from .episode import run_episode, load_trace
from .experiment import recompute_stats, run_experiment
from .experiment_io import STATS_HEADER, fmt
from .rewards import Skill
from .scripted import ScriptedController


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sheepdog", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    train = sub.add_parser("train", help="run a batch of evolution runs")
    train.add_argument("--skill", choices=[s.value for s in Skill], default=None)
    train.add_argument("--config", default=None, help="flat key=value config file")
    train.add_argument("--preset", choices=["desk", "paper"], default="desk")
    train.add_argument("--seed", type=int, default=None, help="master seed override")
    train.add_argument("--out", required=True, help="output directory")

    ev = sub.add_parser("eval", help="evaluate a saved genome")
    ev.add_argument("--genome", required=True)
    ev.add_argument("--config", default=None)
    ev.add_argument("--preset", choices=["desk", "paper"], default="desk")
    ev.add_argument("--skill", choices=[s.value for s in Skill], default=None)
    ev.add_argument("--episodes", type=int, default=5)

    replay = sub.add_parser("replay", help="print the step table of a trace file")
    replay.add_argument("--trace", required=True)

    stats = sub.add_parser("stats", help="recompute run statistics from artifacts")
    stats.add_argument("--dir", required=True)

    oracle = sub.add_parser("oracle", help="scripted-shepherd simulator validation")
    oracle.add_argument("--config", default=None)
    oracle.add_argument("--preset", choices=["desk", "paper"], default="desk")
    oracle.add_argument("--seeds", type=int, default=10)
    return parser


def _resolve_config(args) -> ExperimentConfig:
    skill = Skill(args.skill) if getattr(args, "skill", None) else None
    preset_fn = desk_config if args.preset == "desk" else paper_config
    base = preset_fn(skill) if skill is not None else preset_fn()
    overrides = {}
    if skill is not None:
        overrides["experiment.skill"] = skill.value
    if getattr(args, "seed", None) is not None:
        overrides["experiment.master_seed"] = str(args.seed)
    return load_config_file(getattr(args, "config", None), overrides, base)


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    stats = run_experiment(cfg, args.out)
    print(STATS_HEADER)
    print(f"{stats.skill.value},{stats.runs},{fmt(stats.min_fitness)},"
          f"{fmt(stats.avg_fitness)},{fmt(stats.std_fitness)},"
          f"{fmt(stats.max_fitness)},{fmt(stats.success_rate)}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    genome = load_genome(args.genome)
    controller = NeuralController(genome, cfg.episode.world)
    print("episode,scalar_fitness,success,steps_used")
    scalars = []
    successes = 0
    for i in range(args.episodes):
        seed = np.random.SeedSequence((cfg.master_seed, i, 4))
        res = run_episode(controller, cfg.episode, cfg.skill, cfg.rewards, seed)
        scalars.append(res.objectives.scalar)
        successes += int(res.success)
        print(f"{i},{fmt(res.objectives.scalar)},{int(res.success)},{res.steps_used}")
    print(f"mean_fitness = {fmt(sum(scalars) / len(scalars))}")
    print(f"success_rate = {fmt(successes / args.episodes)}")
    return 0


def _cmd_replay(args) -> int:
    trace = load_trace(args.trace)
    print(f"skill={trace.skill.value} goal=({fmt(trace.goal[0])}, {fmt(trace.goal[1])}) "
          f"paddock={fmt(trace.length)} steps={len(trace) - 1}")
    print(f"{'t':>6} {'psi_x':>10} {'psi_y':>10} {'phi_x':>10} {'phi_y':>10} "
          f"{'sigma_x':>10} {'sigma_y':>10} {'furthest':>10} {'mode':>8} {'reward':>12}")
    for i in range(len(trace)):
        row = trace.data[i]
        mode = "collect" if trace.modes[i] == 0 else "drive"
        print(f"{int(row[0]):>6} {row[1]:>10.3f} {row[2]:>10.3f} {row[3]:>10.3f} "
              f"{row[4]:>10.3f} {row[5]:>10.3f} {row[6]:>10.3f} {row[7]:>10.3f} "
              f"{mode:>8} {trace.reward[i]:>12.4f}")
    return 0


def _cmd_stats(args) -> int:
    stats = recompute_stats(args.dir)
    print(STATS_HEADER)
    print(f"{stats.skill.value},{stats.runs},{fmt(stats.min_fitness)},"
          f"{fmt(stats.avg_fitness)},{fmt(stats.std_fitness)},"
          f"{fmt(stats.max_fitness)},{fmt(stats.success_rate)}")
    return 0


def _cmd_oracle(args) -> int:
    cfg = _resolve_config(args)
    controller = ScriptedController(cfg.episode.world, cfg.episode.shepherd_speed)
    successes = 0
    print("seed,success,steps_used")
    for i in range(args.seeds):
        seed = np.random.SeedSequence((cfg.master_seed, i, 3))
        res = run_episode(controller, cfg.episode, cfg.skill, cfg.rewards, seed)
        successes += int(res.success)
        print(f"{i},{int(res.success)},{res.steps_used}")
    rate = successes / args.seeds
    print(f"oracle_success_rate = {fmt(rate)}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "replay": _cmd_replay,
    "stats": _cmd_stats,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "train":
            os.makedirs(args.out, exist_ok=True)
        cfg_or_cmd = _COMMANDS[args.command]
    except OSError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    try:
        return cfg_or_cmd(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"runtime failure: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

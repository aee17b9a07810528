"""CSV writers and readers for experiment artifacts.

All files use '.' decimals, '\n' line endings, and shortest round-trip
float formatting, so identical runs produce identical bytes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .evolution import GenerationStats

if TYPE_CHECKING:  # pragma: no cover
    from .experiment import RunStats

FITNESS_HEADER = "generation,min,avg,max,success_count"
STATS_HEADER = "skill,runs,min_fitness,avg_fitness,std_fitness,max_fitness,success_rate"


def fmt(v: float) -> str:
    return repr(float(v))


def write_fitness_csv(path, rows: list[GenerationStats]) -> None:
    lines = [FITNESS_HEADER]
    for r in rows:
        lines.append(f"{r.generation},{fmt(r.min_fitness)},{fmt(r.avg_fitness)},"
                     f"{fmt(r.max_fitness)},{r.success_count}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_fitness_csv(path) -> list[GenerationStats]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("generation"):
                continue
            gen, mn, avg, mx, succ = line.split(",")
            rows.append(GenerationStats(
                generation=int(gen),
                min_fitness=float(mn),
                avg_fitness=float(avg),
                max_fitness=float(mx),
                success_count=int(succ),
            ))
    if not rows:
        raise ValueError(f"no fitness rows in {path}")
    return rows


def write_stats_csv(path, stats: "RunStats") -> None:
    line = (f"{stats.skill.value},{stats.runs},{fmt(stats.min_fitness)},"
            f"{fmt(stats.avg_fitness)},{fmt(stats.std_fitness)},"
            f"{fmt(stats.max_fitness)},{fmt(stats.success_rate)}")
    with open(path, "w", newline="\n") as fh:
        fh.write(STATS_HEADER + "\n" + line + "\n")


def read_stats_csv(path) -> list[str]:
    with open(path) as fh:
        return [ln.rstrip("\n") for ln in fh if ln.strip()]


def write_heatmap_csv(path, grid: np.ndarray) -> None:
    lines = [",".join(str(int(v)) for v in row) for row in grid]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_heatmap_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = [[int(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    return np.array(rows, dtype=np.int64)

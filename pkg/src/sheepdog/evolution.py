"""Self-adaptive Pareto neuroevolution of shepherd controllers.

Each generation keeps whole non-dominated fronts as the parent pool
(elitism), deletes everything else, and refills the population with
children bred by three-parent differential crossover on the weight genes
plus per-gene mutation. Crossover and mutation rates ride along in the
genome and are recombined and repaired every breeding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import N_HIDDEN, N_WEIGHTS, Genome, init_genome
from .rewards import Objectives

__all__ = [
    "EvolutionConfig",
    "Member",
    "Population",
    "GenerationStats",
    "dominates",
    "non_dominated_fronts",
    "select_parent_pool",
    "breed_child",
    "repair_rate",
    "evolve",
]


@dataclass(frozen=True)
class EvolutionConfig:
    pop_size: int = 50
    generations: int = 250
    parent_pool_target: int = 8
    parent_pool_min: int = 3
    diff_scale: float = 1.0  # std of the Gaussian differential coefficient
    mut_sigma: float = 0.1  # std of the mutation perturbation
    mut_floor: float = 0.0  # lower bound on the mutation chance used in breeding

    def __post_init__(self):
        if not 3 <= self.parent_pool_min <= self.parent_pool_target <= self.pop_size:
            raise ValueError("need 3 <= parent_pool_min <= parent_pool_target <= pop_size")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if self.diff_scale <= 0 or self.mut_sigma < 0:
            raise ValueError("bad variation scales")
        if not 0.0 <= self.mut_floor <= 1.0:
            raise ValueError("mut_floor must lie in [0, 1]")


@dataclass
class Member:
    genome: Genome
    objectives: Objectives | None = None


@dataclass
class Population:
    members: list[Member]
    generation: int = 0


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    min_fitness: float
    avg_fitness: float
    max_fitness: float
    success_count: int


def dominates(a, b) -> bool:
    """Maximization dominance: a >= b everywhere and > somewhere."""
    av = a.values if isinstance(a, Objectives) else np.asarray(a, dtype=np.float64)
    bv = b.values if isinstance(b, Objectives) else np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise ValueError("objective vectors differ in length")
    return bool(np.all(av >= bv) and np.any(av > bv))


def non_dominated_fronts(pop: Population) -> list[list[int]]:
    """Fronts of member indices, best first; together they partition the population."""
    values = [m.objectives.values for m in pop.members]
    n = len(values)
    dominated_count = [0] * n
    dominating: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(values[i], values[j]):
                dominating[i].append(j)
                dominated_count[j] += 1
            elif dominates(values[j], values[i]):
                dominating[j].append(i)
                dominated_count[i] += 1
    fronts = []
    current = [i for i in range(n) if dominated_count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in dominating[i]:
                dominated_count[j] -= 1
                if dominated_count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
    return fronts


def select_parent_pool(pop: Population, config: EvolutionConfig) -> list[int]:
    """Accumulate whole fronts until the target pool size, truncating the
    last front by descending scalar fitness (ties keep the lower index)."""
    target = config.parent_pool_target
    pool: list[int] = []
    for front in non_dominated_fronts(pop):
        if len(pool) >= target:
            break
        room = target - len(pool)
        if len(front) <= room:
            pool.extend(front)
        else:
            ranked = sorted(front, key=lambda i: (-pop.members[i].objectives.scalar, i))
            pool.extend(ranked[:room])
    return pool


def repair_rate(r: float) -> float:
    """Clamp an evolved rate back into [0, 1]."""
    if not np.isfinite(r):
        raise ValueError("rate must be finite")
    return min(1.0, max(0.0, float(r)))


def breed_child(alpha1: Genome, alpha2: Genome, alpha3: Genome,
                config: EvolutionConfig, rng: np.random.Generator) -> Genome:
    """One child from a lead parent and two supporting parents.

    Weight genes cross over differentially (lead + coef * support
    difference) on a guaranteed random gene z and elsewhere with
    probability cr(alpha1); mask bits use the clipped bit differential
    a1 + (a2 - a3). Mutation perturbs weights and flips mask bits with
    probability mr(alpha1). Child rates are recombined the same
    differential way and repaired.

    ``mut_floor`` bounds the mutation chance used here from below so a
    population whose evolved rates collapse to zero cannot stop exploring;
    the stored child rates themselves stay untouched.

    Draw order (one child): z, crossover uniforms (222), differential
    coefficients (222), mask uniforms (20), mutation uniforms (222),
    mutation perturbations (222), mask-flip uniforms (20), two rate
    coefficients.
    """
    f1 = alpha1.flat_weights()
    f2 = alpha2.flat_weights()
    f3 = alpha3.flat_weights()

    z = int(rng.integers(N_WEIGHTS))
    u_cross = rng.random(N_WEIGHTS)
    coef = config.diff_scale * rng.standard_normal(N_WEIGHTS)
    cross = u_cross < alpha1.cr
    cross[z] = True
    child = np.where(cross, f1 + coef * (f2 - f3), f1)

    u_mask = rng.random(N_HIDDEN)
    m1 = alpha1.mask.astype(np.int64)
    m2 = alpha2.mask.astype(np.int64)
    m3 = alpha3.mask.astype(np.int64)
    crossed_bits = np.clip(m1 + (m2 - m3), 0, 1)
    mask = np.where(u_mask < alpha1.cr, crossed_bits, m1).astype(bool)

    p_mut = max(alpha1.mr, config.mut_floor)
    u_mut = rng.random(N_WEIGHTS)
    perturb = config.mut_sigma * rng.standard_normal(N_WEIGHTS)
    child = np.where(u_mut < p_mut, child + perturb, child)

    u_flip = rng.random(N_HIDDEN)
    mask = np.where(u_flip < p_mut, ~mask, mask)

    rate_coef = rng.standard_normal(2)
    cr = repair_rate(alpha1.cr + rate_coef[0] * (alpha2.cr - alpha3.cr))
    mr = repair_rate(alpha1.mr + rate_coef[1] * (alpha2.mr - alpha3.mr))
    return Genome.from_flat(child, mask, cr, mr)


def evolve(config: EvolutionConfig, evaluator, rng: np.random.Generator,
           on_generation=None) -> tuple[Genome, list[GenerationStats]]:
    """Run the full loop and return the best-ever genome (by scalar fitness)
    plus per-generation stats.

    ``evaluator``: Genome -> Objectives, deterministic for the run.
    ``on_generation(stats, members)`` is called after each generation's
    evaluation, before selection.
    """
    members = [Member(init_genome(rng)) for _ in range(config.pop_size)]
    best_genome: Genome | None = None
    best_scalar = -np.inf
    history: list[GenerationStats] = []

    for gen in range(config.generations + 1):
        for m in members:
            if m.objectives is None:
                m.objectives = evaluator(m.genome)
        scalars = [m.objectives.scalar for m in members]
        for m, s in zip(members, scalars):
            if s > best_scalar:
                best_scalar = s
                best_genome = m.genome
        stats = GenerationStats(
            generation=gen,
            min_fitness=float(min(scalars)),
            avg_fitness=float(sum(scalars) / len(scalars)),
            max_fitness=float(max(scalars)),
            success_count=sum(1 for m in members if m.objectives.success),
        )
        history.append(stats)
        if on_generation is not None:
            on_generation(stats, members)
        if gen == config.generations:
            break
        pool_idx = select_parent_pool(Population(members, gen), config)
        pool = [members[i] for i in pool_idx]
        children = []
        while len(pool) + len(children) < config.pop_size:
            picks = rng.choice(len(pool), 3, replace=False)
            children.append(Member(breed_child(pool[picks[0]].genome,
                                               pool[picks[1]].genome,
                                               pool[picks[2]].genome,
                                               config, rng)))
        members = pool + children

    return best_genome.copy(), history

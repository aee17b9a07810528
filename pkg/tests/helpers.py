"""Shared test helpers: world construction and randomized state pairs."""

import numpy as np

from sheepdog import WorldState


def make_world(sheep, shepherd, goal=(135.0, 135.0), t=0,
               headings=None, last_move=(0.0, 0.0)):
    pos = np.atleast_2d(np.array(sheep, dtype=np.float64))
    n = pos.shape[0]
    if headings is None:
        head = np.tile(np.array([1.0, 0.0]), (n, 1))
    else:
        head = np.atleast_2d(np.array(headings, dtype=np.float64))
    return WorldState(
        sheep_pos=pos,
        sheep_heading=head,
        shepherd_pos=np.array(shepherd, dtype=np.float64),
        shepherd_last_move=np.array(last_move, dtype=np.float64),
        goal=np.array(goal, dtype=np.float64),
        t=t,
    )


def random_world(rng, n, length=150.0, cluster=None, t=0):
    """Random world; ``cluster`` of (center, radius) packs the sheep tight."""
    if cluster is None:
        pos = rng.uniform(0.0, length, (n, 2))
    else:
        center, radius = cluster
        ang = rng.uniform(0, 2 * np.pi, n)
        rad = radius * np.sqrt(rng.random(n))
        pos = np.asarray(center) + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        pos = np.clip(pos, 0.0, length)
    head_ang = rng.uniform(0, 2 * np.pi, n)
    return WorldState(
        sheep_pos=pos,
        sheep_heading=np.column_stack([np.cos(head_ang), np.sin(head_ang)]),
        shepherd_pos=rng.uniform(0.0, length, 2),
        shepherd_last_move=np.zeros(2),
        goal=rng.uniform(0.0, length, 2),
        t=t,
    )


def trace_from_states(sheep_states, shep_states, goal, wp, skill):
    """EpisodeTrace built directly from a state sequence (for reward tests)."""
    from sheepdog import EpisodeTrace
    from sheepdog.geometry import herd_threshold
    from sheepdog.rewards import landmarks

    sheep_states = np.asarray(sheep_states, dtype=np.float64)
    shep_states = np.asarray(shep_states, dtype=np.float64)
    k = sheep_states.shape[0]
    goal_arr = np.array(goal, dtype=np.float64)
    data = np.empty((k, 8))
    modes = np.empty(k, dtype=np.int64)
    thr = herd_threshold(max(sheep_states.shape[1], 1), wp.r_a)
    for t in range(k):
        world = make_world(sheep_states[t], shep_states[t], goal=goal_arr, t=t)
        lm = landmarks(world, wp)
        data[t] = [t, shep_states[t, 0], shep_states[t, 1],
                   lm.phi[0], lm.phi[1], lm.sigma[0], lm.sigma[1], lm.furthest]
        modes[t] = 0 if lm.furthest > thr else 1
    empty = np.empty((sheep_states.shape[1] if k else 0, 2))
    return EpisodeTrace(
        data=data,
        modes=modes,
        reward=np.zeros(k),
        skill=skill,
        goal=goal_arr,
        length=wp.length,
        initial_sheep=sheep_states[0].copy() if k else empty,
        final_sheep=sheep_states[-1].copy() if k else empty,
        components=None,
        sheep_states=sheep_states.copy(),
        shepherd_states=shep_states.copy(),
    )


def random_step_pair(rng, wp, move_scale=2.0, stationary_prob=0.15,
                     cluster_prob=0.35):
    """A randomized consecutive state pair exercising the reward guards:
    sometimes clustered, sometimes with zero displacements, shared goal."""
    from sheepdog import StepPair

    n = int(rng.integers(1, 13))
    length = wp.length
    if rng.random() < cluster_prob:
        center = rng.uniform(0.2 * length, 0.8 * length, 2)
        radius = 0.4 * wp.r_a * n ** (2.0 / 3.0)
        ang = rng.uniform(0, 2 * np.pi, n)
        rad = radius * np.sqrt(rng.random(n))
        pos = center + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    else:
        pos = rng.uniform(0, length, (n, 2))
    pos = np.clip(pos, 0, length)
    moves = rng.normal(0.0, move_scale, (n, 2))
    moves[rng.random(n) < stationary_prob] = 0.0
    curr_pos = np.clip(pos + moves, 0, length)
    psi0 = rng.uniform(0, length, 2)
    psi_move = np.zeros(2) if rng.random() < stationary_prob else rng.normal(0, move_scale, 2)
    psi1 = np.clip(psi0 + psi_move, 0, length)
    goal = rng.uniform(0, length, 2)
    head = np.tile(np.array([1.0, 0.0]), (n, 1))
    prev = WorldState(sheep_pos=pos, sheep_heading=head.copy(),
                      shepherd_pos=psi0, shepherd_last_move=np.zeros(2),
                      goal=goal, t=0)
    curr = WorldState(sheep_pos=curr_pos, sheep_heading=head.copy(),
                      shepherd_pos=psi1, shepherd_last_move=psi1 - psi0,
                      goal=goal, t=1)
    # replace-params world matching this flock size
    wp_n = type(wp)(n_sheep=n, length=wp.length, r_a=wp.r_a, r_s=wp.r_s,
                    goal_radius=wp.goal_radius)
    return StepPair.from_states(prev, curr, wp_n), wp_n

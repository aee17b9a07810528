import math

import numpy as np
import pytest

from sheepdog import (
    RewardParams,
    Skill,
    StepPair,
    WorldParams,
    baseline_fitness,
    baseline_step,
    collect_reward_step,
    drive_reward_step,
    episode_objectives,
    landmarks,
)

from helpers import make_world, random_step_pair, trace_from_states
from reference import ref_baseline_step, ref_collect_step, ref_drive_step

GOAL = (135.0, 135.0)


def pair_of(prev_sheep, prev_psi, curr_sheep, curr_psi, wp, goal=GOAL):
    prev = make_world(prev_sheep, prev_psi, goal=goal, t=0)
    curr = make_world(curr_sheep, curr_psi, goal=goal, t=1)
    return StepPair.from_states(prev, curr, wp)


# ---------------------------------------------------------------------------
# Hand-traced golden scenarios
# ---------------------------------------------------------------------------


def test_collect_golden_hand_trace():
    # one separated sheep being pushed home while the shepherd closes in on
    # the collecting point; every term traced by hand:
    #   dispersed award 1, both alignments perfect (pi/4 each), approach +3,
    #   separated-sheep approach +2*(4/3), force on it +3
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=10.0)
    rp = RewardParams(c0=1.0, u0=5.0, cf0=3.0, dtheta=math.pi / 4,
                      delta=2.0, delta_psi=10.0)
    pair = pair_of([(10, 0), (12, 0), (40, 0)], (50, 0),
                   [(10, 0), (12, 0), (38, 0)], (45, 0), wp, goal=(135, 135))
    # shepherd alignment rode 5 units, the separated sheep's 2 units
    expected = 7.0 + 8.0 / 3.0 + 5.0 * math.pi / 4.0 + math.pi / 2.0
    assert collect_reward_step(pair, rp, wp) == pytest.approx(expected, abs=1e-9)
    # the independent rendering agrees
    ref = ref_collect_step(pair.prev.sheep_pos, pair.prev.shepherd_pos,
                           pair.curr.sheep_pos, pair.curr.shepherd_pos,
                           pair.curr.goal, wp.r_a, wp.r_s, rp)
    assert ref == pytest.approx(expected, abs=1e-9)


def test_drive_golden_hand_trace():
    # gathered herd moved one unit toward the goal, shepherd closing on the
    # driving point: award 1, shepherd alignment pi/4 over 3 units, centre
    # alignment pi/4 over 1 unit, approach +2, centre approach +2, force +3
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=10.0)
    rp = RewardParams(d0=1.0, df0=3.0, dtheta=math.pi / 4, delta=2.0, delta_psi=10.0)
    pair = pair_of([(18, 0), (20, 0), (22, 0)], (10, 0),
                   [(19, 0), (21, 0), (23, 0)], (13, 0), wp, goal=(100, 0))
    expected = 8.0 + math.pi
    assert drive_reward_step(pair, rp, wp) == pytest.approx(expected, abs=1e-9)
    ref = ref_drive_step(pair.prev.sheep_pos, pair.prev.shepherd_pos,
                         pair.curr.sheep_pos, pair.curr.shepherd_pos,
                         pair.curr.goal, wp.r_a, wp.r_s, rp)
    assert ref == pytest.approx(expected, abs=1e-9)


# ---------------------------------------------------------------------------
# Guard-structure cases
# ---------------------------------------------------------------------------


def test_collect_stationary_at_collecting_point():
    # clustered herd, shepherd parked exactly on the collecting point both
    # steps: only the arrival award fires
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=10.0)
    rp = RewardParams(delta=2.0, delta_psi=6.0)
    sheep = [(20, 0), (21, 0), (22, 0)]  # sigma is (20,0) by the tie rule
    pair = pair_of(sheep, (18, 0), sheep, (18, 0), wp)
    assert collect_reward_step(pair, rp, wp) == pytest.approx(rp.delta, abs=1e-12)


def test_collect_approach_only():
    # shepherd moved 3 straight toward the collecting point, still outside
    # both tolerances, no sheep within force range
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=4.0)
    rp = RewardParams(dtheta=math.pi / 4, delta=2.0, delta_psi=6.0)
    sheep = [(20, 0), (21, 0), (22, 0)]
    pair = pair_of(sheep, (30, 0), sheep, (27, 0), wp)
    # perfect alignment over a 3-unit stride plus the 3-unit approach
    assert collect_reward_step(pair, rp, wp) == pytest.approx(3.0 * rp.dtheta + 3.0, abs=1e-12)


def test_drive_stationary_at_goal():
    # herd gathered around the goal, centre exactly on it, silent shepherd
    # at the (degenerate) driving point, no force: award + arrival only
    wp = WorldParams(n_sheep=8, r_a=1.0, r_s=2.0)
    rp = RewardParams(d0=1.0, delta=2.0, delta_psi=3.0)
    c = 50.0
    sheep = [(c + 3, c), (c - 3, c), (c, c + 3), (c, c - 3),
             (c + 2, c + 2), (c - 2, c - 2), (c + 2, c - 2), (c - 2, c + 2)]
    pair = pair_of(sheep, (c, c), sheep, (c, c), wp, goal=(c, c))
    assert drive_reward_step(pair, rp, wp) == pytest.approx(rp.d0 + rp.delta, abs=1e-12)


def test_drive_tracking_the_driving_point():
    # centre moved one unit toward the goal with the shepherd riding the
    # driving point: D0 + arrival + centre alignment + 2*1 + force award
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=10.0)
    rp = RewardParams(d0=1.0, df0=3.0, dtheta=math.pi / 4, delta=2.0, delta_psi=10.0)
    off = 2.0 * math.sqrt(3.0)
    pair = pair_of([(18, 0), (20, 0), (22, 0)], (20.0 - off, 0),
                   [(19, 0), (21, 0), (23, 0)], (21.0 - off, 0), wp, goal=(100, 0))
    expected = rp.d0 + rp.delta + rp.dtheta + 2.0 + rp.df0
    assert drive_reward_step(pair, rp, wp) == pytest.approx(expected, abs=1e-9)


def test_guard_partition_at_exact_boundary():
    # N=8, r_a=2: threshold exactly 8; furthest exactly 8 counts as inside,
    # so the dispersal award never fires while the gathered award does
    wp = WorldParams(n_sheep=8, r_a=2.0, r_s=65.0)
    sheep = [(68.0, 60.0)] * 4 + [(52.0, 60.0)] * 4
    pair = pair_of(sheep, (10, 10), sheep, (10, 10), wp)
    base_c = collect_reward_step(pair, RewardParams(c0=0.0), wp)
    with_c = collect_reward_step(pair, RewardParams(c0=7.0), wp)
    assert with_c == base_c  # no dispersal award at the boundary
    base_d = drive_reward_step(pair, RewardParams(d0=0.0), wp)
    with_d = drive_reward_step(pair, RewardParams(d0=7.0), wp)
    assert with_d == base_d + 7.0  # gathered award fires


def test_guard_exclusivity_random():
    rng = np.random.default_rng(8)
    wp_base = WorldParams(n_sheep=2)
    for _ in range(300):
        pair, wp = random_step_pair(rng, wp_base)
        rp0 = RewardParams(c0=0.0, d0=0.0)
        rp1 = RewardParams(c0=100.0, d0=100.0)
        dc = collect_reward_step(pair, rp1, wp) - collect_reward_step(pair, rp0, wp)
        dd = drive_reward_step(pair, rp1, wp) - drive_reward_step(pair, rp0, wp)
        awarded_c = dc > 50.0
        awarded_d = dd > 50.0
        assert awarded_c != awarded_d  # exactly one of the two guards fires


def test_translation_invariance():
    # n=2 is excluded: with two sheep the separated-sheep pick is a
    # structural tie decided at float resolution, so a translation can flip
    # it by one ulp; for n != 2 ties have measure zero
    rng = np.random.default_rng(9)
    wp_base = WorldParams(n_sheep=2)
    rp = RewardParams()
    count = 0
    while count < 100:
        pair, wp = random_step_pair(rng, wp_base)
        if pair.curr.n_sheep == 2:
            continue
        count += 1
        shift = rng.uniform(-40, 40, 2)
        moved = StepPair.from_states(
            _shift_world(pair.prev, shift), _shift_world(pair.curr, shift), wp)
        for fn in (collect_reward_step, drive_reward_step, baseline_step):
            assert fn(moved, rp, wp) == pytest.approx(fn(pair, rp, wp), abs=1e-9)


def _shift_world(world, shift):
    out = world.copy()
    out.sheep_pos = out.sheep_pos + shift
    out.shepherd_pos = out.shepherd_pos + shift
    out.goal = out.goal + shift
    return out


def test_alignment_terms_bounded():
    # with constants zeroed, a collect step is bounded by displacement-scaled
    # alignment plus the approach terms
    rng = np.random.default_rng(10)
    wp_base = WorldParams(n_sheep=2)
    for _ in range(200):
        pair, wp = random_step_pair(rng, wp_base)
        dtheta = float(rng.uniform(0.1, math.pi))
        zero = RewardParams(c0=0.0, u0=0.0, cf0=0.0, dtheta=dtheta,
                            delta=1e-12, delta_psi=1e9)
        val = collect_reward_step(pair, zero, wp)
        lm0, lm1 = pair.prev_landmarks, pair.curr_landmarks
        mv_psi = np.linalg.norm(pair.curr.shepherd_pos - pair.prev.shepherd_pos)
        i = lm1.sigma_idx
        mv_sig = np.linalg.norm(pair.curr.sheep_pos[i] - pair.prev.sheep_pos[i])
        pc_shift = np.linalg.norm(lm1.p_c - lm0.p_c)
        sig_cap = abs(lm1.furthest - lm0.furthest)
        hi = dtheta * (mv_psi + mv_sig) + (mv_psi + pc_shift) + 2 * sig_cap + 1e-6
        lo = -math.pi * (mv_psi + mv_sig) - 2 * (mv_psi + pc_shift) - 4 * sig_cap - 1e-6
        assert lo <= val <= hi


# ---------------------------------------------------------------------------
# Baseline
# ---------------------------------------------------------------------------


def test_baseline_unchanged_is_zero():
    wp = WorldParams(n_sheep=2)
    sheep = [(30, 0), (50, 0)]
    pair = pair_of(sheep, (0, 0), sheep, (0, 0), wp, goal=(100, 0))
    assert baseline_step(pair, RewardParams(beta=10.0), wp) == 0.0


def test_baseline_all_four_improved():
    wp = WorldParams(n_sheep=2)
    pair = pair_of([(30, 0), (50, 0)], (0, 0),
                   [(32, 0), (50, 0)], (2, 0), wp, goal=(100, 0))
    assert baseline_step(pair, RewardParams(beta=10.0), wp) == pytest.approx(40.0)


def test_baseline_cancellation():
    wp = WorldParams(n_sheep=2)
    pair = pair_of([(30, 0), (50, 0)], (0, 0),
                   [(28, 0), (50, 0)], (2, 0), wp, goal=(100, 0))
    assert baseline_step(pair, RewardParams(beta=10.0), wp) == pytest.approx(0.0)


def test_baseline_matches_reference():
    rng = np.random.default_rng(11)
    wp_base = WorldParams(n_sheep=2)
    rp = RewardParams()
    for _ in range(200):
        pair, wp = random_step_pair(rng, wp_base)
        ref = ref_baseline_step(pair.prev.sheep_pos, pair.prev.shepherd_pos,
                                pair.curr.sheep_pos, pair.curr.shepherd_pos,
                                pair.curr.goal, wp.r_a, rp)
        assert baseline_step(pair, rp, wp) == pytest.approx(ref, abs=1e-9)


def test_eq1_substitution_simple():
    # tau 1000, no step contribution, terminal distances 10 + 20 + 5
    wp = WorldParams(n_sheep=2)
    rp = RewardParams(tau=1000.0)
    sheep = np.array([[(55.0, 50.0), (45.0, 50.0)]] * 2)
    shep = np.array([[50.0, 40.0]] * 2)
    trace = trace_from_states(sheep, shep, goal=(50.0, 20.0), wp=wp,
                              skill=Skill.BASELINE)
    assert baseline_fitness(trace, rp, wp) == pytest.approx(860.0, abs=1e-9)


def test_eq1_perfect_terminal_state():
    wp = WorldParams(n_sheep=2)
    rp = RewardParams(tau=0.0)
    sheep = np.array([[(90.0, 90.0), (90.0, 90.0)]] * 2)
    shep = np.array([[90.0, 90.0]] * 2)
    trace = trace_from_states(sheep, shep, goal=(90.0, 90.0), wp=wp,
                              skill=Skill.BASELINE)
    assert baseline_fitness(trace, rp, wp) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Episode objective assembly
# ---------------------------------------------------------------------------


def random_walk_states(rng, n, steps, length=150.0):
    sheep = np.empty((steps + 1, n, 2))
    shep = np.empty((steps + 1, 2))
    sheep[0] = rng.uniform(30, 120, (n, 2))
    shep[0] = rng.uniform(0, length, 2)
    for t in range(1, steps + 1):
        sheep[t] = np.clip(sheep[t - 1] + rng.normal(0, 1.0, (n, 2)), 0, length)
        shep[t] = np.clip(shep[t - 1] + rng.normal(0, 1.5, 2), 0, length)
    return sheep, shep


def test_one_step_trace_equals_step_reward():
    rng = np.random.default_rng(12)
    wp = WorldParams(n_sheep=4)
    rp = RewardParams()
    sheep, shep = random_walk_states(rng, 4, 1)
    goal = (100.0, 100.0)
    trace = trace_from_states(sheep, shep, goal=goal, wp=wp, skill=Skill.COLLECT)
    prev = make_world(sheep[0], shep[0], goal=goal, t=0)
    curr = make_world(sheep[1], shep[1], goal=goal, t=1)
    pair = StepPair.from_states(prev, curr, wp)
    obj = episode_objectives(trace, Skill.COLLECT, rp, wp)
    assert obj.values[0] == pytest.approx(collect_reward_step(pair, rp, wp), abs=1e-12)


def test_combined_mode_guard_structure():
    # herd always clustered: the collect component must not move when the
    # dispersal/force constants change, and drive equals the plain drive sum
    wp = WorldParams(n_sheep=3, r_a=2.0, r_s=10.0)
    sheep0 = np.array([(20.0, 0.0), (21.0, 0.0), (22.0, 0.0)])
    sheep = np.stack([sheep0 + (0.2 * t, 0.0) for t in range(6)])
    shep = np.array([[(10.0 - 0.1 * t, 0.0)] for t in range(6)]).reshape(6, 2)
    trace = trace_from_states(sheep, shep, goal=(100.0, 0.0), wp=wp,
                              skill=Skill.COMBINED)
    rp_a = RewardParams(c0=1.0, cf0=3.0)
    rp_b = RewardParams(c0=50.0, cf0=99.0)
    obj_a = episode_objectives(trace, Skill.COMBINED, rp_a, wp)
    obj_b = episode_objectives(trace, Skill.COMBINED, rp_b, wp)
    assert obj_a.values[0] == pytest.approx(obj_b.values[0], abs=1e-12)
    drive_only = episode_objectives(trace, Skill.DRIVE, rp_a, wp)
    assert obj_a.values[1] == pytest.approx(drive_only.values[0], abs=1e-12)


def test_episode_objectives_match_reference_accumulation():
    rng = np.random.default_rng(13)
    wp = WorldParams(n_sheep=5)
    rp = RewardParams()
    sheep, shep = random_walk_states(rng, 5, 100)
    goal = (120.0, 120.0)
    trace = trace_from_states(sheep, shep, goal=goal, wp=wp, skill=Skill.COMBINED)
    ref_c = sum(ref_collect_step(sheep[t - 1], shep[t - 1], sheep[t], shep[t],
                                 np.array(goal), wp.r_a, wp.r_s, rp)
                for t in range(1, len(sheep)))
    ref_d = sum(ref_drive_step(sheep[t - 1], shep[t - 1], sheep[t], shep[t],
                               np.array(goal), wp.r_a, wp.r_s, rp)
                for t in range(1, len(sheep)))
    obj = episode_objectives(trace, Skill.COMBINED, rp, wp)
    assert obj.values[0] == pytest.approx(ref_c, abs=1e-9)
    assert obj.values[1] == pytest.approx(ref_d, abs=1e-9)


def test_additivity_over_splits():
    rng = np.random.default_rng(14)
    wp = WorldParams(n_sheep=4)
    rp = RewardParams()
    sheep, shep = random_walk_states(rng, 4, 60)
    goal = (120.0, 120.0)
    full = trace_from_states(sheep, shep, goal=goal, wp=wp, skill=Skill.COLLECT)
    total = episode_objectives(full, Skill.COLLECT, rp, wp).values[0]
    for k in (1, 17, 30, 59):
        head = trace_from_states(sheep[:k + 1], shep[:k + 1], goal=goal, wp=wp,
                                 skill=Skill.COLLECT)
        tail = trace_from_states(sheep[k:], shep[k:], goal=goal, wp=wp,
                                 skill=Skill.COLLECT)
        part = (episode_objectives(head, Skill.COLLECT, rp, wp).values[0]
                + episode_objectives(tail, Skill.COLLECT, rp, wp).values[0])
        assert part == pytest.approx(total, abs=1e-9)


def test_reward_reference_equivalence_sample():
    # the full 1000-pair battery lives in the acceptance suite
    rng = np.random.default_rng(15)
    wp_base = WorldParams(n_sheep=2)
    for i in range(300):
        pair, wp = random_step_pair(rng, wp_base)
        rp = RewardParams(dtheta=float(rng.uniform(0.2, math.pi)),
                          delta=float(rng.uniform(0.5, 8.0)),
                          delta_psi=float(rng.uniform(1.0, 20.0)),
                          c0=float(rng.uniform(0, 3)), d0=float(rng.uniform(0, 3)),
                          u0=float(rng.uniform(0, 8)), cf0=float(rng.uniform(0, 5)),
                          df0=float(rng.uniform(0, 5)))
        args = (pair.prev.sheep_pos, pair.prev.shepherd_pos,
                pair.curr.sheep_pos, pair.curr.shepherd_pos,
                pair.curr.goal, wp.r_a, wp.r_s, rp)
        assert collect_reward_step(pair, rp, wp) == pytest.approx(
            ref_collect_step(*args), abs=1e-9)
        assert drive_reward_step(pair, rp, wp) == pytest.approx(
            ref_drive_step(*args), abs=1e-9)


def test_empty_trace_errors():
    wp = WorldParams(n_sheep=2)
    trace = trace_from_states(np.empty((0, 2, 2)), np.empty((0, 2)),
                              goal=(1.0, 1.0), wp=wp, skill=Skill.COLLECT)
    with pytest.raises(ValueError):
        episode_objectives(trace, Skill.COLLECT, RewardParams(), wp)
    with pytest.raises(ValueError):
        baseline_fitness(trace, RewardParams(), wp)

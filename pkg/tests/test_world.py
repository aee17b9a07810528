import numpy as np
import pytest

from sheepdog import (
    SheepParams,
    WorldParams,
    gcm,
    lcm_n_nearest,
    sheep_heading,
    sheep_step,
)
from sheepdog.world import resolve_n_neighbors

from helpers import make_world, random_world

WP = WorldParams(n_sheep=3, r_a=2.0, r_s=65.0)


def only(**weights):
    """SheepParams with every weight zero except the given ones."""
    base = dict(rho_a=0.0, c=0.0, rho_s=0.0, h=0.0, e=0.0, p_graze=0.0)
    base.update(weights)
    return SheepParams(**base)


def test_params_validation():
    with pytest.raises(ValueError):
        WorldParams(n_sheep=0)
    with pytest.raises(ValueError):
        WorldParams(r_s=1.0, r_a=2.0)
    with pytest.raises(ValueError):
        SheepParams(p_graze=1.5)
    with pytest.raises(ValueError):
        SheepParams(rho_a=-1.0)


def test_resolve_n_neighbors():
    assert resolve_n_neighbors(SheepParams(), 15) == 10
    assert resolve_n_neighbors(SheepParams(), 1) == 0
    assert resolve_n_neighbors(SheepParams(n_neighbors=3), 10) == 3
    with pytest.raises(ValueError):
        resolve_n_neighbors(SheepParams(n_neighbors=10), 10)


def test_lcm_nearest_single_neighbor():
    world = make_world([(0, 0), (1, 0), (10, 0)], (50, 50))
    np.testing.assert_allclose(lcm_n_nearest(world, 0, 1), [1, 0])


def test_lcm_nearest_two_neighbors():
    world = make_world([(0, 0), (1, 0), (10, 0)], (50, 50))
    np.testing.assert_allclose(lcm_n_nearest(world, 0, 2), [5.5, 0])


def test_lcm_nearest_symmetry():
    world = make_world([(0, 0), (2, 0), (-2, 0)], (50, 50))
    np.testing.assert_allclose(lcm_n_nearest(world, 0, 2), [0, 0], atol=1e-15)


def test_lcm_no_neighbours():
    world = make_world([(5, 5)], (50, 50))
    with pytest.raises(ValueError, match="no neighbours"):
        lcm_n_nearest(world, 0, 1)


def test_heading_pure_repulsion():
    world = make_world([(10, 10), (11, 10)], (100, 100))
    head = sheep_heading(world, 0, only(rho_a=1.0), np.array([0.0, 1.0]), WP)
    np.testing.assert_allclose(head, [-1, 0], atol=1e-15)


def test_heading_flee_shepherd():
    world = make_world([(10, 10)], (11, 10))
    head = sheep_heading(world, 0, only(rho_s=1.0), np.array([0.0, 1.0]), WP)
    np.testing.assert_allclose(head, [-1, 0], atol=1e-15)


def test_heading_all_weights_zero_unchanged():
    world = make_world([(10, 10), (11, 10)], (11, 11), headings=[(0, 1), (1, 0)])
    head = sheep_heading(world, 0, only(), np.array([1.0, 0.0]), WP)
    np.testing.assert_allclose(head, [0, 1])


def test_heading_attraction_gated_by_shepherd_distance():
    # shepherd beyond r_s: the grouping term must not act
    world = make_world([(10, 10), (20, 10), (20, 11)], (140, 140))
    head = sheep_heading(world, 0, only(c=1.0), np.array([0.0, 1.0]), WP)
    np.testing.assert_allclose(head, world.sheep_heading[0])  # zero combine keeps heading
    # shepherd close: attraction pulls toward the neighbours
    world2 = make_world([(10, 10), (20, 10), (20, 11)], (12, 10))
    head2 = sheep_heading(world2, 0, only(c=1.0), np.array([0.0, 1.0]), WP)
    assert head2[0] > 0.9  # toward +x neighbours


def test_sheep_step_grazing_stasis():
    # distant shepherd and p_graze=0 freeze the flock
    world = make_world([(40, 40), (42, 40), (41, 42)], (140, 140))
    params = SheepParams(p_graze=0.0)
    out = sheep_step(world, params, WP, np.random.default_rng(0))
    np.testing.assert_array_equal(out.sheep_pos, world.sheep_pos)
    np.testing.assert_array_equal(out.sheep_heading, world.sheep_heading)


def test_sheep_step_single_flee():
    # the spec's corner case translated into the paddock interior so the
    # clamp cannot interfere: sheep one unit left of the shepherd flees left
    wp = WorldParams(n_sheep=1)
    world = make_world([(50, 50)], (51, 50))
    out = sheep_step(world, only(rho_s=1.0), wp, np.random.default_rng(0))
    np.testing.assert_allclose(out.sheep_pos[0], [49, 50], atol=1e-12)


def test_sheep_step_clamps_at_boundary():
    wp = WorldParams(n_sheep=1)
    world = make_world([(0, 0)], (1, 0))
    out = sheep_step(world, only(rho_s=1.0), wp, np.random.default_rng(0))
    np.testing.assert_allclose(out.sheep_pos[0], [0, 0], atol=1e-12)


def test_sheep_step_determinism():
    world = random_world(np.random.default_rng(5), 12)
    params = SheepParams()
    wp = WorldParams(n_sheep=12)
    a = sheep_step(world, params, wp, np.random.default_rng(42))
    b = sheep_step(world, params, wp, np.random.default_rng(42))
    np.testing.assert_array_equal(a.sheep_pos, b.sheep_pos)
    np.testing.assert_array_equal(a.sheep_heading, b.sheep_heading)


def test_shepherd_repulsion_monotone():
    # a lone threatened sheep strictly gains distance until the wall stops it
    wp = WorldParams(n_sheep=1)
    world = make_world([(50, 50)], (45, 45))
    params = only(rho_s=1.0)
    rng = np.random.default_rng(0)
    dist = np.hypot(*(world.sheep_pos[0] - world.shepherd_pos))
    for _ in range(40):
        world = sheep_step(world, params, wp, rng)
        new_dist = np.hypot(*(world.sheep_pos[0] - world.shepherd_pos))
        at_wall = np.any(world.sheep_pos[0] >= wp.length) or np.any(world.sheep_pos[0] <= 0.0)
        if new_dist >= wp.r_s or at_wall:
            break
        assert new_dist > dist
        dist = new_dist


def test_cohesion_toward_centre():
    # only attraction active, all neighbours considered: each sheep's
    # distance to the pre-step centre never grows beyond max(old, delta)
    rng = np.random.default_rng(7)
    wp = WorldParams(n_sheep=8)
    params = only(c=1.0, n_neighbors=7)
    for _ in range(20):
        world = random_world(rng, 8, cluster=((70, 70), 20.0))
        world.shepherd_pos = np.array([72.0, 70.0])  # inside r_s
        centre = gcm(world.sheep_pos)
        before = np.hypot(*(world.sheep_pos - centre).T)
        stepped = sheep_step(world, params, wp, rng)
        after = np.hypot(*(stepped.sheep_pos - centre).T)
        assert np.all(after <= np.maximum(before, params.delta) + 1e-9)


def test_repulsion_spreads_overpacked_cluster():
    rng = np.random.default_rng(11)
    wp = WorldParams(n_sheep=10)
    params = SheepParams()

    def mean_nn(pos):
        d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
        np.fill_diagonal(d, np.inf)
        return d.min(axis=1).mean()

    world = random_world(rng, 10, cluster=((75, 75), 0.8))  # all pairwise < r_a
    world.shepherd_pos = np.array([75.0, 75.0])
    before = mean_nn(world.sheep_pos)
    for _ in range(10):
        world = sheep_step(world, params, wp, rng)
    assert mean_nn(world.sheep_pos) >= before


def test_positions_stay_in_paddock():
    rng = np.random.default_rng(13)
    wp = WorldParams(n_sheep=10)
    params = SheepParams(e=1.0, delta=3.0)
    world = random_world(rng, 10)
    world.shepherd_pos = np.array([75.0, 75.0])
    for _ in range(200):
        world = sheep_step(world, params, wp, rng)
        assert world.sheep_pos.min() >= 0.0
        assert world.sheep_pos.max() <= wp.length


def test_headings_stay_unit():
    rng = np.random.default_rng(17)
    wp = WorldParams(n_sheep=6)
    world = random_world(rng, 6)
    world.shepherd_pos = world.sheep_pos[0] + np.array([1.0, 0.0])
    for _ in range(50):
        world = sheep_step(world, SheepParams(), wp, rng)
        norms = np.hypot(world.sheep_heading[:, 0], world.sheep_heading[:, 1])
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

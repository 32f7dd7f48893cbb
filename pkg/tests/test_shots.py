"""Shot sampling: determinism, range respect, goal-bound oracle, CSV round trip."""

import math

import numpy as np
import pytest

from carsoccer.ball import project_crosses_goal_mouth
from carsoccer.config import ConfigError, PhysicsConfig
from carsoccer.shots import (
    GOAL_LINE_OFFSET,
    GOALIE_KIND,
    PROJECTION_FRAMES,
    STRIKER_KIND,
    ShotRanges,
    goalie_spawn,
    load_shot_set,
    sample_shot_set,
    shot_ranges_from_dict,
    write_shot_set,
)
from carsoccer.sim import resting_height
from carsoccer.state import BallState

CFG = PhysicsConfig()


def test_same_seed_same_set():
    a = sample_shot_set(3, GOALIE_KIND, CFG, n=40)
    b = sample_shot_set(3, GOALIE_KIND, CFG, n=40)
    assert a.samples == b.samples
    assert a.goal_bound == b.goal_bound


def test_different_seeds_differ():
    a = sample_shot_set(3, GOALIE_KIND, CFG, n=10)
    b = sample_shot_set(4, GOALIE_KIND, CFG, n=10)
    assert a.samples != b.samples


def test_goalie_samples_are_goal_bound():
    shot_set = sample_shot_set(5, GOALIE_KIND, CFG, n=30)
    assert all(shot_set.goal_bound)
    # independently re-project a handful
    for sample in shot_set.samples[:10]:
        ball = BallState(position=sample.ball_position, velocity=sample.ball_velocity)
        assert project_crosses_goal_mouth(ball, CFG, -1.0, PROJECTION_FRAMES)


def test_goalie_ranges_and_spawn():
    ranges = ShotRanges()
    shot_set = sample_shot_set(6, GOALIE_KIND, CFG, n=30)
    spawn_pos, spawn_yaw = goalie_spawn(CFG)
    assert spawn_pos.y == -CFG.arena.half_extent_y + GOAL_LINE_OFFSET
    assert spawn_pos.z == pytest.approx(resting_height(CFG))
    assert spawn_yaw == math.pi / 2.0
    for s in shot_set.samples:
        assert ranges.goalie_origin_x[0] <= s.ball_position.x <= ranges.goalie_origin_x[1]
        assert ranges.goalie_origin_y[0] <= s.ball_position.y <= ranges.goalie_origin_y[1]
        assert ranges.goalie_origin_z[0] <= s.ball_position.z <= ranges.goalie_origin_z[1]
        speed = s.ball_velocity.norm()
        assert ranges.goalie_speed[0] - 1e-6 <= speed <= ranges.goalie_speed[1] + 1e-6
        # velocity points toward the defended goal
        assert s.ball_velocity.y < 0.0
        assert s.car_position == spawn_pos
        assert s.car_yaw == spawn_yaw
        assert s.car_boost == 100.0


def test_striker_ranges():
    ranges = ShotRanges()
    shot_set = sample_shot_set(7, STRIKER_KIND, CFG, n=30)
    half_y = CFG.arena.half_extent_y
    for s in shot_set.samples:
        # ball crosses in front of the attacked goal, parallel to its plane
        assert s.ball_velocity.y == 0.0 and s.ball_velocity.z == 0.0
        speed = abs(s.ball_velocity.x)
        assert ranges.striker_speed[0] <= speed <= ranges.striker_speed[1]
        depth = half_y - s.ball_position.y
        assert ranges.striker_ball_depth[0] <= depth <= ranges.striker_ball_depth[1]
        # car a few thousand uu back, roughly facing the goal
        dx = s.car_position.x
        dy = half_y - s.car_position.y
        dist = math.hypot(dx, dy)
        assert ranges.striker_car_distance[0] - 1e-6 <= dist <= ranges.striker_car_distance[1] + 1e-6
        aim = math.atan2(dy, -dx)
        err = abs((s.car_yaw - aim + math.pi) % (2.0 * math.pi) - math.pi)
        assert err <= ranges.striker_yaw_jitter[1] + 1e-9


def test_custom_ranges_narrow_sampling():
    ranges = shot_ranges_from_dict({"goalie_speed": [1200.0, 1400.0]})
    shot_set = sample_shot_set(8, GOALIE_KIND, CFG, ranges=ranges, n=20)
    for s in shot_set.samples:
        assert 1200.0 - 1e-6 <= s.ball_velocity.norm() <= 1400.0 + 1e-6


def test_ranges_from_dict_rejects_bad_input():
    with pytest.raises(ConfigError):
        shot_ranges_from_dict({"goali_speed": [1.0, 2.0]})
    with pytest.raises(ConfigError):
        shot_ranges_from_dict({"goalie_speed": [1.0]})
    with pytest.raises(ConfigError):
        shot_ranges_from_dict({"goalie_speed": [1.0, True]})
    with pytest.raises(ConfigError):
        shot_ranges_from_dict({"goalie_speed": [2.0, 1.0]})


def test_bad_kind_and_size_rejected():
    with pytest.raises(ConfigError):
        sample_shot_set(0, "midfielder", CFG)
    with pytest.raises(ConfigError):
        sample_shot_set(0, GOALIE_KIND, CFG, n=0)


def test_hopeless_ranges_abort():
    # a near-stationary ball never reaches the goal; rejection must not spin
    ranges = shot_ranges_from_dict({"goalie_speed": [1.0, 1.0]})
    with pytest.raises(ConfigError):
        sample_shot_set(9, GOALIE_KIND, CFG, ranges=ranges, n=2)


def test_csv_round_trip(tmp_path):
    shot_set = sample_shot_set(10, STRIKER_KIND, CFG, n=25)
    path = str(tmp_path / "shots.csv")
    write_shot_set(path, shot_set)
    loaded = load_shot_set(path)
    assert loaded.kind == shot_set.kind
    assert loaded.seed == shot_set.seed
    assert loaded.goal_bound == shot_set.goal_bound
    for a, b in zip(loaded.samples, shot_set.samples):
        for va, vb in zip(a, b):
            if hasattr(va, "x"):
                np.testing.assert_allclose([va.x, va.y, va.z], [vb.x, vb.y, vb.z], rtol=1e-8)
            else:
                assert va == pytest.approx(vb, rel=1e-8)


def test_load_rejects_malformed_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("not,a,shot,file\n")
    with pytest.raises(ConfigError):
        load_shot_set(str(p))
    p.write_text("# kind=sweeper seed=1\nbpx\n")
    with pytest.raises(ConfigError):
        load_shot_set(str(p))

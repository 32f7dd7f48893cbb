"""Scripted maneuvers: corpus shape, determinism, families, fault handling."""

import math

import numpy as np
import pytest

from carsoccer.arena import PhysicsFault
from carsoccer.config import PhysicsConfig
from carsoccer.maneuvers import (
    InitialState,
    ManeuverScript,
    builtin_scripts,
    run_script,
    script_by_name,
    validate_script,
)
from carsoccer.state import ControllerInput
from carsoccer.trace import write_trace
from carsoccer.vec import Quat, Vec3

CFG = PhysicsConfig()
SCRIPTS = builtin_scripts(CFG)
BY_NAME = {s.name: s for s in SCRIPTS}


def test_corpus_shape():
    assert len(SCRIPTS) == 18
    assert len(BY_NAME) == 18  # names unique
    families: dict[str, int] = {}
    for s in SCRIPTS:
        families[s.family] = families.get(s.family, 0) + 1
    assert families == {
        "acceleration": 3,
        "air control": 3,
        "drift": 3,
        "jump": 3,
        "ball bounce": 3,
        "shot": 3,
    }
    for s in SCRIPTS:
        validate_script(s)
        assert s.duration_frames <= 1200  # all under 10 s


def test_script_by_name():
    assert script_by_name("jump_tap", CFG).family == "jump"
    with pytest.raises(PhysicsFault, match="unknown maneuver"):
        script_by_name("barrel_roll", CFG)


def test_reruns_are_byte_identical(tmp_path):
    for name in ("accelerate_boost", "drift_left", "bounce_spinning", "shot_dodge"):
        script = BY_NAME[name]
        p1 = str(tmp_path / f"{name}_1.csv")
        p2 = str(tmp_path / f"{name}_2.csv")
        write_trace(p1, run_script(script, CFG))
        write_trace(p2, run_script(script, CFG))
        assert open(p1, "rb").read() == open(p2, "rb").read()


def test_trace_rows_cover_every_frame():
    script = BY_NAME["jump_tap"]
    trace = run_script(script, CFG)
    assert len(trace) == script.duration_frames + 1  # frame 0 included
    assert trace.frames[0] == 0
    assert np.array_equal(np.diff(trace.frames), np.ones(script.duration_frames))
    np.testing.assert_allclose(trace.times, trace.frames * CFG.dt, atol=1e-12)


def test_bounce_family_keeps_car_parked():
    for name in ("bounce_drop", "bounce_oblique", "bounce_spinning"):
        trace = run_script(BY_NAME[name], CFG)
        drift = np.abs(trace.car_position - trace.car_position[0]).max()
        assert drift < 5.0  # settling wiggle only; nothing drives the car
        ball_travel = np.abs(trace.ball_position - trace.ball_position[0]).max()
        assert ball_travel > 100.0


def test_bounce_drop_loses_height_each_bounce():
    trace = run_script(BY_NAME["bounce_drop"], CFG)
    z = trace.ball_position[:, 2]
    interior = (z[1:-1] > z[:-2]) & (z[1:-1] >= z[2:])
    apexes = np.concatenate(([z[0]], z[1:-1][interior]))  # release height counts
    assert len(apexes) >= 2
    assert np.all(np.diff(apexes) < 0.0)


def test_shot_family_reaches_the_goal():
    goal_line = CFG.arena.half_extent_y
    for name in ("shot_ground", "shot_boosted", "shot_dodge"):
        trace = run_script(BY_NAME[name], CFG)
        assert trace.ball_position[:, 1].max() > goal_line


def test_jump_scripts_leave_and_regain_the_ground():
    for name in ("jump_tap", "jump_hold", "jump_double"):
        trace = run_script(BY_NAME[name], CFG)
        assert (trace.contacts == 0).any()  # airborne at some point
        assert trace.contacts[-1] == 0b1111  # back on all four wheels
    tap_apex = run_script(BY_NAME["jump_tap"], CFG).car_position[:, 2].max()
    hold_apex = run_script(BY_NAME["jump_hold"], CFG).car_position[:, 2].max()
    double_apex = run_script(BY_NAME["jump_double"], CFG).car_position[:, 2].max()
    assert hold_apex > tap_apex
    assert double_apex > hold_apex


def test_air_control_scripts_start_nose_up():
    for name in ("aircontrol_pitch", "aircontrol_yaw", "aircontrol_roll"):
        trace = run_script(BY_NAME[name], CFG)
        q = Quat(*trace.car_rotation[0])
        assert q.forward().z == pytest.approx(math.sin(math.pi / 4.0), abs=1e-9)
        assert trace.contacts[0] == 0


def test_aircontrol_yaw_rotates_heading():
    trace = run_script(BY_NAME["aircontrol_yaw"], CFG)
    first = Quat(*trace.car_rotation[0]).forward()
    last = Quat(*trace.car_rotation[-1]).forward()
    assert first.x * last.x + first.y * last.y < 0.9  # heading moved well off start


def test_fault_yields_partial_trace():
    bad = ManeuverScript(
        "poisoned", "test",
        InitialState(car_velocity=Vec3(float("nan"), 0.0, 0.0)),
        ((0, ControllerInput(throttle=1.0)),),
        120,
    )
    trace = run_script(bad, CFG)
    assert trace.fault_frame == 0
    assert len(trace) == 1  # only the initial snapshot


def test_validate_script_rejects_bad_schedules():
    idle = ControllerInput()
    with pytest.raises(PhysicsFault, match="strictly increasing"):
        validate_script(
            ManeuverScript("x", "test", InitialState(), ((5, idle), (5, idle)), 100)
        )
    with pytest.raises(PhysicsFault, match="past the end"):
        validate_script(
            ManeuverScript("x", "test", InitialState(), ((120, idle),), 100)
        )
    with pytest.raises(PhysicsFault, match="duration"):
        validate_script(ManeuverScript("x", "test", InitialState(), (), 0))
    with pytest.raises(PhysicsFault, match="duration"):
        validate_script(ManeuverScript("x", "test", InitialState(), (), 1300))

"""Scripted maneuvers: fixed input schedules replayed into state traces.

A script is an initial placement plus a schedule of (start_frame, input)
entries with strictly increasing frames; each input holds until the next
entry. Running a script records every frame (including frame 0) into a
Trace; a physics fault mid-run yields the partial trace with the faulting
frame recorded instead of an exception.

`builtin_scripts` returns 18 canned maneuvers, three per family:
acceleration, air control (started from a 45-degree nose-up attitude), drift,
jump, ball bounce (zero car inputs throughout), and shot. All run under
10 seconds and are deterministic, so repeated runs produce byte-identical
trace files.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .arena import PhysicsFault
from .config import PhysicsConfig
from .sim import refresh_wheel_contacts, resting_height, step
from .state import BallState, CarState, ControllerInput, make_world
from .trace import Trace, TraceRecorder
from .vec import Quat, Vec3

# a parking spot well away from every scripted car path
_BALL_PARK = Vec3(3500.0, 4500.0, 93.15)
_CAR_PARK = Vec3(-3500.0, -4500.0, 17.0)


class InitialState(NamedTuple):
    """Placement applied before the first frame; None fields keep defaults."""

    car_position: Vec3 | None = None  # default: resting on ground at origin
    car_rotation: Quat | None = None
    car_velocity: Vec3 | None = None
    car_boost: float = 100.0
    ball_position: Vec3 | None = None  # default: parked away from the action
    ball_velocity: Vec3 | None = None
    ball_angular_velocity: Vec3 | None = None


class ManeuverScript(NamedTuple):
    name: str
    family: str
    initial: InitialState
    schedule: tuple[tuple[int, ControllerInput], ...]  # strictly increasing frames
    duration_frames: int


def validate_script(script: ManeuverScript) -> None:
    if script.duration_frames <= 0 or script.duration_frames > 1200:
        raise PhysicsFault(f"{script.name}: duration must be 1..1200 frames")
    last = -1
    for frame, _ in script.schedule:
        if frame <= last:
            raise PhysicsFault(f"{script.name}: schedule frames must be strictly increasing")
        if frame >= script.duration_frames:
            raise PhysicsFault(f"{script.name}: schedule entry at {frame} past the end")
        last = frame


def run_script(script: ManeuverScript, cfg: PhysicsConfig) -> Trace:
    """Replay the schedule; a physics fault ends the trace early, recorded on it."""
    validate_script(script)
    init = script.initial
    ground_z = resting_height(cfg)
    car = CarState(
        position=init.car_position if init.car_position is not None else Vec3(0.0, 0.0, ground_z),
        rotation=init.car_rotation if init.car_rotation is not None else Quat(1.0, 0.0, 0.0, 0.0),
        velocity=init.car_velocity if init.car_velocity is not None else Vec3(0.0, 0.0, 0.0),
        boost=init.car_boost,
    )
    refresh_wheel_contacts(car, cfg)
    ball = BallState(
        position=init.ball_position if init.ball_position is not None else _BALL_PARK,
        velocity=init.ball_velocity if init.ball_velocity is not None else Vec3(0.0, 0.0, 0.0),
        angular_velocity=(
            init.ball_angular_velocity if init.ball_angular_velocity is not None else Vec3(0.0, 0.0, 0.0)
        ),
    )
    world = make_world(cfg, car=car, ball=ball)
    recorder = TraceRecorder()
    recorder.record(world)
    current = ControllerInput()
    entries = iter(script.schedule)
    pending = next(entries, None)
    fault_frame: int | None = None
    for frame in range(script.duration_frames):
        while pending is not None and pending[0] == frame:
            current = pending[1]
            pending = next(entries, None)
        try:
            world = step(world, current, cfg)
        except PhysicsFault:
            fault_frame = frame
            break
        recorder.record(world)
    return recorder.finish(fault_frame)


# --- the builtin corpus -----------------------------------------------------------


def _pitched_up(angle: float) -> Quat:
    # positive rotation about -y raises the nose (right-handed, forward +x)
    return Quat.from_axis_angle(Vec3(0.0, -1.0, 0.0), angle)


def builtin_scripts(cfg: PhysicsConfig) -> tuple[ManeuverScript, ...]:
    ground_z = resting_height(cfg)
    idle = ControllerInput()
    full = ControllerInput(throttle=1.0)
    # long runway: rear of the field facing +y (the arena is deeper than wide)
    runway = InitialState(
        car_position=Vec3(0.0, -4000.0, ground_z),
        car_rotation=Quat.from_yaw(math.pi / 2.0),
    )
    airborne_45 = InitialState(
        car_position=Vec3(0.0, 0.0, 1000.0),
        car_rotation=_pitched_up(math.pi / 4.0),
        car_velocity=Vec3(0.0, 0.0, 100.0),
        ball_position=_BALL_PARK,
    )
    scripts = [
        # acceleration: throttle curve, boost, braking from speed
        ManeuverScript(
            "accelerate_throttle", "acceleration", runway,
            ((0, full),), 600,
        ),
        ManeuverScript(
            "accelerate_boost", "acceleration", runway,
            ((0, ControllerInput(throttle=1.0, boost=True)),), 480,
        ),
        ManeuverScript(
            "brake_reversal", "acceleration", runway,
            ((0, full), (240, ControllerInput(throttle=-1.0))), 480,
        ),
        # air control: attitude authority from a 45-degree nose-up launch
        ManeuverScript(
            "aircontrol_pitch", "air control", airborne_45,
            ((0, ControllerInput(pitch=1.0)), (120, ControllerInput(pitch=-1.0))), 300,
        ),
        ManeuverScript(
            "aircontrol_yaw", "air control", airborne_45,
            ((0, ControllerInput(yaw=1.0)),), 300,
        ),
        ManeuverScript(
            "aircontrol_roll", "air control", airborne_45,
            ((0, ControllerInput(roll=1.0)), (150, ControllerInput(roll=-0.5))), 300,
        ),
        # drift: speed first, then handbrake turns
        ManeuverScript(
            "drift_left", "drift", runway,
            ((0, ControllerInput(throttle=1.0, boost=True)),
             (180, ControllerInput(throttle=1.0, steer=-1.0, handbrake=True))), 420,
        ),
        ManeuverScript(
            "drift_right", "drift", runway,
            ((0, ControllerInput(throttle=1.0, boost=True)),
             (180, ControllerInput(throttle=1.0, steer=1.0, handbrake=True))), 420,
        ),
        ManeuverScript(
            "drift_slalom", "drift", runway,
            ((0, ControllerInput(throttle=1.0, boost=True)),
             (180, ControllerInput(throttle=1.0, steer=0.6, handbrake=True)),
             (300, ControllerInput(throttle=1.0, steer=-0.6, handbrake=True))), 480,
        ),
        # jump: tap, full hold, double jump
        ManeuverScript(
            "jump_tap", "jump", InitialState(),
            ((0, ControllerInput(jump=True)), (3, idle)), 240,
        ),
        ManeuverScript(
            "jump_hold", "jump", InitialState(),
            ((0, ControllerInput(jump=True)), (30, idle)), 300,
        ),
        ManeuverScript(
            "jump_double", "jump", InitialState(),
            ((0, ControllerInput(jump=True)), (6, idle), (30, ControllerInput(jump=True)), (36, idle)), 300,
        ),
        # ball bounce: zero car inputs, car parked clear of the ball
        ManeuverScript(
            "bounce_drop", "ball bounce",
            InitialState(car_position=_CAR_PARK, ball_position=Vec3(0.0, 0.0, 1500.0)),
            (), 600,
        ),
        ManeuverScript(
            "bounce_oblique", "ball bounce",
            InitialState(
                car_position=_CAR_PARK,
                ball_position=Vec3(-2000.0, 0.0, 800.0),
                ball_velocity=Vec3(900.0, 300.0, 0.0),
            ),
            (), 720,
        ),
        ManeuverScript(
            "bounce_spinning", "ball bounce",
            InitialState(
                car_position=_CAR_PARK,
                ball_position=Vec3(0.0, -1500.0, 600.0),
                ball_velocity=Vec3(0.0, 600.0, 200.0),
                ball_angular_velocity=Vec3(0.0, 0.0, 5.0),
            ),
            (), 720,
        ),
        # shot: drive the ball toward the +y goal three ways
        ManeuverScript(
            "shot_ground", "shot",
            InitialState(
                car_position=Vec3(0.0, 0.0, ground_z),
                car_rotation=Quat.from_yaw(math.pi / 2.0),
                ball_position=Vec3(0.0, 500.0, 93.15),
            ),
            ((0, full),), 600,
        ),
        ManeuverScript(
            "shot_boosted", "shot",
            InitialState(
                car_position=Vec3(0.0, -500.0, ground_z),
                car_rotation=Quat.from_yaw(math.pi / 2.0),
                ball_position=Vec3(0.0, 500.0, 93.15),
            ),
            ((0, ControllerInput(throttle=1.0, boost=True)),), 600,
        ),
        ManeuverScript(
            "shot_dodge", "shot",
            InitialState(
                car_position=Vec3(0.0, 0.0, ground_z),
                car_rotation=Quat.from_yaw(math.pi / 2.0),
                ball_position=Vec3(0.0, 900.0, 93.15),
            ),
            ((0, ControllerInput(throttle=1.0, boost=True)),
             (60, ControllerInput(throttle=1.0, boost=True, jump=True)),
             (66, ControllerInput(throttle=1.0, boost=True)),
             (72, ControllerInput(throttle=1.0, pitch=1.0, jump=True)),
             (78, full)), 480,
        ),
    ]
    return tuple(scripts)


def script_by_name(name: str, cfg: PhysicsConfig) -> ManeuverScript:
    for script in builtin_scripts(cfg):
        if script.name == name:
            return script
    known = ", ".join(s.name for s in builtin_scripts(cfg))
    raise PhysicsFault(f"unknown maneuver {name!r}; have: {known}")

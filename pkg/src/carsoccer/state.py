"""Mutable world state: car, ball, wheels, and the jump/dodge machine.

States are plain slotted objects mutated in place by the stepper, but
`step()` always works on a copy, so callers can treat worlds as values.
Angular velocities are world-frame rad/s; rotations map body to world.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .config import DT, PhysicsConfig
from .vec import IDENTITY_QUAT, ZERO3, Quat, Vec3


class ControllerInput(NamedTuple):
    """One frame of driver input.

    `handbrake` is the shared drift / air-roll button: it powerslides while
    any wheel has surface contact and routes steer into roll while airborne.
    """

    throttle: float = 0.0  # [-1, 1]
    steer: float = 0.0  # [-1, 1]
    yaw: float = 0.0  # [-1, 1]
    pitch: float = 0.0  # [-1, 1]
    roll: float = 0.0  # [-1, 1]
    boost: bool = False
    handbrake: bool = False
    jump: bool = False


class JumpPhase(enum.IntEnum):
    GROUNDED = 0
    JUMP_HOLD = 1  # first jump pressed, hold acceleration may still apply
    AIR_WINDOW = 2  # airborne, second press would dodge or double jump
    DODGE = 3  # dodge torque and vertical damping active
    AIR_DONE = 4  # no jump resources left until wheels touch down


@dataclass(slots=True)
class JumpDodgeState:
    phase: JumpPhase = JumpPhase.GROUNDED
    jump_was_down: bool = False  # previous frame's button, for edge detection
    hold_time: float = 0.0  # seconds of hold acceleration consumed
    hold_frames: int = 0  # frames of hold acceleration consumed
    hold_ended: bool = False  # button released after the press; hold cannot resume
    window_time: float = 0.0  # seconds since the first jump
    dodge_time: float = 0.0  # seconds since the dodge started
    dodge_axis: Vec3 = ZERO3  # world-frame torque axis of the active dodge

    def copy(self) -> "JumpDodgeState":
        return JumpDodgeState(
            self.phase,
            self.jump_was_down,
            self.hold_time,
            self.hold_frames,
            self.hold_ended,
            self.window_time,
            self.dodge_time,
            self.dodge_axis,
        )


@dataclass(slots=True)
class WheelState:
    """Per-frame contact data for one wheel (geometry lives in the config)."""

    in_contact: bool = False
    compression: float = 0.0  # uu into the force zone, clamped to max_compress
    compression_rate: float = 0.0  # uu/s, positive while compressing

    def copy(self) -> "WheelState":
        return WheelState(self.in_contact, self.compression, self.compression_rate)


@dataclass(slots=True)
class CarState:
    position: Vec3 = Vec3(0.0, 0.0, 17.0)
    rotation: Quat = IDENTITY_QUAT
    velocity: Vec3 = ZERO3
    angular_velocity: Vec3 = ZERO3
    boost: float = 100.0  # tank in [0, boost_max]
    wheels: tuple[WheelState, WheelState, WheelState, WheelState] = None  # type: ignore[assignment]
    jump: JumpDodgeState = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.wheels is None:
            self.wheels = (WheelState(), WheelState(), WheelState(), WheelState())
        if self.jump is None:
            self.jump = JumpDodgeState()

    def copy(self) -> "CarState":
        return CarState(
            self.position,
            self.rotation,
            self.velocity,
            self.angular_velocity,
            self.boost,
            tuple(w.copy() for w in self.wheels),
            self.jump.copy(),
        )

    def forward(self) -> Vec3:
        return self.rotation.forward()

    def up(self) -> Vec3:
        return self.rotation.up()

    def wheel_contact_count(self) -> int:
        return sum(1 for w in self.wheels if w.in_contact)

    def any_wheel_contact(self) -> bool:
        return any(w.in_contact for w in self.wheels)

    def is_finite(self) -> bool:
        return (
            self.position.is_finite()
            and self.rotation.is_finite()
            and self.velocity.is_finite()
            and self.angular_velocity.is_finite()
            and math.isfinite(self.boost)
        )


@dataclass(slots=True)
class BallState:
    position: Vec3 = Vec3(0.0, 0.0, 93.15)
    velocity: Vec3 = ZERO3
    angular_velocity: Vec3 = ZERO3

    def copy(self) -> "BallState":
        return BallState(self.position, self.velocity, self.angular_velocity)

    def is_finite(self) -> bool:
        return (
            self.position.is_finite()
            and self.velocity.is_finite()
            and self.angular_velocity.is_finite()
        )


@dataclass(slots=True)
class WorldState:
    """One simulated world. `frame` is authoritative; time is frame / 120."""

    frame: int = 0
    car: CarState = None  # type: ignore[assignment]
    ball: BallState = None  # type: ignore[assignment]
    # per-frame event flags maintained by the stepper
    car_ball_contact: bool = False  # car touched the ball during the last step
    ball_in_goal_pos: bool = False  # ball center past +y goal plane, inside the mouth
    ball_in_goal_neg: bool = False  # ball center past -y goal plane, inside the mouth

    def __post_init__(self) -> None:
        if self.car is None:
            self.car = CarState()
        if self.ball is None:
            self.ball = BallState()

    @property
    def time(self) -> float:
        return self.frame * DT

    def copy(self) -> "WorldState":
        return WorldState(
            self.frame,
            self.car.copy(),
            self.ball.copy(),
            self.car_ball_contact,
            self.ball_in_goal_pos,
            self.ball_in_goal_neg,
        )

    def is_finite(self) -> bool:
        return self.car.is_finite() and self.ball.is_finite()


def make_world(cfg: PhysicsConfig, *, car: CarState | None = None, ball: BallState | None = None) -> WorldState:
    """Fresh world at frame 0; defaults put the car at origin and ball at rest."""
    world = WorldState()
    if car is not None:
        world.car = car
    if ball is not None:
        world.ball = ball
    else:
        world.ball = BallState(position=Vec3(0.0, 0.0, cfg.ball_radius))
    return world

"""Goalie and striker episode environments over the simulation core.

Both tasks share the observation and action encodings:

* Observation: 23 float32 values, each clamped to [-1, 1] after normalizing —
  car position (3, by arena half extents / ceiling), car forward (3), car up
  (3), car velocity (3, by max car speed), car angular velocity (3, by the
  dodge angular cap), ball position (3), ball velocity (3, by max ball
  speed), boost fraction (1), any-wheel-contact flag (1).
* Action: a tuple of 8 discrete indices with cardinalities (5,5,5,5,3,2,2,2)
  in the order throttle, steer, yaw, pitch, roll, boost, drift-or-airroll,
  jump. Five-way axes map to (-1, -0.5, 0, 0.5, 1), the three-way to
  (-1, 0, 1), binaries to off/on. The drift index raises the handbrake line,
  which the simulation routes to drift on ground and roll control in the air.

Episodes reset from a ShotSample and terminate on a goal, a save (goalie
only), or a fixed timeout; stepping past termination is an error. The goalie
defends the -y goal: a save is any touch after which the ball-only projection
no longer crosses that mouth (the ball is ballistic between touches, so the
flag is refreshed only on touch frames). The striker attacks the +y goal.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .arena import PhysicsFault
from .ball import project_crosses_goal_mouth
from .config import DT, PhysicsConfig
from .shots import PROJECTION_FRAMES, ShotSample
from .sim import refresh_wheel_contacts, step
from .state import BallState, CarState, ControllerInput, WorldState, make_world
from .vec import Quat, Vec3

OBSERVATION_SIZE = 23
ACTION_CARDINALITIES = (5, 5, 5, 5, 3, 2, 2, 2)

# episode cap, frames (10 s)
EPISODE_FRAMES = 1200

_FIVE_WAY = (-1.0, -0.5, 0.0, 0.5, 1.0)
_THREE_WAY = (-1.0, 0.0, 1.0)

OUTCOME_NONE = "none"
OUTCOME_GOAL = "goal"
OUTCOME_SAVE = "save"
OUTCOME_TIMEOUT = "timeout"

ActionTuple = tuple[int, int, int, int, int, int, int, int]


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    terminated: bool
    outcome: str  # one of the OUTCOME_* constants


def decode_action(action: Sequence[int]) -> ControllerInput:
    """Map 8 discrete indices onto controller lines; bad indices fault."""
    if len(action) != len(ACTION_CARDINALITIES):
        raise PhysicsFault(f"action needs {len(ACTION_CARDINALITIES)} indices, got {len(action)}")
    for i, (a, card) in enumerate(zip(action, ACTION_CARDINALITIES)):
        if not (isinstance(a, (int, np.integer)) and 0 <= a < card):
            raise PhysicsFault(f"action index {i} out of range: {a!r} not in [0, {card})")
    return ControllerInput(
        throttle=_FIVE_WAY[action[0]],
        steer=_FIVE_WAY[action[1]],
        yaw=_FIVE_WAY[action[2]],
        pitch=_FIVE_WAY[action[3]],
        roll=_THREE_WAY[action[4]],
        boost=bool(action[5]),
        handbrake=bool(action[6]),
        jump=bool(action[7]),
    )


def encode_observation(world: WorldState, cfg: PhysicsConfig) -> np.ndarray:
    """23 normalized features of the car and ball, clamped to [-1, 1]."""
    arena = cfg.arena
    car = world.car
    ball = world.ball
    fwd = car.rotation.forward()
    up = car.rotation.up()
    inv_pos = (1.0 / arena.half_extent_x, 1.0 / arena.half_extent_y, 1.0 / arena.ceiling_height)
    obs = np.empty(OBSERVATION_SIZE, dtype=np.float32)
    obs[0:3] = (car.position.x * inv_pos[0], car.position.y * inv_pos[1], car.position.z * inv_pos[2])
    obs[3:6] = fwd
    obs[6:9] = up
    obs[9:12] = car.velocity.scale(1.0 / cfg.max_car_speed)
    obs[12:15] = car.angular_velocity.scale(1.0 / cfg.max_dodge_angular)
    obs[15:18] = (ball.position.x * inv_pos[0], ball.position.y * inv_pos[1], ball.position.z * inv_pos[2])
    obs[18:21] = ball.velocity.scale(1.0 / cfg.ball_max_speed)
    obs[21] = car.boost / cfg.boost_max
    obs[22] = 1.0 if car.any_wheel_contact() else 0.0
    np.clip(obs, -1.0, 1.0, out=obs)
    return obs


class _ShotEnv:
    """Shared episode plumbing; subclasses pin the goal sign and outcomes."""

    goal_sign = 0.0  # +1.0 attacks +y, -1.0 defends -y

    def __init__(self, cfg: PhysicsConfig, max_frames: int = EPISODE_FRAMES):
        self.cfg = cfg
        self.max_frames = max_frames
        self.world: WorldState | None = None
        self.frames = 0
        self.terminated = True
        self.touched = False
        self.goal_bound = False

    def reset(self, sample: ShotSample) -> np.ndarray:
        car = CarState(
            position=sample.car_position,
            rotation=Quat.from_yaw(sample.car_yaw),
            velocity=Vec3(0.0, 0.0, 0.0),
            angular_velocity=Vec3(0.0, 0.0, 0.0),
            boost=sample.car_boost,
        )
        refresh_wheel_contacts(car, self.cfg)
        ball = BallState(
            position=sample.ball_position,
            velocity=sample.ball_velocity,
            angular_velocity=sample.ball_angular_velocity,
        )
        self.world = make_world(self.cfg, car=car, ball=ball)
        self.frames = 0
        self.terminated = False
        self.touched = False
        self.goal_bound = True  # goalie samples are goal-bound by construction
        return encode_observation(self.world, self.cfg)

    def env_step(self, action: Sequence[int]) -> StepResult:
        if self.terminated or self.world is None:
            raise PhysicsFault("env_step on a terminated episode; reset first")
        inp = decode_action(action)
        self.world = step(self.world, inp, self.cfg)
        self.frames += 1
        if self.world.car_ball_contact:
            self.touched = True
            self.goal_bound = project_crosses_goal_mouth(
                self.world.ball, self.cfg, self.goal_sign, PROJECTION_FRAMES
            )
        reward, outcome = self._outcome()
        if outcome != OUTCOME_NONE:
            self.terminated = True
        obs = encode_observation(self.world, self.cfg)
        return StepResult(obs, reward, self.terminated, outcome)

    def _outcome(self) -> tuple[float, str]:
        raise NotImplementedError

    @property
    def time(self) -> float:
        return self.frames * DT


class GoalieEnv(_ShotEnv):
    """Defend the -y goal: +1 for a save, 0 for a concession or timeout."""

    goal_sign = -1.0

    def _outcome(self) -> tuple[float, str]:
        assert self.world is not None
        if self.world.ball_in_goal_neg:
            return 0.0, OUTCOME_GOAL
        if self.touched and not self.goal_bound:
            return 1.0, OUTCOME_SAVE
        if self.frames >= self.max_frames:
            return 0.0, OUTCOME_TIMEOUT
        return 0.0, OUTCOME_NONE


class StrikerEnv(_ShotEnv):
    """Attack the +y goal: +1 for a goal, 0 for a timeout."""

    goal_sign = 1.0

    def _outcome(self) -> tuple[float, str]:
        assert self.world is not None
        if self.world.ball_in_goal_pos:
            return 1.0, OUTCOME_GOAL
        if self.frames >= self.max_frames:
            return 0.0, OUTCOME_TIMEOUT
        return 0.0, OUTCOME_NONE


def make_env(kind: str, cfg: PhysicsConfig, max_frames: int = EPISODE_FRAMES) -> _ShotEnv:
    if kind == "goalie":
        return GoalieEnv(cfg, max_frames)
    if kind == "striker":
        return StrikerEnv(cfg, max_frames)
    raise PhysicsFault(f"unknown environment kind {kind!r}")

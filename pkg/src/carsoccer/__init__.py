"""Deterministic car-soccer simulation with training and evaluation tools.

A fixed-step (120 Hz) rigid-body recreation of car-ball gameplay: driving,
jumping, dodging, aerial control, and ball bounces inside a walled arena with
goal openings. On top of the simulation sit two shot-scenario environments
(goalie, striker), a multi-discrete-action policy-gradient trainer written in
plain numpy, and a scripted-maneuver tracing harness for comparing runs
against reference trajectories.

Everything is bit-deterministic for a given seed: the simulation is pure
float64 arithmetic with a fixed operation order, and training keeps per-worker
RNG streams so threaded and sequential collection produce identical batches.
"""

from .arena import PhysicsFault
from .ball import BallState
from .car import CarState, ControllerInput
from .config import ConfigError, PhysicsConfig, config_from_dict, default_config, load_config
from .env import (
    ACTION_CARDINALITIES,
    EPISODE_FRAMES,
    OBSERVATION_SIZE,
    GoalieEnv,
    StepResult,
    StrikerEnv,
    decode_action,
    encode_observation,
    make_env,
)
from .maneuvers import ManeuverScript, builtin_scripts, run_script, script_by_name
from .net import PolicyValueNet, load_checkpoint, save_checkpoint
from .ppo import (
    AdamW,
    LossBreakdown,
    PpoConfig,
    UpdateFault,
    gae_advantages,
    greedy_actions,
    joint_entropy,
    joint_logprob,
    ppo_loss_and_grads,
    ppo_update,
    sample_actions,
)
from .shots import ShotRanges, ShotSample, ShotSet, load_shot_set, sample_shot_set, write_shot_set
from .sim import resting_height, spawn_car, step
from .state import WorldState, make_world
from .stats import IqmCi, evaluate, interquartile_mean, iqm_ci
from .trace import ErrorStats, Trace, TraceRecorder, error_stats, load_trace, resample, write_trace
from .train import Trainer, Worker, latest_checkpoint
from .vec import Quat, Vec3

__version__ = "0.1.0"

__all__ = [
    "ACTION_CARDINALITIES",
    "AdamW",
    "BallState",
    "CarState",
    "ConfigError",
    "ControllerInput",
    "EPISODE_FRAMES",
    "ErrorStats",
    "GoalieEnv",
    "IqmCi",
    "LossBreakdown",
    "ManeuverScript",
    "OBSERVATION_SIZE",
    "PhysicsConfig",
    "PhysicsFault",
    "PolicyValueNet",
    "PpoConfig",
    "Quat",
    "ShotRanges",
    "ShotSample",
    "ShotSet",
    "StepResult",
    "StrikerEnv",
    "Trace",
    "TraceRecorder",
    "Trainer",
    "UpdateFault",
    "Vec3",
    "Worker",
    "WorldState",
    "builtin_scripts",
    "config_from_dict",
    "decode_action",
    "default_config",
    "encode_observation",
    "error_stats",
    "evaluate",
    "gae_advantages",
    "greedy_actions",
    "interquartile_mean",
    "iqm_ci",
    "joint_entropy",
    "joint_logprob",
    "latest_checkpoint",
    "load_checkpoint",
    "load_config",
    "load_shot_set",
    "load_trace",
    "make_env",
    "make_world",
    "ppo_loss_and_grads",
    "ppo_update",
    "resample",
    "resting_height",
    "run_script",
    "sample_actions",
    "sample_shot_set",
    "save_checkpoint",
    "script_by_name",
    "spawn_car",
    "step",
    "write_shot_set",
    "write_trace",
]

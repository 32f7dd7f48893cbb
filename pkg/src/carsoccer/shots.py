"""Shot sampling for the goalie and striker tasks, with a CSV round trip.

A ShotSample is everything an episode reset needs: the ball's initial state
plus the car's spawn pose and boost. Goalie samples are rejection-sampled
until the ball, simulated alone, would cross the defended goal mouth, so a
passive goalie always concedes. Striker samples drop a slow ball near the
attacked goal moving parallel to the goal plane, with the car spawned a few
thousand uu back, roughly facing the goal.

The CSV artifact carries a `goal_bound` oracle column per row (whether the
ball-only projection crosses the relevant goal mouth) so shot sets can be
audited without re-simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ball import project_crosses_goal_mouth
from .config import ConfigError, PhysicsConfig
from .sim import resting_height
from .state import BallState
from .vec import Vec3

GOALIE_KIND = "goalie"
STRIKER_KIND = "striker"

# car spawn offset in front of the defended goal line, uu
GOAL_LINE_OFFSET = 100.0

# ballistic lookahead for the goal-bound test, frames (10 s)
PROJECTION_FRAMES = 1200

_CSV_HEADER = (
    "bpx,bpy,bpz,bvx,bvy,bvz,bwx,bwy,bwz,cpx,cpy,cpz,cyaw,cboost,goal_bound"
)


class ShotSample(NamedTuple):
    ball_position: Vec3
    ball_velocity: Vec3
    ball_angular_velocity: Vec3
    car_position: Vec3
    car_yaw: float  # rad
    car_boost: float  # [0, 100]


@dataclass(frozen=True)
class ShotRanges:
    """Uniform sampling ranges, all (low, high) pairs."""

    # goalie: ball origin around midfield, aimed at the defended goal mouth
    goalie_origin_x: tuple[float, float] = (-2500.0, 2500.0)
    goalie_origin_y: tuple[float, float] = (-1000.0, 2500.0)
    goalie_origin_z: tuple[float, float] = (100.0, 800.0)
    goalie_speed: tuple[float, float] = (1000.0, 2300.0)
    # striker: slow ball near the attacked goal, moving parallel to its plane
    striker_ball_x: tuple[float, float] = (-2500.0, 2500.0)
    striker_ball_depth: tuple[float, float] = (0.0, 1500.0)  # from goal line
    striker_ball_z: tuple[float, float] = (100.0, 600.0)
    striker_speed: tuple[float, float] = (300.0, 900.0)
    striker_car_distance: tuple[float, float] = (2500.0, 4000.0)
    striker_car_angle: tuple[float, float] = (-0.7, 0.7)  # rad off goal axis
    striker_yaw_jitter: tuple[float, float] = (-math.pi / 6, math.pi / 6)
    boost: tuple[float, float] = (100.0, 100.0)

    def validate(self) -> None:
        for name, (lo, hi) in self.__dict__.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ConfigError(f"shot range {name} must satisfy low <= high")


def shot_ranges_from_dict(data: dict) -> ShotRanges:
    """Build ShotRanges from a parsed TOML table laid over the defaults."""
    known = {f.name for f in ShotRanges.__dataclass_fields__.values()}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown shots config keys {sorted(unknown)}")
    kwargs: dict = {}
    for name, value in data.items():
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        ):
            raise ConfigError(f"shots.{name}: expected a two-number array [low, high]")
        kwargs[name] = (float(value[0]), float(value[1]))
    ranges = ShotRanges(**kwargs)
    ranges.validate()
    return ranges


class ShotSet(NamedTuple):
    samples: tuple[ShotSample, ...]
    seed: int
    kind: str  # GOALIE_KIND or STRIKER_KIND
    goal_bound: tuple[bool, ...]  # projection oracle per sample


def _uniform(rng: np.random.Generator, lo_hi: tuple[float, float]) -> float:
    lo, hi = lo_hi
    return lo if lo == hi else float(rng.uniform(lo, hi))


def goalie_spawn(cfg: PhysicsConfig) -> tuple[Vec3, float]:
    """(position, yaw) of the goalie: center of the defended goal, facing play."""
    y = -cfg.arena.half_extent_y + GOAL_LINE_OFFSET
    return Vec3(0.0, y, resting_height(cfg)), math.pi / 2.0


def _sample_goalie(
    rng: np.random.Generator, ranges: ShotRanges, cfg: PhysicsConfig
) -> ShotSample | None:
    """One goalie candidate; None when its projection misses the goal mouth."""
    arena = cfg.arena
    origin = Vec3(
        _uniform(rng, ranges.goalie_origin_x),
        _uniform(rng, ranges.goalie_origin_y),
        _uniform(rng, ranges.goalie_origin_z),
    )
    # aim point inside the defended (-y) goal mouth, ball radius kept clear
    margin = cfg.ball_radius
    aim = Vec3(
        float(rng.uniform(-arena.goal_half_width + margin, arena.goal_half_width - margin)),
        -arena.half_extent_y,
        float(rng.uniform(margin, arena.goal_height - margin)),
    )
    speed = _uniform(rng, ranges.goalie_speed)
    velocity = (aim - origin).normalized().scale(speed)
    ball = BallState(position=origin, velocity=velocity)
    if not project_crosses_goal_mouth(ball, cfg, -1.0, PROJECTION_FRAMES):
        return None
    boost = _uniform(rng, ranges.boost)
    car_position, car_yaw = goalie_spawn(cfg)
    return ShotSample(origin, velocity, Vec3(0.0, 0.0, 0.0), car_position, car_yaw, boost)


def _sample_striker(
    rng: np.random.Generator, ranges: ShotRanges, cfg: PhysicsConfig
) -> ShotSample:
    """One striker sample: ball crossing in front of the attacked (+y) goal."""
    arena = cfg.arena
    ball_position = Vec3(
        _uniform(rng, ranges.striker_ball_x),
        arena.half_extent_y - _uniform(rng, ranges.striker_ball_depth),
        _uniform(rng, ranges.striker_ball_z),
    )
    speed = _uniform(rng, ranges.striker_speed)
    direction = 1.0 if rng.uniform(0.0, 1.0) < 0.5 else -1.0
    ball_velocity = Vec3(direction * speed, 0.0, 0.0)

    distance = _uniform(rng, ranges.striker_car_distance)
    angle = _uniform(rng, ranges.striker_car_angle)
    goal_center = Vec3(0.0, arena.half_extent_y, 0.0)
    car_position = Vec3(
        goal_center.x + distance * math.sin(angle),
        goal_center.y - distance * math.cos(angle),
        resting_height(cfg),
    )
    yaw = math.atan2(goal_center.y - car_position.y, goal_center.x - car_position.x)
    yaw += _uniform(rng, ranges.striker_yaw_jitter)
    boost = _uniform(rng, ranges.boost)
    return ShotSample(
        ball_position, ball_velocity, Vec3(0.0, 0.0, 0.0), car_position, yaw, boost
    )


_shot_cache: dict[tuple, ShotSet] = {}


def sample_shot_set(
    seed: int,
    kind: str,
    cfg: PhysicsConfig,
    ranges: ShotRanges | None = None,
    n: int = 1000,
) -> ShotSet:
    """Draw `n` samples (canonical sets use the default 1000), deterministically.

    Goalie candidates failing the goal-bound projection are resampled; an
    acceptance rate below 1% aborts, since it means the ranges are broken.
    Results are memoized per (seed, kind, ranges, n, config identity).
    """
    if kind not in (GOALIE_KIND, STRIKER_KIND):
        raise ConfigError(f"unknown shot kind {kind!r}")
    if n <= 0:
        raise ConfigError("shot set size must be positive")
    ranges = ranges if ranges is not None else ShotRanges()
    key = (seed, kind, ranges, n, id(cfg))
    cached = _shot_cache.get(key)
    if cached is not None:
        return cached
    ranges.validate()
    rng = np.random.default_rng(seed)
    samples: list[ShotSample] = []
    flags: list[bool] = []
    attempts = 0
    while len(samples) < n:
        attempts += 1
        if attempts > 100 * n:
            raise ConfigError(
                f"{kind} shot ranges rejected >99% of candidates "
                f"({len(samples)}/{attempts} accepted)"
            )
        if kind == GOALIE_KIND:
            sample = _sample_goalie(rng, ranges, cfg)
            if sample is None:
                continue
            flags.append(True)  # goal-bound by construction
        else:
            sample = _sample_striker(rng, ranges, cfg)
            ball = BallState(position=sample.ball_position, velocity=sample.ball_velocity)
            flags.append(project_crosses_goal_mouth(ball, cfg, 1.0, PROJECTION_FRAMES))
        samples.append(sample)
    shot_set = ShotSet(tuple(samples), seed, kind, tuple(flags))
    if len(_shot_cache) > 32:
        _shot_cache.clear()
    _shot_cache[key] = shot_set
    return shot_set


# --- CSV round trip ----------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_shot_set(path: str, shot_set: ShotSet) -> None:
    """One metadata comment line, the fixed header, one row per sample."""
    lines = [f"# kind={shot_set.kind} seed={shot_set.seed}", _CSV_HEADER]
    for sample, bound in zip(shot_set.samples, shot_set.goal_bound):
        fields = [
            *sample.ball_position,
            *sample.ball_velocity,
            *sample.ball_angular_velocity,
            *sample.car_position,
            sample.car_yaw,
            sample.car_boost,
        ]
        lines.append(",".join(_fmt(x) for x in fields) + f",{int(bound)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_shot_set(path: str) -> ShotSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if len(lines) < 2 or not lines[0].startswith("# kind="):
        raise ConfigError(f"{path}: not a shot set file")
    meta = dict(part.split("=", 1) for part in lines[0][2:].split())
    kind = meta.get("kind", "")
    if kind not in (GOALIE_KIND, STRIKER_KIND):
        raise ConfigError(f"{path}: unknown shot kind {kind!r}")
    seed = int(meta.get("seed", "0"))
    if lines[1] != _CSV_HEADER:
        raise ConfigError(f"{path}: unexpected header")
    samples: list[ShotSample] = []
    flags: list[bool] = []
    for line in lines[2:]:
        parts = line.split(",")
        if len(parts) != 15:
            raise ConfigError(f"{path}: bad row with {len(parts)} fields")
        vals = [float(p) for p in parts[:14]]
        samples.append(
            ShotSample(
                Vec3(vals[0], vals[1], vals[2]),
                Vec3(vals[3], vals[4], vals[5]),
                Vec3(vals[6], vals[7], vals[8]),
                Vec3(vals[9], vals[10], vals[11]),
                vals[12],
                vals[13],
            )
        )
        flags.append(parts[14] == "1")
    return ShotSet(tuple(samples), seed, kind, tuple(flags))

"""Frame-indexed state traces: CSV round trip, resampling, and error stats.

A trace holds one row per recorded frame: car pose (position + unit
quaternion), car velocities, ball state, boost, and a 4-bit wheel-contact
mask. The CSV layout is fixed (header below, 9-significant-digit decimals) so
re-runs of a deterministic script produce byte-identical files.

Resampling maps a trace onto arbitrary timestamps inside its span: linear
interpolation for vectors and boost, spherical linear interpolation for the
quaternion, previous-sample values for the contact mask. Timestamps at shared
knots reproduce the original rows exactly; timestamps outside the span fault.

error_stats(a, b) resamples b onto a's timeline and reports per-axis absolute
error mean/std/max plus the same for the Euclidean distance, separately for
the car and ball positions. Identical traces give all zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .arena import PhysicsFault
from .config import DT
from .state import WorldState
from .vec import Quat, slerp

TRACE_HEADER = (
    "frame,t,cpx,cpy,cpz,cqw,cqx,cqy,cqz,cvx,cvy,cvz,cwx,cwy,cwz,"
    "bpx,bpy,bpz,bvx,bvy,bvz,bwx,bwy,bwz,boost,contacts"
)
_NUM_COLS = 26


@dataclass
class Trace:
    frames: np.ndarray  # (N,) int
    times: np.ndarray  # (N,) seconds
    car_position: np.ndarray  # (N, 3)
    car_rotation: np.ndarray  # (N, 4) unit quaternions, w first
    car_velocity: np.ndarray  # (N, 3)
    car_angular_velocity: np.ndarray  # (N, 3)
    ball_position: np.ndarray  # (N, 3)
    ball_velocity: np.ndarray  # (N, 3)
    ball_angular_velocity: np.ndarray  # (N, 3)
    boost: np.ndarray  # (N,)
    contacts: np.ndarray  # (N,) int, bit i set = wheel i in contact
    fault_frame: int | None = None  # set when the producing run faulted

    def __len__(self) -> int:
        return len(self.frames)


class TraceRecorder:
    """Accumulates world snapshots row by row."""

    def __init__(self) -> None:
        self.rows: list[list[float]] = []

    def record(self, world: WorldState) -> None:
        car = world.car
        ball = world.ball
        mask = sum(1 << i for i, w in enumerate(car.wheels) if w.in_contact)
        self.rows.append(
            [
                world.frame,
                world.frame * DT,
                *car.position,
                *car.rotation,
                *car.velocity,
                *car.angular_velocity,
                *ball.position,
                *ball.velocity,
                *ball.angular_velocity,
                car.boost,
                mask,
            ]
        )

    def finish(self, fault_frame: int | None = None) -> Trace:
        data = np.asarray(self.rows, dtype=np.float64).reshape(-1, _NUM_COLS)
        return _trace_from_columns(data, fault_frame)


def _trace_from_columns(data: np.ndarray, fault_frame: int | None = None) -> Trace:
    return Trace(
        frames=data[:, 0].astype(np.int64),
        times=data[:, 1],
        car_position=data[:, 2:5],
        car_rotation=data[:, 5:9],
        car_velocity=data[:, 9:12],
        car_angular_velocity=data[:, 12:15],
        ball_position=data[:, 15:18],
        ball_velocity=data[:, 18:21],
        ball_angular_velocity=data[:, 21:24],
        boost=data[:, 24],
        contacts=data[:, 25].astype(np.int64),
        fault_frame=fault_frame,
    )


def write_trace(path: str, trace: Trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(TRACE_HEADER + "\n")
        for i in range(len(trace)):
            vals = [
                str(int(trace.frames[i])),
                f"{trace.times[i]:.9g}",
                *(f"{x:.9g}" for x in trace.car_position[i]),
                *(f"{x:.9g}" for x in trace.car_rotation[i]),
                *(f"{x:.9g}" for x in trace.car_velocity[i]),
                *(f"{x:.9g}" for x in trace.car_angular_velocity[i]),
                *(f"{x:.9g}" for x in trace.ball_position[i]),
                *(f"{x:.9g}" for x in trace.ball_velocity[i]),
                *(f"{x:.9g}" for x in trace.ball_angular_velocity[i]),
                f"{trace.boost[i]:.9g}",
                str(int(trace.contacts[i])),
            ]
            fh.write(",".join(vals) + "\n")


def load_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise PhysicsFault(f"{path}: unexpected trace header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2, dtype=np.float64)
    if data.size == 0:
        data = data.reshape(0, _NUM_COLS)
    if data.shape[1] != _NUM_COLS:
        raise PhysicsFault(f"{path}: expected {_NUM_COLS} columns, found {data.shape[1]}")
    return _trace_from_columns(data)


# --- resampling ----------------------------------------------------------------


def resample(trace: Trace, times: np.ndarray) -> Trace:
    """Trace values at `times`: linear vectors, slerped rotation, held contacts."""
    times = np.asarray(times, dtype=np.float64)
    if len(trace) == 0:
        raise PhysicsFault("cannot resample an empty trace")
    t = trace.times
    if times.size and (times.min() < t[0] or times.max() > t[-1]):
        raise PhysicsFault(
            f"resample times [{times.min():.6g}, {times.max():.6g}] outside "
            f"trace span [{t[0]:.6g}, {t[-1]:.6g}]"
        )

    def lerp_cols(cols: np.ndarray) -> np.ndarray:
        return np.stack([np.interp(times, t, cols[:, k]) for k in range(cols.shape[1])], axis=1)

    # previous-knot index for held columns and slerp segments
    left = np.clip(np.searchsorted(t, times, side="right") - 1, 0, len(t) - 1)
    rot = np.empty((len(times), 4), dtype=np.float64)
    for i, tt in enumerate(times):
        j = min(int(left[i]), len(t) - 2) if len(t) > 1 else 0
        if len(t) == 1 or tt <= t[j]:
            rot[i] = trace.car_rotation[j]
            continue
        u = (tt - t[j]) / (t[j + 1] - t[j])
        if u == 0.0:  # shared timestamps reproduce rows exactly
            rot[i] = trace.car_rotation[j]
        elif u == 1.0:
            rot[i] = trace.car_rotation[j + 1]
        else:
            qa = Quat(*trace.car_rotation[j])
            qb = Quat(*trace.car_rotation[j + 1])
            rot[i] = slerp(qa, qb, u)
    return Trace(
        frames=trace.frames[left],
        times=times,
        car_position=lerp_cols(trace.car_position),
        car_rotation=rot,
        car_velocity=lerp_cols(trace.car_velocity),
        car_angular_velocity=lerp_cols(trace.car_angular_velocity),
        ball_position=lerp_cols(trace.ball_position),
        ball_velocity=lerp_cols(trace.ball_velocity),
        ball_angular_velocity=lerp_cols(trace.ball_angular_velocity),
        boost=np.interp(times, t, trace.boost),
        contacts=trace.contacts[left],
    )


# --- error statistics ------------------------------------------------------------


class Stat(NamedTuple):
    mean: float
    std: float
    max: float


class ChannelErrors(NamedTuple):
    x: Stat
    y: Stat
    z: Stat
    euclid: Stat


class ErrorStats(NamedTuple):
    car: ChannelErrors
    ball: ChannelErrors


def _channel_errors(a: np.ndarray, b: np.ndarray) -> ChannelErrors:
    diff = np.abs(a - b)
    dist = np.sqrt(((a - b) ** 2).sum(axis=1))
    stats = [Stat(float(diff[:, k].mean()), float(diff[:, k].std()), float(diff[:, k].max())) for k in range(3)]
    stats.append(Stat(float(dist.mean()), float(dist.std()), float(dist.max())))
    return ChannelErrors(*stats)


def error_stats(a: Trace, b: Trace) -> ErrorStats:
    """Position error of b against a, with b resampled onto a's timeline."""
    rb = resample(b, a.times)
    return ErrorStats(
        car=_channel_errors(a.car_position, rb.car_position),
        ball=_channel_errors(a.ball_position, rb.ball_position),
    )

"""Physics configuration: defaults, TOML loading, and validation.

All tunables of the simulation live in one frozen `PhysicsConfig`. Defaults
reproduce the reference arcade model; a TOML file can override any subset.
Unknown keys and invariant violations raise `ConfigError` rather than being
silently ignored, since a typo'd key would otherwise change nothing and a
training run would quietly use defaults.

Units: uu (Unreal units) for length, seconds for time, radians for angles.
Sign convention: magnitudes are stored positive, except damping and drag
coefficients which are stored negative (they oppose motion by sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import toml

from .vec import Vec3

# Fixed integration step. The frame counter is authoritative; wall time is
# always frame / 120.
DT = 1.0 / 120.0

Table = tuple[tuple[float, float], ...]


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values, or violated invariants."""


def interp_table(table: Table, x: float) -> float:
    """Piecewise-linear lookup, clamped to the first/last table value."""
    if x <= table[0][0]:
        return table[0][1]
    if x >= table[-1][0]:
        return table[-1][1]
    for i in range(len(table) - 1):
        x0, y0 = table[i]
        x1, y1 = table[i + 1]
        if x <= x1:
            return y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    return table[-1][1]


@dataclass(frozen=True)
class AxleParams:
    """Spring/damper constants for one axle (accelerations per unit, not forces)."""

    stiffness: float  # uu/s^2 per uu of compression
    damper: float  # uu/s^2 per uu/s of compression rate


@dataclass(frozen=True)
class SuspensionParams:
    front: AxleParams = AxleParams(stiffness=163.9, damper=30.0)
    back: AxleParams = AxleParams(stiffness=275.4, damper=30.0)
    max_compress: float = 3.0  # uu, force-producing zone
    max_extend: float = 12.0  # uu, contact-only zone below rest


@dataclass(frozen=True)
class WheelSpec:
    """A wheel's rest center in the car frame plus its radius and axle."""

    local_position: Vec3
    radius: float
    axle: str  # "front" or "back"


@dataclass(frozen=True)
class ArenaSpec:
    """Flat-walled box arena with one goal box recessed into each y end wall."""

    half_extent_x: float = 4096.0
    half_extent_y: float = 5120.0
    ceiling_height: float = 2044.0
    goal_half_width: float = 892.865
    goal_height: float = 642.775
    goal_depth: float = 880.0


# Wheel rest centers put zero compression exactly at body height 17 uu over
# flat ground (local z = radius - 17); equilibrium settles ~0.74 uu lower.
_DEFAULT_WHEELS = (
    WheelSpec(Vec3(51.25, 25.9, -4.5), 12.5, "front"),
    WheelSpec(Vec3(51.25, -25.9, -4.5), 12.5, "front"),
    WheelSpec(Vec3(-33.8, 29.5, -2.0), 15.0, "back"),
    WheelSpec(Vec3(-33.8, -29.5, -2.0), 15.0, "back"),
)


@dataclass(frozen=True)
class PhysicsConfig:
    # integration
    dt: float = DT  # always 1/120; present for clarity
    gravity: float = 650.0  # uu/s^2, applied along -z

    # masses (only the ratio matters for the car-ball impulse)
    car_mass: float = 180.0
    ball_mass: float = 30.0

    # kinematic caps
    max_car_speed: float = 2300.0  # uu/s
    max_car_angular: float = 5.6  # rad/s (5.5 in some ports; 7.3 governs dodges)
    max_dodge_angular: float = 7.3  # rad/s while a dodge is active

    # ground drive
    throttle_curve: Table = ((0.0, 1600.0), (1400.0, 160.0), (1410.0, 0.0))
    brake_decel: float = 3500.0  # uu/s^2, throttle opposing motion
    coast_decel: float = 525.0  # uu/s^2, zero throttle
    steer_curvature: Table = (
        (0.0, 0.0069),
        (500.0, 0.00398),
        (1000.0, 0.00235),
        (1500.0, 0.001375),
        (1750.0, 0.0011),
        (2300.0, 0.00088),
    )  # 1/uu vs speed; yaw rate = steer * speed * curvature(speed)
    lateral_grip: float = 40.0  # 1/s, sideways slip damping
    drift_grip_factor: float = 0.5  # grip multiplier while drifting

    # boost
    boost_accel: float = 991.666  # uu/s^2 along car forward
    boost_per_frame: float = 0.27  # tank units drained per frame held
    boost_max: float = 100.0

    # jumps and dodges
    jump_impulse: float = 292.0  # uu/s along car-up on the press frame
    jump_hold_accel: float = 1460.0  # uu/s^2 while the button stays held
    jump_hold_max_time: float = 0.2  # s of hold acceleration
    jump_hold_min_frames: int = 3  # hold frames granted even for a tap
    dodge_window: float = 1.25  # s after the first jump for a second press
    dodge_duration: float = 0.65  # s of dodge state
    dodge_damp_delay: float = 0.15  # s before vertical damping kicks in
    dodge_damp_factor: float = 0.65  # v_z multiplier per frame after the delay
    dodge_torque: float = 300.0  # rad/s^2 spinning up toward the dodge cap

    # air control
    air_throttle_fwd: float = 66.667  # uu/s^2 at full forward throttle
    air_throttle_rev: float = 33.334  # uu/s^2 at full reverse throttle
    air_torque: tuple[float, float, float] = (36.07, 12.46, 9.11)  # roll, pitch, yaw rad/s^2
    air_damping: tuple[float, float, float] = (-4.75, -2.85, -1.886)  # roll, pitch, yaw 1/s

    # surface stabilization
    downforce: float = 325.0  # uu/s^2 car-down, 1-3 wheels on ground
    sticky_accel: float = 500.0  # uu/s^2 car-down, >=2 wheels on wall/ceiling
    stab_torque: float = 50.0  # rad/s^2 cap aligning car-up to the normal
    stab_damping: float = 8.0  # 1/s on angular velocity tangent to the normal
    drag: float = -525.0  # uu/s^2 rolling on wheels, zero throttle
    roof_drag: float = -250.0  # uu/s^2 sliding on the roof

    # suspension and body
    suspension: SuspensionParams = field(default_factory=SuspensionParams)
    wheels: tuple[WheelSpec, ...] = _DEFAULT_WHEELS
    hitbox_dims: Vec3 = Vec3(118.01, 84.2, 36.16)  # full extents
    hitbox_offset: Vec3 = Vec3(13.88, 0.0, 20.75)  # hitbox center in car frame

    # ball
    ball_radius: float = 93.15  # uu, contact detection
    ball_bounce_radius: float = 91.25  # uu, used inside the bounce math
    bounce_restitution: float = 0.6
    bounce_friction: float = 0.285
    bounce_slip_gain: float = 2.0
    bounce_spin: float = -1.5  # spin-transfer scalar; negative = topspin from friction
    ball_max_speed: float = 6000.0  # uu/s
    ball_max_angular: float = 6.0  # rad/s

    # extra impulse added on top of the rigid car-ball response
    psyonix_z_scale: float = 0.35
    psyonix_scale_table: Table = (
        (0.0, 0.65),
        (500.0, 0.65),
        (2300.0, 0.55),
        (4600.0, 0.30),
    )  # impulse factor vs relative speed, linearly interpolated

    arena: ArenaSpec = field(default_factory=ArenaSpec)


def default_config() -> PhysicsConfig:
    """The reference configuration; every field at its default."""
    cfg = PhysicsConfig()
    validate_config(cfg)
    return cfg


def _check_table(name: str, table: Table, *, nonneg_y: bool = True) -> None:
    if len(table) < 2:
        raise ConfigError(f"{name}: needs at least two points")
    xs = [p[0] for p in table]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ConfigError(f"{name}: x values must be strictly increasing")
    if nonneg_y and any(p[1] < 0.0 for p in table):
        raise ConfigError(f"{name}: y values must be nonnegative")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def validate_config(cfg: PhysicsConfig) -> None:
    """Raise ConfigError unless every invariant holds."""
    _require(cfg.dt == DT, f"dt must be exactly 1/120, got {cfg.dt!r}")
    pos = [
        ("gravity", cfg.gravity),
        ("car_mass", cfg.car_mass),
        ("ball_mass", cfg.ball_mass),
        ("max_car_speed", cfg.max_car_speed),
        ("max_car_angular", cfg.max_car_angular),
        ("max_dodge_angular", cfg.max_dodge_angular),
        ("brake_decel", cfg.brake_decel),
        ("coast_decel", cfg.coast_decel),
        ("lateral_grip", cfg.lateral_grip),
        ("boost_accel", cfg.boost_accel),
        ("boost_per_frame", cfg.boost_per_frame),
        ("boost_max", cfg.boost_max),
        ("jump_impulse", cfg.jump_impulse),
        ("jump_hold_accel", cfg.jump_hold_accel),
        ("jump_hold_max_time", cfg.jump_hold_max_time),
        ("dodge_window", cfg.dodge_window),
        ("dodge_duration", cfg.dodge_duration),
        ("dodge_damp_factor", cfg.dodge_damp_factor),
        ("dodge_torque", cfg.dodge_torque),
        ("air_throttle_fwd", cfg.air_throttle_fwd),
        ("air_throttle_rev", cfg.air_throttle_rev),
        ("downforce", cfg.downforce),
        ("sticky_accel", cfg.sticky_accel),
        ("stab_torque", cfg.stab_torque),
        ("ball_radius", cfg.ball_radius),
        ("ball_bounce_radius", cfg.ball_bounce_radius),
        ("ball_max_speed", cfg.ball_max_speed),
        ("ball_max_angular", cfg.ball_max_angular),
        ("bounce_slip_gain", cfg.bounce_slip_gain),
    ]
    for name, value in pos:
        _require(value > 0.0, f"{name} must be positive, got {value!r}")
    _require(cfg.jump_hold_min_frames >= 0, "jump_hold_min_frames must be >= 0")
    _require(0.0 <= cfg.dodge_damp_delay <= cfg.dodge_duration, "dodge_damp_delay out of range")
    _require(cfg.dodge_damp_factor <= 1.0, "dodge_damp_factor must be <= 1")
    _require(0.0 < cfg.drift_grip_factor <= 1.0, "drift_grip_factor must be in (0, 1]")
    _require(cfg.stab_damping >= 0.0, "stab_damping must be >= 0")
    _require(cfg.drag < 0.0, f"drag must be negative, got {cfg.drag!r}")
    _require(cfg.roof_drag < 0.0, f"roof_drag must be negative, got {cfg.roof_drag!r}")
    _require(all(t > 0.0 for t in cfg.air_torque), "air_torque entries must be positive")
    _require(all(c < 0.0 for c in cfg.air_damping), "air_damping entries must be negative")
    _require(
        cfg.max_dodge_angular >= cfg.max_car_angular,
        "max_dodge_angular must be >= max_car_angular",
    )
    _require(0.0 <= cfg.bounce_restitution <= 1.0, "bounce_restitution must be in [0, 1]")
    _require(cfg.bounce_friction >= 0.0, "bounce_friction must be >= 0")
    _require(
        cfg.ball_bounce_radius <= cfg.ball_radius,
        "ball_bounce_radius must not exceed ball_radius",
    )
    _check_table("throttle_curve", cfg.throttle_curve)
    _check_table("steer_curvature", cfg.steer_curvature)
    _check_table("psyonix_scale_table", cfg.psyonix_scale_table)

    sus = cfg.suspension
    for axle_name, axle in (("front", sus.front), ("back", sus.back)):
        _require(axle.stiffness > 0.0, f"suspension.{axle_name}.stiffness must be positive")
        _require(axle.damper >= 0.0, f"suspension.{axle_name}.damper must be >= 0")
    _require(sus.max_compress > 0.0, "suspension.max_compress must be positive")
    _require(sus.max_extend >= 0.0, "suspension.max_extend must be >= 0")

    _require(len(cfg.wheels) == 4, "exactly four wheels are required")
    for i, wheel in enumerate(cfg.wheels):
        _require(wheel.radius > 0.0, f"wheels[{i}].radius must be positive")
        _require(wheel.axle in ("front", "back"), f"wheels[{i}].axle must be front or back")
    _require(all(d > 0.0 for d in cfg.hitbox_dims), "hitbox_dims must be positive")

    arena = cfg.arena
    _require(arena.half_extent_x > 0.0, "arena.half_extent_x must be positive")
    _require(arena.half_extent_y > 0.0, "arena.half_extent_y must be positive")
    _require(arena.ceiling_height > 0.0, "arena.ceiling_height must be positive")
    _require(arena.goal_depth > 0.0, "arena.goal_depth must be positive")
    _require(
        0.0 < arena.goal_half_width < arena.half_extent_x,
        "arena.goal_half_width must be positive and fit inside the end wall",
    )
    _require(
        0.0 < arena.goal_height < arena.ceiling_height,
        "arena.goal_height must be positive and below the ceiling",
    )
    _require(
        cfg.ball_radius < arena.goal_half_width and cfg.ball_radius < arena.goal_height,
        "ball must fit through the goal mouth",
    )

    finite_leaves: list[tuple[str, float]] = []
    for name, value in pos:
        finite_leaves.append((name, value))
    finite_leaves += [("drag", cfg.drag), ("roof_drag", cfg.roof_drag)]
    for name, value in finite_leaves:
        _require(math.isfinite(value), f"{name} must be finite")


# --- TOML loading -----------------------------------------------------------

_SCALAR_FIELDS = {
    f.name
    for f in fields(PhysicsConfig)
    if f.name
    not in (
        "throttle_curve",
        "steer_curvature",
        "psyonix_scale_table",
        "air_torque",
        "air_damping",
        "hitbox_dims",
        "hitbox_offset",
        "suspension",
        "wheels",
        "arena",
    )
}
_TABLE_FIELDS = ("throttle_curve", "steer_curvature", "psyonix_scale_table")
_TRIPLE_FIELDS = ("air_torque", "air_damping", "hitbox_dims", "hitbox_offset")
_ARENA_FIELDS = {f.name for f in fields(ArenaSpec)}


def _as_float(name: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _parse_table(name: str, value: object) -> Table:
    if not isinstance(value, list):
        raise ConfigError(f"{name}: expected a list of [x, y] pairs")
    out = []
    for row in value:
        if not isinstance(row, list) or len(row) != 2:
            raise ConfigError(f"{name}: expected [x, y] pairs, got {row!r}")
        out.append((_as_float(name, row[0]), _as_float(name, row[1])))
    return tuple(out)


def _parse_triple(name: str, value: object) -> tuple[float, float, float]:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"{name}: expected a list of three numbers")
    return (_as_float(name, value[0]), _as_float(name, value[1]), _as_float(name, value[2]))


def _parse_axle(name: str, value: object, base: AxleParams) -> AxleParams:
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a table")
    unknown = set(value) - {"stiffness", "damper"}
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    return AxleParams(
        stiffness=_as_float(f"{name}.stiffness", value.get("stiffness", base.stiffness)),
        damper=_as_float(f"{name}.damper", value.get("damper", base.damper)),
    )


def _parse_suspension(value: object, base: SuspensionParams) -> SuspensionParams:
    if not isinstance(value, dict):
        raise ConfigError("suspension: expected a table")
    unknown = set(value) - {"front", "back", "max_compress", "max_extend"}
    if unknown:
        raise ConfigError(f"suspension: unknown keys {sorted(unknown)}")
    return SuspensionParams(
        front=_parse_axle("suspension.front", value.get("front", {}), base.front),
        back=_parse_axle("suspension.back", value.get("back", {}), base.back),
        max_compress=_as_float(
            "suspension.max_compress", value.get("max_compress", base.max_compress)
        ),
        max_extend=_as_float("suspension.max_extend", value.get("max_extend", base.max_extend)),
    )


def _parse_wheels(value: object) -> tuple[WheelSpec, ...]:
    if not isinstance(value, list):
        raise ConfigError("wheels: expected an array of tables")
    out = []
    for i, row in enumerate(value):
        if not isinstance(row, dict):
            raise ConfigError(f"wheels[{i}]: expected a table")
        unknown = set(row) - {"x", "y", "z", "radius", "axle"}
        if unknown:
            raise ConfigError(f"wheels[{i}]: unknown keys {sorted(unknown)}")
        for key in ("x", "y", "z", "radius", "axle"):
            if key not in row:
                raise ConfigError(f"wheels[{i}]: missing key {key!r}")
        axle = row["axle"]
        if axle not in ("front", "back"):
            raise ConfigError(f"wheels[{i}].axle must be 'front' or 'back'")
        out.append(
            WheelSpec(
                Vec3(
                    _as_float(f"wheels[{i}].x", row["x"]),
                    _as_float(f"wheels[{i}].y", row["y"]),
                    _as_float(f"wheels[{i}].z", row["z"]),
                ),
                _as_float(f"wheels[{i}].radius", row["radius"]),
                axle,
            )
        )
    return tuple(out)


def _parse_arena(value: object, base: ArenaSpec) -> ArenaSpec:
    if not isinstance(value, dict):
        raise ConfigError("arena: expected a table")
    unknown = set(value) - _ARENA_FIELDS
    if unknown:
        raise ConfigError(f"arena: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name in _ARENA_FIELDS:
        if name in value:
            kwargs[name] = _as_float(f"arena.{name}", value[name])
    return ArenaSpec(
        **{f.name: kwargs.get(f.name, getattr(base, f.name)) for f in fields(ArenaSpec)}
    )


def config_from_dict(data: dict, base: PhysicsConfig | None = None) -> PhysicsConfig:
    """Build a config from a parsed TOML dict laid over `base` (defaults)."""
    base = base if base is not None else PhysicsConfig()
    known = _SCALAR_FIELDS | set(_TABLE_FIELDS) | set(_TRIPLE_FIELDS)
    known |= {"suspension", "wheels", "arena"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    kwargs: dict[str, object] = {}
    for name in _SCALAR_FIELDS:
        if name in data:
            if name == "jump_hold_min_frames":
                value = data[name]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError("jump_hold_min_frames: expected an integer")
                kwargs[name] = value
            else:
                kwargs[name] = _as_float(name, data[name])
    for name in _TABLE_FIELDS:
        if name in data:
            kwargs[name] = _parse_table(name, data[name])
    for name in _TRIPLE_FIELDS:
        if name in data:
            triple = _parse_triple(name, data[name])
            if name in ("hitbox_dims", "hitbox_offset"):
                kwargs[name] = Vec3(*triple)
            else:
                kwargs[name] = triple
    if "suspension" in data:
        kwargs["suspension"] = _parse_suspension(data["suspension"], base.suspension)
    if "wheels" in data:
        kwargs["wheels"] = _parse_wheels(data["wheels"])
    if "arena" in data:
        kwargs["arena"] = _parse_arena(data["arena"], base.arena)

    cfg = PhysicsConfig(
        **{f.name: kwargs.get(f.name, getattr(base, f.name)) for f in fields(PhysicsConfig)}
    )
    validate_config(cfg)
    return cfg


def load_config(path: str) -> PhysicsConfig:
    """Load a TOML file over the defaults. Raises ConfigError on any problem."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = toml.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except toml.TomlDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path!r}: {exc}") from exc
    return config_from_dict(data)

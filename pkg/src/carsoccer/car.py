"""Car mechanics: ground drive, boost, jumps, dodges, air control, stabilization.

Every function here is a small pure-ish operation used by the world stepper;
impulse-style mechanics (jump press, dodge) write velocity directly, while
continuous effects return accelerations for the integrator to accumulate.

Conventions (identity rotation): forward +x, right +y, up +z. Positive yaw
rate turns the nose toward car-right, positive pitch rate noses down, so a
pitch input of +1 is the forward-flip direction.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .config import DT, AxleParams, PhysicsConfig, interp_table
from .state import CarState, ControllerInput, JumpPhase, WheelState
from .vec import ZERO3, Vec3, X_AXIS, Z_AXIS

# Dodge impulse model. Impulse magnitudes depend on the angle phi between the
# horizontal movement direction and the horizontal rotational-input direction:
#   v_forward_branch = 500                              (cos phi >= 0)
#   v_back_branch    = 533 * (1 + 1.5 * |v_fwd| / 2300) (cos phi < 0)
#   v_side           = 500 * (1 + 0.9 * |v_fwd| / 2300)
#   impulse = d_cf * cos(phi) * branch + d_cs * (1 - cos(phi)) * v_side
DODGE_FORWARD_IMPULSE = 500.0
DODGE_SIDE_BASE = 500.0
DODGE_SIDE_SPEED_GAIN = 0.9
DODGE_BACK_BASE = 533.0
DODGE_BACK_SPEED_GAIN = 1.5
DODGE_SPEED_REF = 2300.0

INPUT_DEADZONE = 0.01  # inputs below this are treated as released/zero
SLOW_DODGE_SPEED = 10.0  # uu/s; below this the movement direction degenerates
LANDING_MAX_RISE = 1.0  # uu/s along the surface normal still counts as landed


def clamp_unit(x: float) -> float:
    return -1.0 if x < -1.0 else (1.0 if x > 1.0 else x)


# --- ground drive -----------------------------------------------------------


def longitudinal_accel(v_forward: float, throttle: float, cfg: PhysicsConfig, dt: float = DT) -> float:
    """Signed accel along the surface-forward direction for a wheeled car.

    Throttle matching the motion direction follows the speed-accel curve
    (scaled by the throttle fraction); opposing throttle brakes at a constant
    rate; zero throttle coasts down without ever reversing within a frame.
    """
    if abs(throttle) < INPUT_DEADZONE:
        if v_forward == 0.0:
            return 0.0
        mag = min(cfg.coast_decel, abs(v_forward) / dt)
        return -mag if v_forward > 0.0 else mag
    if v_forward == 0.0 or (throttle > 0.0) == (v_forward > 0.0):
        return throttle * interp_table(cfg.throttle_curve, abs(v_forward))
    return -cfg.brake_decel if v_forward > 0.0 else cfg.brake_decel


def steer_yaw_rate(speed: float, steer: float, cfg: PhysicsConfig) -> float:
    """Kinematic yaw rate (rad/s) about the surface normal; speed >= 0."""
    return steer * speed * interp_table(cfg.steer_curvature, speed)


def lateral_friction_accel(v_lat: float, drifting: bool, cfg: PhysicsConfig, dt: float = DT) -> float:
    """Magnitude of the accel opposing sideways slip (never overshoots zero)."""
    grip = cfg.lateral_grip * (cfg.drift_grip_factor if drifting else 1.0)
    return min(grip * abs(v_lat), abs(v_lat) / dt)


def coast_drag_decel(speed: float, surface: str, cfg: PhysicsConfig, dt: float = DT) -> float:
    """Magnitude of rolling ('wheels') or roof-slide ('roof') drag decel."""
    mag = -cfg.drag if surface == "wheels" else -cfg.roof_drag
    return min(mag, abs(speed) / dt)


# --- boost ------------------------------------------------------------------


def boost_step(tank: float, held: bool, cfg: PhysicsConfig) -> tuple[float, float]:
    """(forward accel, new tank). Fires only while the tank is nonempty."""
    if not held or tank <= 0.0:
        return 0.0, tank
    return cfg.boost_accel, max(0.0, tank - cfg.boost_per_frame)


def add_boost(tank: float, amount: float, cfg: PhysicsConfig) -> float:
    """Refill, saturating at the tank capacity."""
    return min(cfg.boost_max, max(0.0, tank + amount))


# --- air control ------------------------------------------------------------


def air_rotation_inputs(inp: ControllerInput) -> tuple[float, float, float]:
    """(roll, pitch, yaw) commands; handbrake routes steer into roll when airborne."""
    roll = inp.roll + (inp.steer if inp.handbrake else 0.0)
    return clamp_unit(roll), clamp_unit(inp.pitch), clamp_unit(inp.yaw)


def air_control_alpha(
    omega_body: tuple[float, float, float],
    inputs: tuple[float, float, float],
    cfg: PhysicsConfig,
) -> tuple[float, float, float]:
    """Body-frame angular accel (roll, pitch, yaw), rad/s^2.

    Per axis: alpha = torque * u + damping * omega * (1 - |u|); damping only
    acts on the fraction of the axis not being commanded.
    """
    out = []
    for i in range(3):
        u = inputs[i]
        out.append(cfg.air_torque[i] * u + cfg.air_damping[i] * omega_body[i] * (1.0 - abs(u)))
    return (out[0], out[1], out[2])


def air_throttle_accel(throttle: float, cfg: PhysicsConfig) -> float:
    """Weak forward/reverse accel from throttle while airborne."""
    if throttle > INPUT_DEADZONE:
        return cfg.air_throttle_fwd * throttle
    if throttle < -INPUT_DEADZONE:
        return cfg.air_throttle_rev * throttle
    return 0.0


# --- suspension -------------------------------------------------------------


def suspension_accel(wheel: WheelState, axle: AxleParams) -> float:
    """uu/s^2 along car-up from one wheel. Zero in the extension zone: the
    wheel registers contact up to max_extend below rest but pulls nothing."""
    if not wheel.in_contact or wheel.compression <= 0.0:
        return 0.0
    return axle.stiffness * wheel.compression + axle.damper * max(wheel.compression_rate, 0.0)


# --- stabilization ----------------------------------------------------------


def stabilization_alpha(
    up: Vec3, forward: Vec3, omega: Vec3, normal: Vec3, cfg: PhysicsConfig
) -> Vec3:
    """Angular accel rotating car-up toward the surface normal, magnitude <= cap.

    up x normal has norm sin(theta), so the alignment torque fades smoothly
    near alignment; a small damping term on the angular velocity tangent to
    the normal stops the car from ringing around the aligned pose.
    """
    axis = up.cross(normal)
    if up.dot(normal) < -0.999:
        axis = forward  # upside down: any consistent horizontal axis rights the car
    alpha = axis.scale(cfg.stab_torque)
    omega_tangent = omega - normal.scale(omega.dot(normal))
    return alpha - omega_tangent.scale(cfg.stab_damping)


# --- jumps and dodges -------------------------------------------------------


class DodgeContext(NamedTuple):
    """Geometry of a dodge at trigger time, all in the horizontal plane."""

    d_m: Vec3  # movement direction (defined as d_i below SLOW_DODGE_SPEED)
    d_i: Vec3  # rotational-input direction, aligned to the car's axes
    cos_phi: float  # d_m . d_i
    v_forward: float  # magnitude of the car's forward speed, uu/s
    d_cf: Vec3  # car horizontal forward unit
    d_cs: Vec3  # car horizontal sideward unit toward the input side (may be zero)
    slow: bool  # horizontal speed below SLOW_DODGE_SPEED at trigger time


def _horizontal_car_axes(car: CarState) -> tuple[Vec3, Vec3]:
    """(forward, right) projected to the ground plane and normalized."""
    f = car.rotation.forward()
    f_h = Vec3(f.x, f.y, 0.0)
    if f_h.norm_sq() < 1e-12:
        u = car.rotation.up()
        f_h = Vec3(u.x, u.y, 0.0)
    f_h = f_h.normalized(fallback=X_AXIS)
    r_h = Vec3(-f_h.y, f_h.x, 0.0)
    return f_h, r_h


def dodge_context(car: CarState, inp: ControllerInput) -> DodgeContext | None:
    """Resolve the dodge geometry, or None when the input direction degenerates.

    Pitch +1 dodges forward; yaw steers the dodge sideways; a roll-only input
    counts as a sideward dodge toward the roll sign.
    """
    f_h, r_h = _horizontal_car_axes(car)
    fwd_in = inp.pitch if abs(inp.pitch) >= INPUT_DEADZONE else 0.0
    side_in = inp.yaw if abs(inp.yaw) >= INPUT_DEADZONE else 0.0
    if fwd_in == 0.0 and side_in == 0.0:
        side_in = inp.roll if abs(inp.roll) >= INPUT_DEADZONE else 0.0
    d_i = (f_h.scale(fwd_in) + r_h.scale(side_in))
    if d_i.norm_sq() < 1e-12:
        return None
    d_i = d_i.normalized()
    v_h = Vec3(car.velocity.x, car.velocity.y, 0.0)
    slow = v_h.norm() < SLOW_DODGE_SPEED
    d_m = d_i if slow else v_h.normalized()
    cos_phi = max(-1.0, min(1.0, d_m.dot(d_i)))
    v_forward = abs(car.velocity.dot(car.rotation.forward()))
    side_comp = d_i.dot(r_h)
    d_cs = r_h.scale(1.0 if side_comp > 0.0 else -1.0) if abs(side_comp) > 1e-9 else ZERO3
    return DodgeContext(d_m, d_i, cos_phi, v_forward, f_h, d_cs, slow)


def dodge_impulse(ctx: DodgeContext, cfg: PhysicsConfig) -> Vec3:
    """Horizontal velocity change applied at dodge start."""
    if ctx.slow:
        # movement direction degenerates: the forward branch fires along the
        # input direction itself
        return ctx.d_i.scale(DODGE_FORWARD_IMPULSE)
    ratio = ctx.v_forward / DODGE_SPEED_REF
    v_side = DODGE_SIDE_BASE * (1.0 + DODGE_SIDE_SPEED_GAIN * ratio)
    if ctx.cos_phi >= 0.0:
        branch = DODGE_FORWARD_IMPULSE
    else:
        branch = DODGE_BACK_BASE * (1.0 + DODGE_BACK_SPEED_GAIN * ratio)
    forward_term = ctx.d_cf.scale(ctx.cos_phi * branch)
    side_term = ctx.d_cs.scale((1.0 - ctx.cos_phi) * v_side)
    return forward_term + side_term


def maybe_land(car: CarState, contact_count: int, avg_normal: Vec3) -> None:
    """Reset the jump machine when the car settles onto its wheels.

    Requires three wheels so glancing single-wheel grazes do not refund the
    jump, and a non-separating normal velocity so the rising frames right
    after a jump (wheels still inside the extension zone) do not cancel it.
    """
    j = car.jump
    if j.phase in (JumpPhase.GROUNDED, JumpPhase.JUMP_HOLD):
        return
    if contact_count >= 3 and car.velocity.dot(avg_normal) <= LANDING_MAX_RISE:
        j.phase = JumpPhase.GROUNDED
        j.hold_time = 0.0
        j.hold_frames = 0
        j.hold_ended = False
        j.window_time = 0.0
        j.dodge_time = 0.0
        j.dodge_axis = ZERO3


def jump_dodge_step(car: CarState, inp: ControllerInput, cfg: PhysicsConfig, dt: float = DT) -> tuple[Vec3, Vec3]:
    """Advance the jump/dodge machine one frame.

    Applies impulse-style velocity changes (jump press, dodge trigger, dodge
    vertical damping) directly to the car and returns (accel, angular accel)
    for the continuous parts (hold acceleration, dodge spin-up torque).

    The press frame changes velocity by exactly +jump_impulse along car-up;
    hold acceleration starts the following frame and runs while the button
    stays held, up to jump_hold_max_time, with jump_hold_min_frames granted
    even for a single-frame tap. A second press inside the dodge window
    triggers a dodge when any rotational input is held, otherwise a second
    jump. Landing resets are handled by maybe_land, not here.
    """
    j = car.jump
    pressed = inp.jump and not j.jump_was_down
    held = inp.jump
    j.jump_was_down = inp.jump
    up = car.rotation.up()
    accel = ZERO3
    alpha = ZERO3
    phase = j.phase

    if phase == JumpPhase.GROUNDED:
        if pressed and car.any_wheel_contact():
            car.velocity = car.velocity + up.scale(cfg.jump_impulse)
            j.phase = JumpPhase.JUMP_HOLD
            j.hold_time = 0.0
            j.hold_frames = 0
            j.hold_ended = False
            j.window_time = 0.0
        return accel, alpha

    if phase == JumpPhase.JUMP_HOLD:
        if not held:
            j.hold_ended = True
        apply_hold = (j.hold_frames < cfg.jump_hold_min_frames) or (
            not j.hold_ended and j.hold_time < cfg.jump_hold_max_time - 1e-12
        )
        if apply_hold:
            accel = up.scale(cfg.jump_hold_accel)
            j.hold_time += dt
            j.hold_frames += 1
        done_min = j.hold_frames >= cfg.jump_hold_min_frames
        if done_min and (j.hold_ended or j.hold_time >= cfg.jump_hold_max_time - 1e-12):
            # the dodge/second-jump window is measured from the hold's end
            j.phase = JumpPhase.AIR_WINDOW
            j.window_time = 0.0
        return accel, alpha

    if phase == JumpPhase.AIR_WINDOW:
        j.window_time += dt
        if j.window_time > cfg.dodge_window + 1e-9:
            j.phase = JumpPhase.AIR_DONE
        elif pressed:
            # a context resolves only for rotational input past the deadzone;
            # otherwise the press is a second jump
            ctx = dodge_context(car, inp)
            if ctx is not None:
                car.velocity = car.velocity + dodge_impulse(ctx, cfg)
                j.phase = JumpPhase.DODGE
                j.dodge_time = 0.0
                j.dodge_axis = Z_AXIS.cross(ctx.d_i).normalized(fallback=ZERO3)
            else:
                car.velocity = car.velocity + up.scale(cfg.jump_impulse)
                j.phase = JumpPhase.AIR_DONE
        return accel, alpha

    if phase == JumpPhase.DODGE:
        j.dodge_time += dt
        if j.dodge_time >= cfg.dodge_duration - 1e-12:
            j.phase = JumpPhase.AIR_DONE
        else:
            if car.angular_velocity.dot(j.dodge_axis) < cfg.max_dodge_angular:
                alpha = j.dodge_axis.scale(cfg.dodge_torque)
            if j.dodge_time > cfg.dodge_damp_delay + 1e-12:
                v = car.velocity
                car.velocity = Vec3(v.x, v.y, v.z * cfg.dodge_damp_factor)
        return accel, alpha

    return accel, alpha  # AIR_DONE: wait for landing

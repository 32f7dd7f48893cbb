"""World stepper: fixed 120 Hz semi-implicit Euler for car, ball, and contacts.

Frame order inside one `step`:
  1. wheel raycasts and landing reset            (contacts at the old pose)
  2. control forces: boost, jump machine, drive or air control
  3. suspension springs (with body torque) and stabilization
  4. gravity; v += a dt; velocity clamps; p += v dt; rotation integration
  5. car-body arena resolution
  6. ball step (gravity, integration, arena bounces) and car-ball contact
  7. goal-plane flags

`step` never mutates its inputs: it copies the world and returns the copy,
so stepping the same (world, input, config) twice is bit-identical.
"""

from __future__ import annotations

import math

from .arena import (
    PhysicsFault,
    ball_in_goal,
    box_contacts,
    candidate_faces,
    in_aperture,
)
from .ball import ball_step, car_ball_impulse
from .car import (
    INPUT_DEADZONE,
    air_control_alpha,
    air_rotation_inputs,
    air_throttle_accel,
    boost_step,
    clamp_unit,
    coast_drag_decel,
    jump_dodge_step,
    lateral_friction_accel,
    longitudinal_accel,
    maybe_land,
    stabilization_alpha,
    steer_yaw_rate,
    suspension_accel,
)
from .config import DT, PhysicsConfig
from .state import BallState, CarState, ControllerInput, JumpPhase, WorldState, make_world
from .vec import ZERO3, Z_AXIS, Quat, Vec3


class _Derived:
    """Per-config precomputed quantities (inertia factors, wheel bindings)."""

    __slots__ = ("half_dims", "k_roll", "k_pitch", "wheel_axles")

    def __init__(self, cfg: PhysicsConfig) -> None:
        dx, dy, dz = cfg.hitbox_dims
        self.half_dims = Vec3(dx * 0.5, dy * 0.5, dz * 0.5)
        # box inertia per unit mass, uu^2
        self.k_roll = (dy * dy + dz * dz) / 12.0
        self.k_pitch = (dx * dx + dz * dz) / 12.0
        sus = cfg.suspension
        self.wheel_axles = tuple(
            sus.front if w.axle == "front" else sus.back for w in cfg.wheels
        )


_derived_cache: dict[int, tuple[PhysicsConfig, _Derived]] = {}


def _derived(cfg: PhysicsConfig) -> _Derived:
    entry = _derived_cache.get(id(cfg))
    if entry is not None and entry[0] is cfg:
        return entry[1]
    der = _Derived(cfg)
    if len(_derived_cache) > 64:
        _derived_cache.clear()
    _derived_cache[id(cfg)] = (cfg, der)
    return der


def _update_wheel_contacts(
    car: CarState, up: Vec3, cfg: PhysicsConfig
) -> tuple[int, int, int, Vec3]:
    """Raycast each wheel along car-down; fill WheelStates in place.

    Returns (ground contacts, non-ground contacts, total, average normal).
    Compression is distance-into-the-force-zone from the rest pose, clamped
    to max_compress; the extension zone below rest only registers contact.
    """
    sus = cfg.suspension
    rot = car.rotation
    pos = car.position
    vel = car.velocity
    omega = car.angular_velocity
    n_ground = 0
    n_other = 0
    sum_n = ZERO3
    for i, wheel in enumerate(cfg.wheels):
        ws = car.wheels[i]
        lever = rot.rotate(wheel.local_position)
        origin = pos + lever
        best_t = math.inf
        best_n: Vec3 | None = None
        for face_origin, normal, _kind, skippable in candidate_faces(origin, cfg.arena):
            if skippable and in_aperture(origin, cfg.arena):
                continue
            denom = normal.dot(up)  # -normal . ray_direction, ray goes along -up
            if denom < 1e-6:
                continue
            t = (origin - face_origin).dot(normal) / denom
            if t < best_t:
                best_t = t
                best_n = normal
        compression_raw = wheel.radius - best_t if best_n is not None else -math.inf
        if compression_raw < -sus.max_extend:
            ws.in_contact = False
            ws.compression = 0.0
            ws.compression_rate = 0.0
            continue
        assert best_n is not None
        point_vel = vel + omega.cross(lever)
        denom = best_n.dot(up)
        ws.in_contact = True
        ws.compression = min(compression_raw, sus.max_compress)
        ws.compression_rate = -best_n.dot(point_vel) / denom
        sum_n = sum_n + best_n
        if best_n.z > 0.999:
            n_ground += 1
        else:
            n_other += 1
    n_total = n_ground + n_other
    avg_normal = sum_n.normalized(fallback=Z_AXIS) if n_total else Z_AXIS
    return n_ground, n_other, n_total, avg_normal


def clamp_kinematics(car: CarState, cfg: PhysicsConfig, dodging: bool) -> None:
    """Cap speed and angular speed in place, direction preserved.

    The angular cap is raised from max_car_angular to max_dodge_angular
    while a dodge is active.
    """
    car.velocity = car.velocity.clamped(cfg.max_car_speed)
    cap = cfg.max_dodge_angular if dodging else cfg.max_car_angular
    car.angular_velocity = car.angular_velocity.clamped(cap)


def step(world: WorldState, inp: ControllerInput, cfg: PhysicsConfig) -> WorldState:
    """Advance exactly one 120 Hz frame; returns a new world, inputs untouched."""
    w = world.copy()
    w.frame += 1
    car = w.car
    dt = cfg.dt
    der = _derived(cfg)

    f, r, u = car.rotation.axes()
    n_ground, n_other, n_total, avg_normal = _update_wheel_contacts(car, u, cfg)
    maybe_land(car, n_total, avg_normal)

    accel = Vec3(0.0, 0.0, -cfg.gravity)
    alpha = ZERO3

    # boost pushes along car-forward in any pose and forces full throttle
    boost_mag, car.boost = boost_step(car.boost, inp.boost, cfg)
    boosting = boost_mag > 0.0
    if boosting:
        accel = accel + f.scale(boost_mag)
    throttle = clamp_unit(inp.throttle)
    eff_throttle = 1.0 if boosting else throttle
    throttle_active = boosting or abs(throttle) > INPUT_DEADZONE

    j_accel, j_alpha = jump_dodge_step(car, inp, cfg, dt)
    if j_accel is not ZERO3:
        accel = accel + j_accel
    if j_alpha is not ZERO3:
        alpha = alpha + j_alpha
    dodging = car.jump.phase == JumpPhase.DODGE

    # body proximity to a surface (2 uu slack: resolution leaves the resting
    # box at exactly zero penetration, so strict overlap would flicker off)
    hb_center = car.position + car.rotation.rotate(cfg.hitbox_offset)
    near_contacts = box_contacts(hb_center, car.rotation, der.half_dims, cfg.arena, margin=2.0)

    steer_rate: float | None = None
    if n_total >= 3:
        # seated on a surface: curve/brake/coast along the surface-forward,
        # tire grip against sideways slip, kinematic steering about the normal
        f_t = (f - avg_normal.scale(f.dot(avg_normal))).normalized(fallback=f)
        r_t = avg_normal.cross(f_t)
        v_fwd = car.velocity.dot(f_t)
        v_lat = car.velocity.dot(r_t)
        accel = accel + f_t.scale(longitudinal_accel(v_fwd, eff_throttle, cfg, dt))
        if v_lat != 0.0:
            lat_mag = lateral_friction_accel(v_lat, inp.handbrake, cfg, dt)
            accel = accel - r_t.scale(math.copysign(lat_mag, v_lat))
        rate = steer_yaw_rate(abs(v_fwd), clamp_unit(inp.steer), cfg)
        steer_rate = rate if v_fwd >= 0.0 else -rate
    elif n_total == 0 and not dodging:
        roll_in = air_rotation_inputs(inp)
        omega_body = (
            car.angular_velocity.dot(f),
            car.angular_velocity.dot(r),
            car.angular_velocity.dot(u),
        )
        a_roll, a_pitch, a_yaw = air_control_alpha(omega_body, roll_in, cfg)
        alpha = alpha + f.scale(a_roll) + r.scale(a_pitch) + u.scale(a_yaw)
        if not near_contacts:
            # genuinely airborne; the weak air throttle does nothing while
            # the body rests on a surface with the wheels off it
            air_fwd = air_throttle_accel(eff_throttle, cfg)
            if air_fwd != 0.0:
                accel = accel + f.scale(air_fwd)

    # suspension springs act along car-up at the wheel positions; the lever
    # arms produce roll/pitch torque so a tilted landing levels itself
    tau_roll = 0.0
    tau_pitch = 0.0
    total_spring = 0.0
    for i, ws in enumerate(car.wheels):
        a_i = suspension_accel(ws, der.wheel_axles[i])
        if a_i != 0.0:
            local = cfg.wheels[i].local_position
            total_spring += a_i
            tau_roll += local.y * a_i
            tau_pitch -= local.x * a_i
    if total_spring != 0.0:
        accel = accel + u.scale(total_spring)
        alpha = alpha + f.scale(tau_roll / der.k_roll) + r.scale(tau_pitch / der.k_pitch)

    # stabilization: align car-up to the surface while touching with a proper
    # subset of wheels, plus downforce / sticky forces into the surface
    if throttle_active:
        if n_total < 4 and (n_total > 0 or near_contacts):
            normal = avg_normal if n_total > 0 else near_contacts[0].normal
            alpha = alpha + stabilization_alpha(u, f, car.angular_velocity, normal, cfg)
        if 1 <= n_ground <= 3:
            accel = accel - u.scale(cfg.downforce)
        if n_other >= 2:
            accel = accel - u.scale(cfg.sticky_accel)

    # integration: velocities first, clamps, then positions (semi-implicit)
    car.velocity = car.velocity + accel.scale(dt)
    car.angular_velocity = car.angular_velocity + alpha.scale(dt)
    if steer_rate is not None:
        spin = car.angular_velocity.dot(avg_normal)
        car.angular_velocity = (
            car.angular_velocity - avg_normal.scale(spin) + avg_normal.scale(steer_rate)
        )
    clamp_kinematics(car, cfg, dodging)
    car.position = car.position + car.velocity.scale(dt)
    car.rotation = car.rotation.integrated(car.angular_velocity, dt)

    # car body vs arena: de-penetrate and zero the inward velocity component
    hb_center = car.position + car.rotation.rotate(cfg.hitbox_offset)
    body_contacts = box_contacts(hb_center, car.rotation, der.half_dims, cfg.arena)
    for contact in body_contacts:
        car.position = car.position + contact.normal.scale(contact.penetration)
        v_n = car.velocity.dot(contact.normal)
        if v_n < 0.0:
            car.velocity = car.velocity - contact.normal.scale(v_n)
    if body_contacts and n_total == 0 and not throttle_active:
        # sliding on the body with the wheels off the surface: roof drag
        contact = body_contacts[0]
        if contact.normal.dot(u) < -0.7:
            v_tan = car.velocity - contact.normal.scale(car.velocity.dot(contact.normal))
            speed = v_tan.norm()
            if speed > 1e-9:
                drop = min(coast_drag_decel(speed, "roof", cfg, dt) * dt, speed)
                car.velocity = car.velocity - v_tan.scale(drop / speed)

    ball_step(w.ball, cfg)
    w.car_ball_contact = car_ball_impulse(car, w.ball, cfg)
    w.ball_in_goal_pos, w.ball_in_goal_neg = ball_in_goal(w.ball.position, cfg.arena)

    if not w.is_finite():
        raise PhysicsFault(f"non-finite state after frame {w.frame}")
    return w


# --- settling helpers -------------------------------------------------------

_rest_cache: dict[int, tuple[PhysicsConfig, float]] = {}


def resting_height(cfg: PhysicsConfig) -> float:
    """Settled body height of an idle car on flat ground (computed once)."""
    entry = _rest_cache.get(id(cfg))
    if entry is not None and entry[0] is cfg:
        return entry[1]
    world = make_world(cfg, ball=BallState(position=Vec3(3000.0, 3000.0, cfg.ball_radius)))
    world.car.position = Vec3(0.0, 0.0, 17.0)
    idle = ControllerInput()
    for _ in range(480):
        world = step(world, idle, cfg)
    height = world.car.position.z
    if len(_rest_cache) > 64:
        _rest_cache.clear()
    _rest_cache[id(cfg)] = (cfg, height)
    return height


def spawn_car(
    cfg: PhysicsConfig,
    position_xy: tuple[float, float],
    yaw: float,
    boost: float,
) -> CarState:
    """A car standing on its wheels at the settled height, facing `yaw`."""
    return CarState(
        position=Vec3(position_xy[0], position_xy[1], resting_height(cfg)),
        rotation=Quat.from_yaw(yaw),
        velocity=ZERO3,
        angular_velocity=ZERO3,
        boost=boost,
    )


def refresh_wheel_contacts(car: CarState, cfg: PhysicsConfig) -> None:
    """Recompute wheel contact flags for `car` in place (no forces applied)."""
    _update_wheel_contacts(car, car.rotation.up(), cfg)

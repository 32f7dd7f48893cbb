"""Ball mechanics: free flight, surface bounces, and car contact impulses.

The ball detects arena and car contact at its full radius but runs the bounce
math at a slightly smaller radius, mirroring the reference model's split
between the collision shell and the dynamics sphere.
"""

from __future__ import annotations

from .arena import ball_in_goal, sphere_contacts
from .config import PhysicsConfig, interp_table
from .state import BallState, CarState
from .vec import ZERO3, Z_AXIS, Vec3

# Impacts slower than this along the normal (about two frames of gravity)
# count as resting contact: the normal velocity is zeroed instead of bounced,
# which keeps a supported ball exactly still frame after frame.
REST_SPEED_GRAVITY_FRAMES = 2.0


def bounce(
    velocity: Vec3, angular: Vec3, normal: Vec3, cfg: PhysicsConfig
) -> tuple[Vec3, Vec3]:
    """Velocity and spin after one surface bounce.

    The normal component reflects with the restitution factor. The tangential
    component loses friction * slip, where the slip is the contact-point
    tangential velocity and the friction impulse saturates once the impact is
    shallow relative to the slip (slip_gain * |v_n| / |slip| capped at 1).
    Spin follows the tangential impulse through the spin-transfer scalar.
    """
    v_n = velocity.dot(normal)
    v_perp = normal.scale(v_n)
    v_par = velocity - v_perp
    r_b = cfg.ball_bounce_radius
    slip = v_par + normal.cross(angular).scale(r_b)
    slip_norm = slip.norm()
    if slip_norm > 1e-9:
        ratio = min(1.0, cfg.bounce_slip_gain * abs(v_n) / slip_norm)
        delta_par = slip.scale(-ratio * cfg.bounce_friction)
    else:
        delta_par = ZERO3
    new_velocity = v_par + delta_par - v_perp.scale(cfg.bounce_restitution)
    new_angular = angular + normal.cross(delta_par).scale(cfg.bounce_spin / r_b)
    return new_velocity, new_angular


def _rest_contact(
    velocity: Vec3, angular: Vec3, normal: Vec3, cfg: PhysicsConfig
) -> tuple[Vec3, Vec3]:
    """Supported contact: cancel the normal velocity, apply rolling friction.

    Friction uses the same slip law as a bounce with the per-frame gravity
    impulse standing in for the impact speed, so a sliding resting ball
    converges to rolling and a rolling ball keeps rolling untouched.
    """
    v_n = velocity.dot(normal)
    v_par = velocity - normal.scale(v_n)
    r_b = cfg.ball_bounce_radius
    slip = v_par + normal.cross(angular).scale(r_b)
    slip_norm = slip.norm()
    if slip_norm > 1e-9:
        gravity_impulse = cfg.gravity * cfg.dt
        ratio = min(1.0, cfg.bounce_slip_gain * gravity_impulse / slip_norm)
        delta_par = slip.scale(-ratio * cfg.bounce_friction)
    else:
        delta_par = ZERO3
    new_velocity = v_par + delta_par
    new_angular = angular + normal.cross(delta_par).scale(cfg.bounce_spin / r_b)
    return new_velocity, new_angular


def clamp_ball(ball: BallState, cfg: PhysicsConfig) -> None:
    ball.velocity = ball.velocity.clamped(cfg.ball_max_speed)
    ball.angular_velocity = ball.angular_velocity.clamped(cfg.ball_max_angular)


def ball_step(ball: BallState, cfg: PhysicsConfig) -> None:
    """One 120 Hz frame of free ball motion plus arena contact resolution."""
    dt = cfg.dt
    ball.velocity = ball.velocity + Vec3(0.0, 0.0, -cfg.gravity * dt)
    ball.position = ball.position + ball.velocity.scale(dt)

    rest_speed = REST_SPEED_GRAVITY_FRAMES * cfg.gravity * dt
    for contact in sphere_contacts(ball.position, cfg.ball_radius, cfg.arena):
        ball.position = ball.position + contact.normal.scale(contact.penetration)
        v_n = ball.velocity.dot(contact.normal)
        if v_n >= 0.0:
            continue
        if -v_n > rest_speed:
            ball.velocity, ball.angular_velocity = bounce(
                ball.velocity, ball.angular_velocity, contact.normal, cfg
            )
        else:
            ball.velocity, ball.angular_velocity = _rest_contact(
                ball.velocity, ball.angular_velocity, contact.normal, cfg
            )
    clamp_ball(ball, cfg)


# --- car contact ------------------------------------------------------------


def _closest_point_on_hitbox(car: CarState, point: Vec3, cfg: PhysicsConfig) -> tuple[Vec3, Vec3, bool]:
    """(closest point, outward normal guess, center_inside) for a world point."""
    center = car.position + car.rotation.rotate(cfg.hitbox_offset)
    local = car.rotation.rotate_back(point - center)
    hx = cfg.hitbox_dims.x * 0.5
    hy = cfg.hitbox_dims.y * 0.5
    hz = cfg.hitbox_dims.z * 0.5
    cx = max(-hx, min(hx, local.x))
    cy = max(-hy, min(hy, local.y))
    cz = max(-hz, min(hz, local.z))
    inside = cx == local.x and cy == local.y and cz == local.z
    if inside:
        # push out through the nearest face
        gaps = (hx - abs(local.x), hy - abs(local.y), hz - abs(local.z))
        axis = gaps.index(min(gaps))
        if axis == 0:
            cx = hx if local.x >= 0.0 else -hx
            normal_local = Vec3(1.0 if local.x >= 0.0 else -1.0, 0.0, 0.0)
        elif axis == 1:
            cy = hy if local.y >= 0.0 else -hy
            normal_local = Vec3(0.0, 1.0 if local.y >= 0.0 else -1.0, 0.0)
        else:
            cz = hz if local.z >= 0.0 else -hz
            normal_local = Vec3(0.0, 0.0, 1.0 if local.z >= 0.0 else -1.0)
        closest = center + car.rotation.rotate(Vec3(cx, cy, cz))
        return closest, car.rotation.rotate(normal_local), True
    closest = center + car.rotation.rotate(Vec3(cx, cy, cz))
    return closest, (point - closest).normalized(fallback=Z_AXIS), False


def car_ball_impulse(car: CarState, ball: BallState, cfg: PhysicsConfig) -> bool:
    """Resolve car-ball contact in place; True when a contact happened.

    Rigid part: a zero-restitution normal impulse between point masses with
    the configured mass split, so momentum is conserved exactly and the
    post-impulse relative normal velocity is zero. The ball is then pushed
    out of the hitbox. The shaping impulse (see psyonix_impulse) is added to
    the ball only, and only on approaching contact, so a ball resting or
    sliding on the body is carried without being re-launched every frame.
    """
    closest, normal, inside = _closest_point_on_hitbox(car, ball.position, cfg)
    delta = ball.position - closest
    dist = delta.norm()
    if not inside and dist >= cfg.ball_radius:
        return False
    if not inside and dist > 1e-9:
        normal = delta.scale(1.0 / dist)

    # rigid impulse between the ball and the car's contact point
    contact_vel = car.velocity + car.angular_velocity.cross(closest - car.position)
    rel_vel = ball.velocity - car.velocity  # pre-resolution, for the shaping impulse
    v_rel_n = (ball.velocity - contact_vel).dot(normal)
    approaching = v_rel_n < 0.0
    if approaching:
        reduced_mass = (cfg.car_mass * cfg.ball_mass) / (cfg.car_mass + cfg.ball_mass)
        impulse = -v_rel_n * reduced_mass
        ball.velocity = ball.velocity + normal.scale(impulse / cfg.ball_mass)
        car.velocity = car.velocity - normal.scale(impulse / cfg.car_mass)

    # positional de-penetration of the ball
    if inside:
        push = cfg.ball_radius + dist
    else:
        push = cfg.ball_radius - dist
    ball.position = ball.position + normal.scale(push)

    if approaching:
        ball.velocity = ball.velocity + psyonix_impulse(car, ball, rel_vel, cfg)
    clamp_ball(ball, cfg)
    return True


def psyonix_impulse(
    car: CarState, ball: BallState, rel_vel: Vec3, cfg: PhysicsConfig
) -> Vec3:
    """Extra ball impulse shaping touches toward the car-to-ball direction.

    The direction is the center-to-center offset with its z component scaled
    down before normalization; the magnitude is the contact-time relative
    speed `|rel_vel|` times a factor interpolated from the speed table.
    """
    offset = ball.position - car.position
    direction = Vec3(offset.x, offset.y, offset.z * cfg.psyonix_z_scale)
    direction = direction.normalized(fallback=ZERO3)  # coincident centers: no impulse
    rel_speed = rel_vel.norm()
    factor = interp_table(cfg.psyonix_scale_table, rel_speed)
    return direction.scale(rel_speed * factor)


# --- ballistic projection ---------------------------------------------------


def project_crosses_goal_mouth(
    ball: BallState,
    cfg: PhysicsConfig,
    goal_sign: float,
    max_frames: int = 1200,
) -> bool:
    """Step a copy of the ball alone and report whether its center crosses the
    goal plane inside the mouth on the `goal_sign` (+1/-1) end within the
    horizon. Used for shot validation and save detection."""
    probe = ball.copy()
    for _ in range(max_frames):
        ball_step(probe, cfg)
        pos_goal, neg_goal = ball_in_goal(probe.position, cfg.arena)
        if goal_sign > 0.0 and pos_goal:
            return True
        if goal_sign < 0.0 and neg_goal:
            return True
    return False

"""3-vectors and rotation quaternions on plain floats.

Everything here is immutable and allocation-light; the physics step leans on
these types, so no numpy and no degrees anywhere. Angles are radians, lengths
are Unreal units (uu).
"""

from __future__ import annotations

import math
from typing import NamedTuple


class Vec3(NamedTuple):
    """Immutable 3-vector."""

    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self, fallback: "Vec3 | None" = None) -> "Vec3":
        """Unit vector; `fallback` (default zero vector) for near-zero input."""
        n = self.norm()
        if n < 1e-12:
            return fallback if fallback is not None else ZERO3
        inv = 1.0 / n
        return Vec3(self.x * inv, self.y * inv, self.z * inv)

    def clamped(self, max_norm: float) -> "Vec3":
        """Rescale so the norm does not exceed `max_norm`."""
        n_sq = self.norm_sq()
        if n_sq <= max_norm * max_norm:
            return self
        s = max_norm / math.sqrt(n_sq)
        return Vec3(self.x * s, self.y * s, self.z * s)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)


ZERO3 = Vec3(0.0, 0.0, 0.0)
X_AXIS = Vec3(1.0, 0.0, 0.0)
Y_AXIS = Vec3(0.0, 1.0, 0.0)
Z_AXIS = Vec3(0.0, 0.0, 1.0)


class Quat(NamedTuple):
    """Unit rotation quaternion (w, x, y, z), body frame to world frame."""

    w: float
    x: float
    y: float
    z: float

    def __mul__(self, other: "Quat") -> "Quat":  # type: ignore[override]
        """Hamilton product; (a * b).rotate(v) == a.rotate(b.rotate(v))."""
        aw, ax, ay, az = self
        bw, bx, by, bz = other
        return Quat(
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )

    def conjugate(self) -> "Quat":
        return Quat(self.w, -self.x, -self.y, -self.z)

    def normalized(self) -> "Quat":
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if n < 1e-12:
            return IDENTITY_QUAT
        inv = 1.0 / n
        return Quat(self.w * inv, self.x * inv, self.y * inv, self.z * inv)

    def rotate(self, v: Vec3) -> Vec3:
        """Rotate a body-frame vector into the world frame."""
        w, qx, qy, qz = self
        vx, vy, vz = v
        # v + 2w(q x v) + 2 q x (q x v), expanded
        ux = qy * vz - qz * vy
        uy = qz * vx - qx * vz
        uz = qx * vy - qy * vx
        wx = qy * uz - qz * uy
        wy = qz * ux - qx * uz
        wz = qx * uy - qy * ux
        return Vec3(
            vx + 2.0 * (w * ux + wx),
            vy + 2.0 * (w * uy + wy),
            vz + 2.0 * (w * uz + wz),
        )

    def rotate_back(self, v: Vec3) -> Vec3:
        """Rotate a world-frame vector into the body frame."""
        return self.conjugate().rotate(v)

    def axes(self) -> tuple[Vec3, Vec3, Vec3]:
        """(forward, right, up) world-frame unit vectors of this rotation.

        Identity maps to forward (1,0,0), right (0,1,0), up (0,0,1); the triad
        is right-handed with forward x right = up.
        """
        return self.rotate(X_AXIS), self.rotate(Y_AXIS), self.rotate(Z_AXIS)

    def forward(self) -> Vec3:
        return self.rotate(X_AXIS)

    def up(self) -> Vec3:
        return self.rotate(Z_AXIS)

    def integrated(self, omega: Vec3, dt: float) -> "Quat":
        """Rotation after turning at world angular velocity `omega` for dt seconds."""
        wx, wy, wz = omega
        angle = math.sqrt(wx * wx + wy * wy + wz * wz) * dt
        if angle < 1e-12:
            return self
        half = 0.5 * angle
        s = math.sin(half) / (angle / dt)  # sin(half) / |omega|
        dq = Quat(math.cos(half), wx * s, wy * s, wz * s)
        return (dq * self).normalized()

    def is_finite(self) -> bool:
        return (
            math.isfinite(self.w)
            and math.isfinite(self.x)
            and math.isfinite(self.y)
            and math.isfinite(self.z)
        )

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> "Quat":
        u = axis.normalized()
        half = 0.5 * angle
        s = math.sin(half)
        return Quat(math.cos(half), u.x * s, u.y * s, u.z * s)

    @staticmethod
    def from_yaw(yaw: float) -> "Quat":
        """Rotation about world z; yaw 0 faces +x, pi/2 faces +y."""
        half = 0.5 * yaw
        return Quat(math.cos(half), 0.0, 0.0, math.sin(half))


IDENTITY_QUAT = Quat(1.0, 0.0, 0.0, 0.0)


def slerp(a: Quat, b: Quat, t: float) -> Quat:
    """Spherical interpolation from a (t=0) to b (t=1) along the short arc."""
    dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z
    if dot < 0.0:
        b = Quat(-b.w, -b.x, -b.y, -b.z)
        dot = -dot
    if dot > 0.9995:
        # nearly parallel: linear blend then renormalize
        return Quat(
            a.w + t * (b.w - a.w),
            a.x + t * (b.x - a.x),
            a.y + t * (b.y - a.y),
            a.z + t * (b.z - a.z),
        ).normalized()
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    wa = math.sin((1.0 - t) * theta) / s
    wb = math.sin(t * theta) / s
    return Quat(
        wa * a.w + wb * b.w,
        wa * a.x + wb * b.x,
        wa * a.y + wb * b.y,
        wa * a.z + wb * b.z,
    ).normalized()

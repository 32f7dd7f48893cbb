"""Arena collision geometry: a flat box with a goal box recessed in each end wall.

The playable volume is the main box [-hx, hx] x [-hy, hy] x [0, ceiling]
plus two goal boxes [-gw, gw] x [hy, hy + depth] x [0, gh] (and mirrored -y).
Corner and wall bevels of the broadcast arena are deliberately omitted; every
surface is axis-aligned. Contact queries return one contact per penetrated
face with inward normals.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

from .config import ArenaSpec
from .vec import Quat, Vec3


class PhysicsFault(RuntimeError):
    """Simulation integrity violation (escaped world, non-finite state)."""


class SurfaceKind(enum.IntEnum):
    GROUND = 0
    WALL = 1
    CEILING = 2
    GOAL_INTERIOR = 3


class SurfaceContact(NamedTuple):
    point: Vec3  # deepest point of the shape, on or behind the face plane
    normal: Vec3  # inward unit normal of the face
    penetration: float  # uu, > 0
    kind: SurfaceKind


_UP = Vec3(0.0, 0.0, 1.0)
_DOWN = Vec3(0.0, 0.0, -1.0)
_POS_X = Vec3(1.0, 0.0, 0.0)
_NEG_X = Vec3(-1.0, 0.0, 0.0)
_POS_Y = Vec3(0.0, 1.0, 0.0)
_NEG_Y = Vec3(0.0, -1.0, 0.0)


def _build_face_sets(arena: ArenaSpec):
    """(main box faces, +y goal faces, -y goal faces) for one arena."""
    hx, hy = arena.half_extent_x, arena.half_extent_y
    gw, gh, depth = arena.goal_half_width, arena.goal_height, arena.goal_depth
    main = (
        (Vec3(0.0, 0.0, 0.0), _UP, SurfaceKind.GROUND, False),
        (Vec3(0.0, 0.0, arena.ceiling_height), _DOWN, SurfaceKind.CEILING, False),
        (Vec3(hx, 0.0, 0.0), _NEG_X, SurfaceKind.WALL, False),
        (Vec3(-hx, 0.0, 0.0), _POS_X, SurfaceKind.WALL, False),
        (Vec3(0.0, hy, 0.0), _NEG_Y, SurfaceKind.WALL, True),
        (Vec3(0.0, -hy, 0.0), _POS_Y, SurfaceKind.WALL, True),
    )
    goals = tuple(
        (
            (Vec3(0.0, 0.0, 0.0), _UP, SurfaceKind.GROUND, False),
            (Vec3(0.0, 0.0, gh), _DOWN, SurfaceKind.GOAL_INTERIOR, False),
            (Vec3(gw, 0.0, 0.0), _NEG_X, SurfaceKind.GOAL_INTERIOR, False),
            (Vec3(-gw, 0.0, 0.0), _POS_X, SurfaceKind.GOAL_INTERIOR, False),
            (
                Vec3(0.0, side * (hy + depth), 0.0),
                Vec3(0.0, -side, 0.0),
                SurfaceKind.GOAL_INTERIOR,
                False,
            ),
        )
        for side in (1.0, -1.0)
    )
    return main, goals[0], goals[1]


_face_cache: dict[int, tuple[ArenaSpec, tuple]] = {}


def candidate_faces(center: Vec3, arena: ArenaSpec):
    """Candidate (origin, inward normal, kind, skippable) faces for a shape center.

    `skippable` marks the end-wall faces that vanish inside the goal aperture.
    """
    entry = _face_cache.get(id(arena))
    if entry is None or entry[0] is not arena:
        if len(_face_cache) > 64:
            _face_cache.clear()
        entry = (arena, _build_face_sets(arena))
        _face_cache[id(arena)] = entry
    main, goal_pos, goal_neg = entry[1]
    if abs(center.y) <= arena.half_extent_y:
        return main
    return goal_pos if center.y > 0.0 else goal_neg


def in_aperture(center: Vec3, arena: ArenaSpec) -> bool:
    """Center inside the goal mouth rectangle (end walls stop existing there)."""
    return abs(center.x) < arena.goal_half_width and center.z < arena.goal_height


def check_inside_arena(center: Vec3, reach: float, arena: ArenaSpec) -> None:
    """Raise PhysicsFault if a shape of bounding radius `reach` left the world."""
    hx, hy = arena.half_extent_x, arena.half_extent_y
    if (
        center.z < -reach
        or center.z > arena.ceiling_height + reach
        or abs(center.x) > hx + reach
    ):
        raise PhysicsFault(f"shape escaped the arena at {center}")
    if abs(center.y) > hy + reach:
        in_goal_volume = (
            abs(center.x) <= arena.goal_half_width + reach
            and abs(center.y) <= hy + arena.goal_depth + reach
            and center.z <= arena.goal_height + reach
        )
        if not in_goal_volume:
            raise PhysicsFault(f"shape escaped the arena at {center}")


def sphere_contacts(center: Vec3, radius: float, arena: ArenaSpec) -> list[SurfaceContact]:
    """One contact per arena face the sphere penetrates."""
    check_inside_arena(center, radius, arena)
    out: list[SurfaceContact] = []
    for origin, normal, kind, skippable in candidate_faces(center, arena):
        if skippable and in_aperture(center, arena):
            continue
        dist = (center - origin).dot(normal)
        pen = radius - dist
        if pen > 0.0:
            out.append(SurfaceContact(center - normal.scale(dist), normal, pen, kind))
    return out


def box_contacts(
    center: Vec3, rotation: Quat, half_dims: Vec3, arena: ArenaSpec, margin: float = 0.0
) -> list[SurfaceContact]:
    """One contact per arena face the oriented box penetrates.

    The contact point is the deepest box corner along the face normal.
    A positive `margin` also reports faces within that distance (their
    penetration is then the signed overlap including the margin).
    """
    reach = half_dims.norm()
    check_inside_arena(center, reach, arena)
    ax, ay, az = rotation.axes()
    out: list[SurfaceContact] = []
    for origin, normal, kind, skippable in candidate_faces(center, arena):
        if skippable and in_aperture(center, arena):
            continue
        nx = normal.dot(ax)
        ny = normal.dot(ay)
        nz = normal.dot(az)
        support = half_dims.x * abs(nx) + half_dims.y * abs(ny) + half_dims.z * abs(nz)
        dist = (center - origin).dot(normal)
        pen = support + margin - dist
        if pen > 0.0:
            deepest = (
                center
                - ax.scale(half_dims.x * (1.0 if nx > 0.0 else -1.0))
                - ay.scale(half_dims.y * (1.0 if ny > 0.0 else -1.0))
                - az.scale(half_dims.z * (1.0 if nz > 0.0 else -1.0))
            )
            out.append(SurfaceContact(deepest, normal, pen, kind))
    return out


def ball_in_goal(center: Vec3, arena: ArenaSpec) -> tuple[bool, bool]:
    """(past +y plane inside the mouth, past -y plane inside the mouth)."""
    inside_mouth = abs(center.x) < arena.goal_half_width and center.z < arena.goal_height
    return (
        center.y > arena.half_extent_y and inside_mouth,
        center.y < -arena.half_extent_y and inside_mouth,
    )

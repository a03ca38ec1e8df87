"""2D geometry primitives: rotated-rectangle distance, overlap tests, ray casting.

All functions are pure and operate on plain floats / numpy arrays so the
simulator can vectorize over rays and obstacles.
"""

from __future__ import annotations

import math

import numpy as np

_INF = float("inf")


def rot2(theta: float) -> np.ndarray:
    """2x2 counter-clockwise rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def point_rect_distance(p, center, half_extents, rotation: float) -> float:
    """Euclidean distance from point p to a rotated rectangle (0 if inside).

    The rectangle has the given center, half extents along its local axes,
    and is rotated CCW by `rotation` radians.
    """
    c, s = math.cos(rotation), math.sin(rotation)
    dx = p[0] - center[0]
    dy = p[1] - center[1]
    # into rectangle frame (inverse rotation)
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    ex = abs(lx) - half_extents[0]
    ey = abs(ly) - half_extents[1]
    if ex <= 0.0 and ey <= 0.0:
        return 0.0
    return math.hypot(max(ex, 0.0), max(ey, 0.0))


def disc_rect_overlap(p, radius: float, center, half_extents, rotation: float) -> bool:
    """True when a disc at p touches or overlaps the rotated rectangle."""
    return point_rect_distance(p, center, half_extents, rotation) <= radius


def point_segment_distance(p, a, b) -> float:
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] * ab[0] + ab[1] * ab[1]
    t = 0.0 if denom == 0.0 else max(0.0, min(1.0, (ap[0] * ab[0] + ap[1] * ab[1]) / denom))
    return math.hypot(p[0] - (a[0] + t * ab[0]), p[1] - (a[1] + t * ab[1]))


def perpendicular_distance_to_line(p, origin, direction) -> float:
    """Distance from p to the infinite line through origin along direction."""
    norm = math.hypot(direction[0], direction[1])
    if norm == 0.0:
        return math.hypot(p[0] - origin[0], p[1] - origin[1])
    cross = (p[0] - origin[0]) * direction[1] - (p[1] - origin[1]) * direction[0]
    return abs(cross) / norm


def ray_rects_hits(origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray,
                   half_extents: np.ndarray, rotations_cs: np.ndarray) -> np.ndarray:
    """Nearest-hit parameter t for K rays against S rotated rectangles.

    origin: (2,), dirs: (K,2) unit vectors, centers: (S,2), half_extents: (S,2),
    rotations_cs: (S,2) columns (cos, sin). Returns (K,) array of the smallest
    non-negative t per ray, inf where no rectangle is hit.
    """
    if centers.shape[0] == 0:
        return np.full(dirs.shape[0], _INF)
    c = rotations_cs[:, 0][None, :]
    s = rotations_cs[:, 1][None, :]
    # ray origin/direction in each rectangle frame: (K, S)
    dx = origin[0] - centers[:, 0]
    dy = origin[1] - centers[:, 1]
    ox = (c * dx + s * dy)
    oy = (-s * dx + c * dy)
    ux = c * dirs[:, 0][:, None] + s * dirs[:, 1][:, None]
    uy = -s * dirs[:, 0][:, None] + c * dirs[:, 1][:, None]

    hx = half_extents[:, 0][None, :]
    hy = half_extents[:, 1][None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_ux = 1.0 / ux
        inv_uy = 1.0 / uy
        tx1 = (-hx - ox) * inv_ux
        tx2 = (hx - ox) * inv_ux
        ty1 = (-hy - oy) * inv_uy
        ty2 = (hy - oy) * inv_uy
    # axis-parallel rays: slab test passes only if origin lies within the slab
    para_x = ux == 0.0
    inside_x = np.abs(ox) <= hx + np.zeros_like(ox)
    tx_min = np.where(para_x, np.where(inside_x, -_INF, _INF), np.minimum(tx1, tx2))
    tx_max = np.where(para_x, np.where(inside_x, _INF, -_INF), np.maximum(tx1, tx2))
    para_y = uy == 0.0
    inside_y = np.abs(oy) <= hy + np.zeros_like(oy)
    ty_min = np.where(para_y, np.where(inside_y, -_INF, _INF), np.minimum(ty1, ty2))
    ty_max = np.where(para_y, np.where(inside_y, _INF, -_INF), np.maximum(ty1, ty2))

    t_enter = np.maximum(tx_min, ty_min)
    t_exit = np.minimum(tx_max, ty_max)
    hit = (t_enter <= t_exit) & (t_exit >= 0.0)
    t = np.where(t_enter >= 0.0, t_enter, t_exit)  # origin inside: first boundary ahead
    t = np.where(hit, t, _INF)
    return t.min(axis=1)


def ray_circles_hits(origin: np.ndarray, dirs: np.ndarray, centers: np.ndarray,
                     radii: np.ndarray) -> np.ndarray:
    """Nearest-hit parameter t for K rays against D circles; inf where missed."""
    if centers.shape[0] == 0:
        return np.full(dirs.shape[0], _INF)
    f = origin[None, :] - centers  # (D,2)
    b = dirs @ f.T  # (K,D), a == 1 for unit dirs
    cc = (f * f).sum(axis=1)[None, :] - (radii * radii)[None, :]
    disc = b * b - cc
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t1 = -b - sq
    t2 = -b + sq
    t = np.where(t1 >= 0.0, t1, t2)  # inside the circle: exit point
    t = np.where(ok & (t >= 0.0), t, _INF)
    return t.min(axis=1)


def ray_box_exit(origin: np.ndarray, dirs: np.ndarray, side: float) -> np.ndarray:
    """Distance along each ray to the walls of the [0, side]^2 box (from inside)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dirs[:, 0] > 0, (side - origin[0]) / dirs[:, 0],
                      np.where(dirs[:, 0] < 0, -origin[0] / dirs[:, 0], _INF))
        ty = np.where(dirs[:, 1] > 0, (side - origin[1]) / dirs[:, 1],
                      np.where(dirs[:, 1] < 0, -origin[1] / dirs[:, 1], _INF))
    t = np.minimum(tx, ty)
    return np.where(t >= 0.0, t, _INF)

"""Point-cloud to obstacle-map encoding.

Pipeline: raw 3D points are rotated into the horizontal world frame, buffered
in a sliding window of the last j frames, filtered to the current flight band,
and compressed into a per-sector nearest-distance vector. Stacking the last m
vectors column-wise yields a 2D obstacle map where value 1.0 means free space
and smaller values mean closer obstacles.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass
class PointFrame:
    """One lidar frame: a monotonically increasing id plus an (N, 3) point array."""

    frame_id: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("points must be finite")
        self.points = pts


@dataclass
class EncoderConfig:
    n: int = 36          # direction sectors
    d_max: float = 10.0  # metres represented by the map
    h: float = 1.0       # altitude half-band around the flight level
    j: int = 4           # sliding-window depth in frames
    m: int = 36          # map history depth in frames

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.d_max <= 0:
            raise ValueError("d_max must be > 0")
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.j < 1:
            raise ValueError("j must be >= 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")


class ScanWindow:
    """FIFO buffer of the most recent j point frames (strictly increasing ids)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.frames: deque[PointFrame] = deque()

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def newest_id(self) -> int | None:
        return self.frames[-1].frame_id if self.frames else None

    def merged_points(self) -> np.ndarray:
        if not self.frames:
            return np.empty((0, 3))
        if len(self.frames) == 1:
            return self.frames[0].points
        return np.concatenate([f.points for f in self.frames], axis=0)


def push_scan(window: ScanWindow, frame: PointFrame) -> ScanWindow:
    """Append a frame, evicting the oldest once capacity is exceeded."""
    newest = window.newest_id
    if newest is not None and frame.frame_id <= newest:
        raise ValueError(
            f"frame_id must increase: got {frame.frame_id} after {newest}")
    window.frames.append(frame)
    while len(window.frames) > window.capacity:
        window.frames.popleft()
    return window


def transform_to_world(points, rotation) -> np.ndarray:
    """Rotate body-frame points into the world frame; order preserved.

    rotation must be a proper orthonormal 3x3 matrix (checked at 1e-6).
    """
    rot = np.asarray(rotation, dtype=float)
    if rot.shape != (3, 3):
        raise ValueError(f"rotation must be 3x3, got {rot.shape}")
    if np.abs(rot.T @ rot - np.eye(3)).max() > 1e-6:
        raise ValueError("rotation is not orthonormal")
    pts = _as_points_array(points)
    return pts @ rot.T


def _as_points_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        pts = points.astype(float, copy=False)
    else:
        pts = np.array([(p[0], p[1], p[2]) for p in points], dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 3)
    if pts.ndim == 1:
        pts = pts.reshape(1, 3)
    if pts.shape[1] != 3:
        raise ValueError("points must have 3 components")
    return pts


def sector_of(point, n: int) -> int:
    """1-based sector index of the full-circle bearing of (x, y).

    Bearing is atan2(y, x) wrapped to [0, 2*pi); sector s covers
    [2*pi*(s-1)/n, 2*pi*s/n) with the last sector absorbing 2*pi.
    """
    x, y = point[0], point[1]
    if x == 0.0 and y == 0.0:
        raise ValueError("direction undefined for a point at the origin")
    theta = math.atan2(y, x)
    if theta < 0.0:
        theta += TWO_PI
    idx = int(theta * (n / TWO_PI))
    if idx >= n:  # theta rounded up to exactly 2*pi
        idx = n - 1
    return idx + 1


def encode_window(window: ScanWindow, z_q: float, cfg: EncoderConfig,
                  quad_xy=None) -> np.ndarray:
    """Per-sector nearest horizontal distance, normalized by d_max.

    Points are taken relative to the quadrotor's planar position `quad_xy`
    (origin when omitted), filtered to horizontal distance < d_max and
    altitude within [z_q - h, z_q + h]. Empty sectors encode as 1.0.
    """
    out = np.ones(cfg.n)
    pts = window.merged_points()
    if pts.shape[0] == 0:
        return out
    if quad_xy is None:
        rx = pts[:, 0]
        ry = pts[:, 1]
    else:
        rx = pts[:, 0] - quad_xy[0]
        ry = pts[:, 1] - quad_xy[1]
    dist = np.sqrt(rx * rx + ry * ry)
    keep = (dist < cfg.d_max) & (np.abs(pts[:, 2] - z_q) <= cfg.h)
    if not keep.any():
        return out
    rx, ry, dist = rx[keep], ry[keep], dist[keep]
    theta = np.arctan2(ry, rx)
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    idx = (theta * (cfg.n / TWO_PI)).astype(np.int64)
    np.clip(idx, 0, cfg.n - 1, out=idx)
    np.minimum.at(out, idx, dist / cfg.d_max)
    return out


class ObstacleMap:
    """n x m history grid: row = sector, column = age (0 newest).

    Unfilled history is free space (1.0) so a cold start cannot look like an
    obstacle.
    """

    def __init__(self, n: int, m: int):
        self.n = n
        self.m = m
        self.grid = np.ones((n, m))

    def copy(self) -> "ObstacleMap":
        other = ObstacleMap(self.n, self.m)
        other.grid = self.grid.copy()
        return other


def push_map_column(omap: ObstacleMap, vec: np.ndarray) -> ObstacleMap:
    """Shift history one column older and place vec at column 0."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (omap.n,):
        raise ValueError(f"vector length {vec.shape} does not match n={omap.n}")
    omap.grid[:, 1:] = omap.grid[:, :-1]
    omap.grid[:, 0] = vec
    return omap


def export_map_image(omap: ObstacleMap) -> bytes:
    """Binary PGM (P5) rendering: nearer obstacles brighter, free space black."""
    gray = np.rint(255.0 * (1.0 - omap.grid)).astype(np.uint8)
    header = f"P5\n{omap.m} {omap.n}\n255\n".encode("ascii")
    return header + gray.tobytes()


# ----------------------------------------------------------------------------
# point-cloud log ingestion (CSV: frame_id,x,y,z)

class PointLogError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def iter_point_frames(path) -> Iterator[PointFrame]:
    """Stream PointFrames from a CSV point log, validating as it goes."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return
        if [h.strip() for h in header] != ["frame_id", "x", "y", "z"]:
            raise PointLogError(1, f"expected header frame_id,x,y,z, got {header}")
        cur_id: int | None = None
        cur_pts: list[tuple[float, float, float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise PointLogError(line_no, f"expected 4 fields, got {len(row)}")
            try:
                fid = int(row[0])
                x, y, z = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise PointLogError(line_no, str(exc)) from None
            if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
                raise PointLogError(line_no, "non-finite coordinate")
            if cur_id is None:
                cur_id = fid
            elif fid != cur_id:
                if fid < cur_id:
                    raise PointLogError(line_no, f"frame_id {fid} after {cur_id}")
                yield PointFrame(cur_id, np.array(cur_pts) if cur_pts else np.empty((0, 3)))
                cur_id, cur_pts = fid, []
            cur_pts.append((x, y, z))
        if cur_id is not None:
            yield PointFrame(cur_id, np.array(cur_pts) if cur_pts else np.empty((0, 3)))


def write_point_log(path, frames: Iterable[PointFrame]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_id", "x", "y", "z"])
        for fr in frames:
            for x, y, z in fr.points:
                writer.writerow([fr.frame_id, repr(float(x)), repr(float(y)), repr(float(z))])

"""Deterministic 2D episodic world.

A quadrotor disc with double-integrator dynamics flies in a walled square
arena containing rotated rectangular static obstacles and moving disc
obstacles. A simulated lidar sweeps a wedge per tick. Everything is driven by
an externally supplied numpy Generator so that (seed, action sequence) fully
determines the episode.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import (
    point_rect_distance,
    ray_box_exit,
    ray_circles_hits,
    ray_rects_hits,
)
from .lidar_encoding import PointFrame

TWO_PI = 2.0 * math.pi

WALL = "wall"


class ArenaGenerationError(RuntimeError):
    pass


@dataclass
class QuadState:
    position: np.ndarray   # (2,) metres
    velocity: np.ndarray   # (2,) m/s
    prev_accel: np.ndarray  # (2,) last applied command, m/s^2
    z_q: float             # constant flight altitude for the episode

    def copy(self) -> "QuadState":
        return QuadState(self.position.copy(), self.velocity.copy(),
                         self.prev_accel.copy(), self.z_q)


@dataclass
class StaticObstacle:
    center: np.ndarray       # (2,)
    half_extents: np.ndarray  # (2,), each > 0
    rotation: float           # radians CCW


@dataclass
class DynamicObstacle:
    center: np.ndarray    # (2,)
    radius: float
    velocity: np.ndarray  # (2,) m/s


@dataclass
class Arena:
    side: float
    statics: list
    dynamics: list
    goal: np.ndarray
    start: np.ndarray
    # bands used when a dynamic obstacle is reset mid-episode
    dyn_speed_band: tuple = (1.0, 6.0)
    dyn_radius_band: tuple = (0.05, 0.5)
    _static_arrays: Optional[tuple] = field(default=None, repr=False, compare=False)

    def static_arrays(self):
        """Cached SoA view of the static obstacles for vectorized queries."""
        if self._static_arrays is None:
            if self.statics:
                centers = np.array([s.center for s in self.statics])
                halves = np.array([s.half_extents for s in self.statics])
                cs = np.array([(math.cos(s.rotation), math.sin(s.rotation))
                               for s in self.statics])
            else:
                centers = np.empty((0, 2))
                halves = np.empty((0, 2))
                cs = np.empty((0, 2))
            self._static_arrays = (centers, halves, cs)
        return self._static_arrays


@dataclass
class SimConfig:
    dt: float = 0.05            # seconds per tick
    a_max: float = 6.0          # acceleration command bound, m/s^2
    quad_radius: float = 0.15   # collision disc radius
    step_limit: int = 2000      # ticks per episode
    n_dynamic: int = 5
    wedge_width: float = math.pi / 2  # lidar wedge per tick
    d_max: float = 10.0         # lidar range
    quad_altitude: float = 1.0
    rng_seed: int = 0
    arena_side_min: float = 10.0
    arena_side_max: float = 20.0
    static_count_min: int = 6
    static_count_max: int = 14
    static_half_extent_min: float = 0.05
    static_half_extent_max: float = 1.0
    dyn_speed_min: float = 1.0
    dyn_speed_max: float = 6.0
    dyn_radius_min: float = 0.05
    dyn_radius_max: float = 0.5
    dyn_churn_period: float = 0.0  # seconds; > 0 re-randomizes velocities
    walls_in_proximity: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.a_max <= 0:
            raise ValueError("a_max must be > 0")
        if self.step_limit < 1:
            raise ValueError("step_limit must be >= 1")


@dataclass
class WorldState:
    quad: QuadState
    arena: Arena
    cfg: SimConfig
    tick: int = 0
    wedge_start: float = 0.0
    next_frame_id: int = 0


@dataclass
class StepOutcome:
    state: WorldState
    collided: bool
    reached_step_limit: bool
    frame: PointFrame


def _sample_clear_point(rng, side: float, statics, clearance: float,
                        margin: float, attempts: int = 1000) -> np.ndarray:
    for _ in range(attempts):
        p = rng.uniform(margin, side - margin, size=2)
        if all(point_rect_distance(p, s.center, s.half_extents, s.rotation) >= clearance
               for s in statics):
            return p
    raise ArenaGenerationError(
        f"no point with {clearance} m clearance found in {attempts} attempts "
        "(arena too dense)")


def generate_arena(rng: np.random.Generator, cfg: SimConfig) -> Arena:
    """Randomized walled arena; identical for identical generator state."""
    side = rng.uniform(cfg.arena_side_min, cfg.arena_side_max)
    n_static = int(rng.integers(cfg.static_count_min, cfg.static_count_max + 1))
    statics = []
    for _ in range(n_static):
        center = rng.uniform(0.0, side, size=2)
        half = rng.uniform(cfg.static_half_extent_min, cfg.static_half_extent_max, size=2)
        rotation = rng.uniform(0.0, TWO_PI)
        statics.append(StaticObstacle(center, half, rotation))
    margin = min(0.5, side / 4)
    start = _sample_clear_point(rng, side, statics, clearance=1.0, margin=margin)
    goal = _sample_clear_point(rng, side, statics, clearance=1.0, margin=margin)
    arena = Arena(side=side, statics=statics, dynamics=[], goal=goal, start=start,
                  dyn_speed_band=(cfg.dyn_speed_min, cfg.dyn_speed_max),
                  dyn_radius_band=(cfg.dyn_radius_min, cfg.dyn_radius_max))
    for _ in range(cfg.n_dynamic):
        arena.dynamics.append(reset_dynamic_obstacle(None, start, arena, rng))
    return arena


def reset_dynamic_obstacle(obs: Optional[DynamicObstacle], quad_pos, arena: Arena,
                           rng: np.random.Generator) -> DynamicObstacle:
    """Respawn a dynamic obstacle on the arena perimeter.

    With probability 0.5 its velocity aims exactly at the quadrotor, otherwise
    it points in a uniformly random inward direction. Speed and radius are
    resampled from the arena's bands.
    """
    side = arena.side
    u = rng.uniform(0.0, 4.0 * side)
    edge = int(u // side)
    along = u - edge * side
    if edge == 0:
        pos, inward = np.array([along, 0.0]), np.array([0.0, 1.0])
    elif edge == 1:
        pos, inward = np.array([side, along]), np.array([-1.0, 0.0])
    elif edge == 2:
        pos, inward = np.array([side - along, side]), np.array([0.0, -1.0])
    else:
        pos, inward = np.array([0.0, side - along]), np.array([1.0, 0.0])

    radius = rng.uniform(arena.dyn_radius_band[0], arena.dyn_radius_band[1])
    speed = rng.uniform(arena.dyn_speed_band[0], arena.dyn_speed_band[1])
    if rng.random() < 0.5:
        to_quad = np.asarray(quad_pos, dtype=float) - pos
        norm = math.hypot(to_quad[0], to_quad[1])
        direction = inward if norm == 0.0 else to_quad / norm
    else:
        phi = rng.uniform(-math.pi / 2, math.pi / 2)
        c, s = math.cos(phi), math.sin(phi)
        direction = np.array([c * inward[0] - s * inward[1],
                              s * inward[0] + c * inward[1]])
    return DynamicObstacle(center=pos, radius=radius, velocity=speed * direction)


def nearest_obstacle_distance(state: WorldState):
    """Surface distance from the quadrotor disc to the closest static obstacle.

    Walls count as obstacles when configured (default). Returns (distance,
    identity) where identity is the StaticObstacle, the string "wall", or None
    for an empty scene (distance then is the 10 * d_max sentinel).
    """
    cfg = state.cfg
    p = state.quad.position
    best = math.inf
    which = None
    for s in state.arena.statics:
        d = point_rect_distance(p, s.center, s.half_extents, s.rotation)
        if d < best:
            best, which = d, s
    if cfg.walls_in_proximity:
        side = state.arena.side
        d_wall = min(p[0], p[1], side - p[0], side - p[1])
        if d_wall < best:
            best, which = d_wall, WALL
    if which is None:
        return 10.0 * cfg.d_max, None
    return max(0.0, best - cfg.quad_radius), which


def check_collision(state: WorldState) -> bool:
    cfg = state.cfg
    p = state.quad.position
    r = cfg.quad_radius
    side = state.arena.side
    if p[0] <= r or p[1] <= r or p[0] >= side - r or p[1] >= side - r:
        return True
    for s in state.arena.statics:
        if point_rect_distance(p, s.center, s.half_extents, s.rotation) <= r:
            return True
    for d in state.arena.dynamics:
        if math.hypot(p[0] - d.center[0], p[1] - d.center[1]) <= r + d.radius:
            return True
    return False


def lidar_scan(state: WorldState, wedge_start: float, wedge_width: float,
               cfg: SimConfig) -> PointFrame:
    """Cast one ray per degree across the wedge; first hits become points.

    Hits beyond d_max are dropped; hit points carry the quadrotor altitude so
    they pass the encoder's flight-band filter.
    """
    if not 0.0 < wedge_width <= TWO_PI:
        raise ValueError("wedge_width must be in (0, 2*pi]")
    n_rays = max(1, int(round(math.degrees(wedge_width))))
    angles = wedge_start + (np.arange(n_rays) + 0.5) * (wedge_width / n_rays)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    origin = state.quad.position

    centers, halves, cs = state.arena.static_arrays()
    t = ray_rects_hits(origin, dirs, centers, halves, cs)
    dyn = state.arena.dynamics
    if dyn:
        t = np.minimum(t, ray_circles_hits(
            origin, dirs,
            np.array([d.center for d in dyn]),
            np.array([d.radius for d in dyn])))
    t = np.minimum(t, ray_box_exit(origin, dirs, state.arena.side))

    hit = t <= cfg.d_max
    pts = origin[None, :] + t[hit, None] * dirs[hit]
    frame_pts = np.column_stack([pts, np.full(pts.shape[0], state.quad.z_q)])
    return PointFrame(state.next_frame_id, frame_pts)


def emit_scan(state: WorldState) -> PointFrame:
    """Scan the pending wedge and advance the wedge phase and frame counter."""
    frame = lidar_scan(state, state.wedge_start, state.cfg.wedge_width, state.cfg)
    state.wedge_start = math.fmod(state.wedge_start + state.cfg.wedge_width, TWO_PI)
    state.next_frame_id += 1
    return frame


def step(state: WorldState, action, cfg: SimConfig,
         rng: np.random.Generator) -> StepOutcome:
    """Advance one tick: apply the acceleration command, move obstacles,
    detect collisions, and emit the lidar wedge for the new pose."""
    a = np.asarray(action, dtype=float)
    if a.shape != (2,) or not np.isfinite(a).all():
        raise ValueError(f"action must be a finite 2-vector, got {a!r}")
    norm = math.hypot(a[0], a[1])
    if norm > cfg.a_max:
        a = a * (cfg.a_max / norm)

    quad = state.quad
    v = quad.velocity + a * cfg.dt
    p = quad.position + v * cfg.dt
    new_quad = QuadState(position=p, velocity=v, prev_accel=a, z_q=quad.z_q)

    arena = state.arena
    side = arena.side
    churn_ticks = 0
    if cfg.dyn_churn_period > 0:
        churn_ticks = max(1, int(round(cfg.dyn_churn_period / cfg.dt)))
    for i, d in enumerate(arena.dynamics):
        d.center = d.center + d.velocity * cfg.dt
        if not (0.0 <= d.center[0] <= side and 0.0 <= d.center[1] <= side):
            arena.dynamics[i] = reset_dynamic_obstacle(d, p, arena, rng)
        elif churn_ticks and (state.tick + 1) % churn_ticks == 0:
            speed = rng.uniform(arena.dyn_speed_band[0], arena.dyn_speed_band[1])
            phi = rng.uniform(0.0, TWO_PI)
            d.velocity = speed * np.array([math.cos(phi), math.sin(phi)])

    new_state = WorldState(quad=new_quad, arena=arena, cfg=cfg,
                           tick=state.tick + 1,
                           wedge_start=state.wedge_start,
                           next_frame_id=state.next_frame_id)
    collided = check_collision(new_state)
    reached_limit = new_state.tick >= cfg.step_limit
    frame = emit_scan(new_state)
    return StepOutcome(state=new_state, collided=collided,
                       reached_step_limit=reached_limit, frame=frame)


def initial_state(arena: Arena, cfg: SimConfig) -> WorldState:
    quad = QuadState(position=arena.start.copy(), velocity=np.zeros(2),
                     prev_accel=np.zeros(2), z_q=cfg.quad_altitude)
    return WorldState(quad=quad, arena=arena, cfg=cfg)


# ----------------------------------------------------------------------------
# snapshots and logs

def arena_to_dict(arena: Arena, seed=None) -> dict:
    return {
        "side": arena.side,
        "statics": [{"center": list(map(float, s.center)),
                     "half_extents": list(map(float, s.half_extents)),
                     "rotation": float(s.rotation)} for s in arena.statics],
        "dynamics": [{"center": list(map(float, d.center)),
                      "radius": float(d.radius),
                      "velocity": list(map(float, d.velocity))} for d in arena.dynamics],
        "goal": list(map(float, arena.goal)),
        "start": list(map(float, arena.start)),
        "dyn_speed_band": list(arena.dyn_speed_band),
        "dyn_radius_band": list(arena.dyn_radius_band),
        "seed": seed,
    }


def arena_from_dict(data: dict) -> Arena:
    return Arena(
        side=float(data["side"]),
        statics=[StaticObstacle(np.array(s["center"], dtype=float),
                                np.array(s["half_extents"], dtype=float),
                                float(s["rotation"])) for s in data["statics"]],
        dynamics=[DynamicObstacle(np.array(d["center"], dtype=float),
                                  float(d["radius"]),
                                  np.array(d["velocity"], dtype=float))
                  for d in data["dynamics"]],
        goal=np.array(data["goal"], dtype=float),
        start=np.array(data["start"], dtype=float),
        dyn_speed_band=tuple(data.get("dyn_speed_band", (1.0, 6.0))),
        dyn_radius_band=tuple(data.get("dyn_radius_band", (0.05, 0.5))),
    )


def save_arena(arena: Arena, path, seed=None) -> None:
    with open(path, "w") as fh:
        json.dump(arena_to_dict(arena, seed=seed), fh, indent=2)


def load_arena(path) -> Arena:
    with open(path) as fh:
        return arena_from_dict(json.load(fh))


EPISODE_LOG_COLUMNS = ["tick", "px", "py", "vx", "vy", "ax", "ay", "reward", "collided"]


class EpisodeLog:
    """Per-tick trajectory rows in the episode CSV schema."""

    def __init__(self):
        self.rows: list[tuple] = []

    def record(self, tick: int, quad: QuadState, reward: float, collided: bool):
        self.rows.append((tick,
                          float(quad.position[0]), float(quad.position[1]),
                          float(quad.velocity[0]), float(quad.velocity[1]),
                          float(quad.prev_accel[0]), float(quad.prev_accel[1]),
                          float(reward), int(collided)))

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(EPISODE_LOG_COLUMNS)
            for row in self.rows:
                writer.writerow([row[0]] + [repr(v) for v in row[1:8]] + [row[8]])


def load_episode_log(path) -> list[dict]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EPISODE_LOG_COLUMNS:
            raise ValueError(f"unexpected episode log columns: {reader.fieldnames}")
        for row in reader:
            out.append({
                "tick": int(row["tick"]),
                "px": float(row["px"]), "py": float(row["py"]),
                "vx": float(row["vx"]), "vy": float(row["vy"]),
                "ax": float(row["ax"]), "ay": float(row["ay"]),
                "reward": float(row["reward"]),
                "collided": bool(int(row["collided"])),
            })
    return out

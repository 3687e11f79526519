"""Synthetic spinning-radar sequences with ground truth.

Worlds are made of reflective wall segments and point reflectors. Each azimuth
of a sweep is ray cast from the sensor pose at that azimuth's measurement time,
so moving sensors produce motion-distorted scans.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .geometry import Pose2, Velocity2, compose_arrays, wrap_angles
from .motion import time_offsets
from .radar_io import PolarScan, Trajectory


class SimulationError(ValueError):
    pass


class WorldParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class World:
    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 4)))
    segment_reflectivity: np.ndarray = field(default_factory=lambda: np.zeros(0))
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    point_reflectivity: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bounds: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        self.segments = np.asarray(self.segments, dtype=float).reshape(-1, 4)
        self.segment_reflectivity = np.asarray(self.segment_reflectivity, dtype=float).reshape(-1)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.point_reflectivity = np.asarray(self.point_reflectivity, dtype=float).reshape(-1)
        if len(self.segment_reflectivity) != len(self.segments):
            raise ValueError("one reflectivity per segment required")
        if len(self.point_reflectivity) != len(self.points):
            raise ValueError("one reflectivity per point required")
        if np.any(self.segment_reflectivity <= 0) or np.any(self.point_reflectivity <= 0):
            raise ValueError("reflectivity must be positive")
        if self.bounds is None:
            xs = np.concatenate((self.segments[:, [0, 2]].ravel(), self.points[:, 0], [0.0]))
            ys = np.concatenate((self.segments[:, [1, 3]].ravel(), self.points[:, 1], [0.0]))
            self.bounds = (float(xs.min()) - 1.0, float(ys.min()) - 1.0,
                           float(xs.max()) + 1.0, float(ys.max()) + 1.0)

    def contains(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.bounds
        return x0 <= x <= x1 and y0 <= y <= y1

    def add_segment(self, x1, y1, x2, y2, refl=1.0) -> None:
        self.segments = np.vstack((self.segments, [x1, y1, x2, y2]))
        self.segment_reflectivity = np.append(self.segment_reflectivity, refl)

    def add_point(self, x, y, refl=1.0) -> None:
        self.points = np.vstack((self.points, [x, y]))
        self.point_reflectivity = np.append(self.point_reflectivity, refl)


def parse_world(text: str) -> World:
    """Parse ``SEG x1 y1 x2 y2 refl`` / ``PT x y refl`` / ``BOUNDS x0 y0 x1 y1`` lines."""
    segs, srefl, pts, prefl = [], [], [], []
    bounds = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *vals = line.split()
        try:
            nums = [float(v) for v in vals]
        except ValueError:
            raise WorldParseError(lineno, f"non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in nums):
            raise WorldParseError(lineno, "non-finite value")
        tag = tag.upper()
        if tag == "SEG":
            if len(nums) != 5:
                raise WorldParseError(lineno, "SEG needs x1 y1 x2 y2 refl")
            if nums[4] <= 0:
                raise WorldParseError(lineno, "reflectivity must be positive")
            segs.append(nums[:4])
            srefl.append(nums[4])
        elif tag == "PT":
            if len(nums) != 3:
                raise WorldParseError(lineno, "PT needs x y refl")
            if nums[2] <= 0:
                raise WorldParseError(lineno, "reflectivity must be positive")
            pts.append(nums[:2])
            prefl.append(nums[2])
        elif tag == "BOUNDS":
            if len(nums) != 4 or nums[0] >= nums[2] or nums[1] >= nums[3]:
                raise WorldParseError(lineno, "BOUNDS needs x0 y0 x1 y1 with x0<x1, y0<y1")
            bounds = tuple(nums)
        else:
            raise WorldParseError(lineno, f"unknown record {tag!r}")
    return World(np.array(segs).reshape(-1, 4), np.array(srefl), np.array(pts).reshape(-1, 2),
                 np.array(prefl), bounds)


def read_world(path) -> World:
    return parse_world(FsPath(path).read_text())


def format_world(world: World) -> str:
    lines = []
    if world.bounds is not None:
        lines.append("BOUNDS " + " ".join(repr(float(v)) for v in world.bounds))
    for s, r in zip(world.segments, world.segment_reflectivity):
        lines.append("SEG " + " ".join(repr(float(v)) for v in (*s, r)))
    for p, r in zip(world.points, world.point_reflectivity):
        lines.append("PT " + " ".join(repr(float(v)) for v in (*p, r)))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SimConfig:
    na: int = 400
    nr: int = 1000
    gamma: float = 0.1
    sweep_duration: float = 0.25
    base_intensity: float = 9000.0
    range_falloff_exponent: float = 1.0
    speckle_sigma: float = 0.15
    noise_floor_mean: float = 8.0
    multipath_gain: float = 0.1
    beam_width: float = math.radians(1.8)
    beam_samples: int = 5
    incidence_exponent: float = 0.5
    point_radius: float = 0.25
    range_spread: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.na < 1 or self.nr < 1 or not self.gamma > 0 or not self.sweep_duration > 0:
            raise ValueError("na, nr, gamma and sweep_duration must be positive")
        if not 0.0 <= self.multipath_gain <= 1.0:
            raise ValueError("multipath_gain must lie in [0, 1]")
        if self.beam_samples < 1 or self.beam_width < 0:
            raise ValueError("beam_samples >= 1 and beam_width >= 0 required")

    def noiseless(self) -> "SimConfig":
        return replace(self, speckle_sigma=0.0, noise_floor_mean=0.0, multipath_gain=0.0)


# --- ray casting -------------------------------------------------------------

def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _cast(origin: np.ndarray, direction: np.ndarray, world: World, point_radius: float,
          skip_segment: np.ndarray | None = None):
    """First hit per ray: ``(range, reflectivity, segment index or -1, cos incidence)``."""
    n = len(origin)
    best = np.full(n, np.inf)
    refl = np.zeros(n)
    seg_idx = np.full(n, -1)
    cos_inc = np.ones(n)
    ox, oy = origin[:, 0:1], origin[:, 1:2]
    dx, dy = direction[:, 0:1], direction[:, 1:2]
    if len(world.segments):
        px, py = world.segments[None, :, 0], world.segments[None, :, 1]
        ex, ey = world.segments[None, :, 2] - px, world.segments[None, :, 3] - py
        den = _cross(dx, dy, ex, ey)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = _cross(px - ox, py - oy, ex, ey) / den
            u = _cross(px - ox, py - oy, dx, dy) / den
        valid = (np.abs(den) > 1e-12) & (t > 1e-6) & (u >= 0.0) & (u <= 1.0)
        if skip_segment is not None:
            valid &= np.arange(len(world.segments))[None, :] != skip_segment[:, None]
        t = np.where(valid, t, np.inf)
        j = np.argmin(t, axis=1)
        tj = t[np.arange(n), j]
        hit = np.isfinite(tj)
        best = np.where(hit, tj, best)
        seg_idx = np.where(hit, j, -1)
        refl = np.where(hit, world.segment_reflectivity[j], 0.0)
        ux, uy = ex[0, j], ey[0, j]
        seg_len = np.hypot(ux, uy)
        cos_inc = np.where(hit, np.abs(_cross(direction[:, 0], direction[:, 1], ux, uy)) / seg_len, 1.0)
    if len(world.points):
        qx, qy = world.points[None, :, 0] - ox, world.points[None, :, 1] - oy
        along = qx * dx + qy * dy
        perp = np.abs(_cross(dx, dy, qx, qy))
        valid = (along > 1e-6) & (perp <= point_radius)
        t = np.where(valid, along, np.inf)
        j = np.argmin(t, axis=1)
        tj = t[np.arange(n), j]
        closer = tj < best
        best = np.where(closer, tj, best)
        refl = np.where(closer, world.point_reflectivity[j], refl)
        seg_idx = np.where(closer, -1, seg_idx)
        cos_inc = np.where(closer, 1.0, cos_inc)
    return best, refl, seg_idx, cos_inc


def _accumulate(z: np.ndarray, rows: np.ndarray, rng_m: np.ndarray, amp: np.ndarray, cfg: SimConfig):
    ok = np.isfinite(rng_m) & (amp > 0)
    rows, rng_m, amp = rows[ok], rng_m[ok], amp[ok]
    d = np.rint(rng_m / cfg.gamma).astype(np.int64)
    for offset, gain in ((0, 1.0), (-1, cfg.range_spread), (1, cfg.range_spread)):
        if gain <= 0:
            continue
        dd = d + offset
        inside = (dd >= 1) & (dd <= cfg.nr)
        np.add.at(z, (rows[inside], dd[inside] - 1), gain * amp[inside])


def render_from_poses(world: World, poses: np.ndarray, cfg: SimConfig,
                      rng: np.random.Generator | None = None, stamp: float = 0.0) -> PolarScan:
    """Render a sweep given the sensor pose ``(na, 3)`` at every azimuth's measurement time."""
    poses = np.asarray(poses, dtype=float).reshape(cfg.na, 3)
    s = cfg.beam_samples
    if s > 1 and cfg.beam_width > 0:
        offsets = np.linspace(-cfg.beam_width, cfg.beam_width, s)
        gains = np.exp(-0.5 * (offsets / (0.5 * cfg.beam_width)) ** 2)
    else:
        offsets, gains = np.zeros(1), np.ones(1)
    rows = np.repeat(np.arange(cfg.na), len(offsets))
    angle = (poses[rows, 2] + 2.0 * np.pi * rows / cfg.na + np.tile(offsets, cfg.na))
    gain = np.tile(gains, cfg.na)
    origin = poses[rows, :2]
    direction = np.stack((np.cos(angle), np.sin(angle)), axis=-1)

    z = np.zeros((cfg.na, cfg.nr))
    rng_m, refl, seg, cos_inc = _cast(origin, direction, world, cfg.point_radius)
    falloff = np.maximum(rng_m, 1.0) ** cfg.range_falloff_exponent
    amp = cfg.base_intensity * refl * gain * cos_inc ** cfg.incidence_exponent / falloff
    _accumulate(z, rows, rng_m, amp, cfg)

    if cfg.multipath_gain > 0 and len(world.segments):
        wall = (seg >= 0) & np.isfinite(rng_m)
        if np.any(wall):
            w_rows = rows[wall]
            sj = seg[wall]
            ex = world.segments[sj, 2] - world.segments[sj, 0]
            ey = world.segments[sj, 3] - world.segments[sj, 1]
            nrm = np.stack((-ey, ex), axis=-1) / np.hypot(ex, ey)[:, None]
            d_in = direction[wall]
            d_out = d_in - 2.0 * np.einsum("ij,ij->i", d_in, nrm)[:, None] * nrm
            hit_pt = origin[wall] + rng_m[wall, None] * d_in
            r2, refl2, _, cos2 = _cast(hit_pt, d_out, world, cfg.point_radius, skip_segment=sj)
            total = rng_m[wall] + r2
            amp2 = (cfg.multipath_gain * cfg.base_intensity * refl[wall] * refl2 * gain[wall]
                    * cos2 ** cfg.incidence_exponent / np.maximum(total, 1.0) ** cfg.range_falloff_exponent)
            _accumulate(z, w_rows, total, amp2, cfg)

    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if cfg.speckle_sigma > 0:
        z *= np.maximum(0.0, 1.0 + cfg.speckle_sigma * rng.standard_normal(z.shape))
    if cfg.noise_floor_mean > 0:
        z += rng.exponential(cfg.noise_floor_mean, z.shape)
    z = np.clip(np.rint(z), 0, 65535).astype(np.uint16)
    return PolarScan(z, cfg.gamma, cfg.sweep_duration, stamp)


def render_scan(world: World, pose_at_center: Pose2, velocity: Velocity2, cfg: SimConfig,
                rng: np.random.Generator | None = None, stamp: float = 0.0) -> PolarScan:
    """Render one sweep of a sensor moving at constant body ``velocity``.

    The sensor pose for azimuth ``a`` is ``pose_at_center ⊕ velocity * dt(a)``.
    """
    if not world.contains(pose_at_center.x, pose_at_center.y):
        raise SimulationError(f"pose ({pose_at_center.x}, {pose_at_center.y}) outside world bounds")
    dt = time_offsets(np.arange(cfg.na), cfg.na, cfg.sweep_duration)
    inc = np.stack((velocity.vx * dt, velocity.vy * dt, velocity.omega * dt), axis=-1)
    poses = compose_arrays(np.broadcast_to(pose_at_center.as_array(), inc.shape), inc)
    return render_from_poses(world, poses, cfg, rng, stamp)


# --- trajectories ------------------------------------------------------------

@dataclass(frozen=True)
class _Piece:
    length: float
    curvature: float


@dataclass
class Path:
    """Arc-length parameterised planar path made of straight and circular pieces."""

    start: Pose2
    pieces: list[_Piece]
    closed: bool = False

    def __post_init__(self):
        lengths = np.array([p.length for p in self.pieces], dtype=float)
        self._s0 = np.concatenate(([0.0], np.cumsum(lengths)))
        poses = [self.start.as_array()]
        for p in self.pieces:
            poses.append(self._advance(poses[-1], p.length, p.curvature))
        self._p0 = np.array(poses)

    @staticmethod
    def _advance(pose, ds, kappa):
        pose = np.asarray(pose, dtype=float)
        ds = np.asarray(ds, dtype=float)
        kappa = np.asarray(kappa, dtype=float)
        x, y, th = pose[..., 0], pose[..., 1], pose[..., 2]
        dth = kappa * ds
        small = np.abs(dth) < 1e-9
        safe_k = np.where(small, 1.0, kappa)
        sx = np.where(small, ds * np.cos(th + 0.5 * dth), (np.sin(th + dth) - np.sin(th)) / safe_k)
        sy = np.where(small, ds * np.sin(th + 0.5 * dth), (np.cos(th) - np.cos(th + dth)) / safe_k)
        return np.stack((x + sx, y + sy, wrap_angles(th + dth)), axis=-1)

    @property
    def length(self) -> float:
        return float(self._s0[-1])

    def _locate(self, s: np.ndarray):
        s = np.asarray(s, dtype=float)
        if self.closed:
            s = np.mod(s, self.length)
        k = np.clip(np.searchsorted(self._s0, s, side="right") - 1, 0, len(self.pieces) - 1)
        return s, k

    def pose_at(self, s) -> np.ndarray:
        """Poses ``(.., 3)`` at arc lengths ``s``; open paths extrapolate straight beyond the ends."""
        s_in = np.asarray(s, dtype=float)
        s, k = self._locate(s_in)
        kappa = np.array([p.curvature for p in self.pieces])[k]
        ds = s - self._s0[k]
        if not self.closed:
            kappa = np.where((s_in < 0) | (s_in > self.length), 0.0, kappa)
            below = s_in < 0
            ds = np.where(below, s_in, ds)
            k = np.where(below, 0, k)
        return self._advance(self._p0[k], ds, kappa)

    def curvature_at(self, s) -> np.ndarray:
        s_in = np.asarray(s, dtype=float)
        s, k = self._locate(s_in)
        kappa = np.array([p.curvature for p in self.pieces])[k]
        if not self.closed:
            kappa = np.where((s_in < 0) | (s_in > self.length), 0.0, kappa)
        return kappa


def straight_path(length: float, start: Pose2 = Pose2()) -> Path:
    return Path(start, [_Piece(float(length), 0.0)], closed=False)


def rounded_rectangle(width: float, height: float, corner_radius: float,
                      center: tuple[float, float] = (0.0, 0.0)) -> Path:
    """Counter-clockwise closed loop starting mid-way along the bottom edge, heading +x."""
    r = corner_radius
    if width <= 2 * r or height <= 2 * r:
        raise ValueError("corner radius too large for rectangle")
    sx, sy = width - 2 * r, height - 2 * r
    k = 1.0 / r
    quarter = 0.5 * math.pi * r
    pieces = [_Piece(sx / 2, 0.0), _Piece(quarter, k), _Piece(sy, 0.0), _Piece(quarter, k),
              _Piece(sx, 0.0), _Piece(quarter, k), _Piece(sy, 0.0), _Piece(quarter, k), _Piece(sx / 2, 0.0)]
    start = Pose2(center[0], center[1] - height / 2, 0.0)
    return Path(start, pieces, closed=True)


def loop_with_perimeter(perimeter: float, height: float = 100.0, corner_radius: float = 10.0) -> Path:
    width = (perimeter + (8.0 - 2.0 * math.pi) * corner_radius) / 2.0 - height
    return rounded_rectangle(width, height, corner_radius)


@dataclass(frozen=True)
class SpeedProfile:
    """``v(t) = mean * (1 + amplitude * sin(2 pi t / period))``."""

    mean: float = 5.0
    amplitude: float = 0.0
    period: float = 20.0

    def speed(self, t):
        return self.mean * (1.0 + self.amplitude * np.sin(2.0 * np.pi * np.asarray(t, float) / self.period))

    def distance(self, t):
        t = np.asarray(t, dtype=float)
        w = 2.0 * np.pi / self.period
        return self.mean * (t + self.amplitude * (1.0 - np.cos(w * t)) / w)

    def time_for(self, s: float) -> float:
        if s <= 0:
            return 0.0
        lo, hi = 0.0, s / (self.mean * max(1e-6, 1.0 - abs(self.amplitude))) + self.period
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.distance(mid) < s:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass
class SimTrajectory:
    path: Path
    speed: SpeedProfile = field(default_factory=SpeedProfile)
    time_scale: float = 1.0
    duration: float | None = None

    def arc_length(self, t):
        return self.speed.distance(np.asarray(t, dtype=float) * self.time_scale)

    def pose(self, t) -> np.ndarray:
        return self.path.pose_at(self.arc_length(t))

    def velocity(self, t: float) -> Velocity2:
        v = float(self.speed.speed(t * self.time_scale)) * self.time_scale
        return Velocity2(v, 0.0, v * float(self.path.curvature_at(self.arc_length(t))))

    def tick_count(self, dt: float) -> int:
        """Number of sweeps; closed loops include the sweep back at the start."""
        if self.duration is not None:
            return int(round(self.duration / dt))
        total = self.speed.time_for(self.path.length) / self.time_scale
        if self.path.closed:
            return int(round(total / dt)) + 1
        n = int(math.floor(total / dt + 1e-9))
        return n + 1 if self.arc_length(n * dt) < self.path.length - 1e-9 else n

    def fitted(self, dt: float) -> "SimTrajectory":
        """For closed loops, stretch time so the final sweep lands exactly on the start."""
        if not self.path.closed or self.duration is not None:
            return self
        total = self.speed.time_for(self.path.length)
        n = max(1, int(round(total / dt)))
        return SimTrajectory(self.path, self.speed, total / (n * dt), self.duration)


def generate_sequence(world: World, traj: SimTrajectory, cfg: SimConfig) -> tuple[list[PolarScan], Trajectory]:
    """Render one scan per sweep along ``traj``; ground truth is the pose at each sweep centre."""
    dt = cfg.sweep_duration
    traj = traj.fitted(dt)
    n = traj.tick_count(dt)
    rng = np.random.default_rng(cfg.seed)
    offsets = time_offsets(np.arange(cfg.na), cfg.na, dt)
    scans, stamps, gt = [], [], []
    for i in range(n):
        t = i * dt
        centre = traj.pose(t)
        if i == n - 1 and traj.path.closed:
            centre = traj.path.start.as_array()
        if not world.contains(centre[0], centre[1]):
            raise SimulationError(f"trajectory leaves world bounds at t={t:.6f} s")
        poses = traj.pose(t + offsets)
        scans.append(render_from_poses(world, poses, cfg, rng, stamp=t))
        stamps.append(t)
        gt.append(centre)
    return scans, Trajectory(np.array(stamps), np.array(gt).reshape(-1, 3))


# --- stock worlds --------------------------------------------------------------

def _facade(world: World, p0, p1, rng, refl=1.0, jog=1.5, min_len=8.0, max_len=25.0, gap=4.0):
    """Split a straight building line into facades with gaps and small setbacks."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    total = float(np.linalg.norm(p1 - p0))
    u = (p1 - p0) / total
    n = np.array([-u[1], u[0]])
    s = 0.0
    while s < total:
        length = min(rng.uniform(min_len, max_len), total - s)
        off = rng.uniform(-jog, jog)
        a = p0 + u * s + n * off
        b = p0 + u * (s + length) + n * off
        world.add_segment(*a, *b, refl * rng.uniform(0.7, 1.3))
        if rng.random() < 0.6 and s + length < total:
            # side wall towards the setback of the next facade
            c = b + n * rng.uniform(2.0, 5.0) * np.sign(rng.uniform(-1, 1))
            world.add_segment(*b, *c, refl * rng.uniform(0.6, 1.0))
        s += length + rng.uniform(1.0, gap)


def urban_world(seed: int = 0, perimeter: float = 500.0, height: float = 100.0, corner_radius: float = 10.0,
                road_half_width: float = 9.0) -> tuple[World, Path]:
    """A 200 x 200 m block around a rounded-rectangle loop, plus the loop itself."""
    rng = np.random.default_rng(seed)
    path = loop_with_perimeter(perimeter, height, corner_radius)
    width = (perimeter + (8.0 - 2.0 * math.pi) * corner_radius) / 2.0 - height
    hw, hh = width / 2.0, height / 2.0
    world = World(bounds=(-100.0, -100.0, 100.0, 100.0))
    # outer boundary
    for a, b in (((-99, -99), (99, -99)), ((99, -99), (99, 99)), ((99, 99), (-99, 99)), ((-99, 99), (-99, -99))):
        world.add_segment(*a, *b, 0.8)
    # inner block facades
    i0, i1 = hw - road_half_width, hh - road_half_width
    corners_in = [(-i0, -i1), (i0, -i1), (i0, i1), (-i0, i1)]
    for a, b in zip(corners_in, corners_in[1:] + corners_in[:1]):
        _facade(world, a, b, rng)
    # outer facades
    o0, o1 = hw + road_half_width, hh + road_half_width
    corners_out = [(-o0, -o1), (o0, -o1), (o0, o1), (-o0, o1)]
    for a, b in zip(corners_out, corners_out[1:] + corners_out[:1]):
        _facade(world, b, a, rng)
    # poles and trees along both kerbs
    s = 0.0
    while s < path.length:
        p = path.pose_at(s)
        side = 1.0 if rng.random() < 0.5 else -1.0
        off = side * rng.uniform(5.0, 7.5)
        world.add_point(p[0] - off * math.sin(p[2]), p[1] + off * math.cos(p[2]), rng.uniform(0.6, 1.2))
        s += rng.uniform(6.0, 14.0)
    # scattered clutter inside the blocks
    for _ in range(60):
        x, y = rng.uniform(-95, 95), rng.uniform(-95, 95)
        if abs(x) < o0 + 2 and abs(y) < o1 + 2 and not (abs(x) < i0 - 2 and abs(y) < i1 - 2):
            continue
        world.add_point(x, y, rng.uniform(0.5, 1.5))
    return world, path


def street_world(seed: int = 0, length: float = 160.0, half_width: float = 8.0,
                 pole_spacing: float = 6.0) -> tuple[World, Path]:
    """Long straight street lined by facades on both sides, with kerbside poles."""
    rng = np.random.default_rng(seed)
    world = World(bounds=(-40.0, -40.0, length + 40.0, 40.0))
    x0, x1 = -35.0, length + 35.0
    _facade(world, (x0, -half_width), (x1, -half_width), rng, jog=1.0)
    _facade(world, (x1, half_width), (x0, half_width), rng, jog=1.0)
    for x in np.arange(x0, x1, pole_spacing):
        side = 1.0 if rng.random() < 0.5 else -1.0
        world.add_point(x + rng.uniform(-1.5, 1.5), side * (half_width - rng.uniform(1.5, 3.0)), rng.uniform(0.6, 1.2))
    world.add_segment(x0 - 3.0, -half_width, x0 - 3.0, half_width, 1.0)
    world.add_segment(x1 + 3.0, -half_width, x1 + 3.0, half_width, 1.0)
    return world, straight_path(length, Pose2(0.0, 0.0, 0.0))

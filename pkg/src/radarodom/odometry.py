"""Incremental radar odometry: filter, compensate, extract, predict, register, update."""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .features import FeatureConfig, SurfacePointSet, compute_surface_points
from .filtering import CaCfarConfig, KStrongestConfig, apply_filter
from .geometry import Pose2, Velocity2, relative
from .motion import compensate, predict
from .radar_io import PolarScan, Trajectory, to_cartesian
from .registration import RegistrationConfig, RegistrationResult, register

STAGES = ("filter", "compensate", "features", "register")


@dataclass(frozen=True)
class OdometryConfig:
    filter: KStrongestConfig | CaCfarConfig = field(default_factory=KStrongestConfig)
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    registration: RegistrationConfig = field(default_factory=RegistrationConfig)
    keyframe_count_s: int = 4
    keyframe_min_dist: float = 1.5
    keyframe_min_rot: float = math.radians(5.0)
    motion_compensation: bool = True

    def __post_init__(self):
        if self.keyframe_count_s < 1:
            raise ValueError("keyframe_count_s must be >= 1")


@dataclass
class Keyframe:
    surface_points: SurfacePointSet
    pose: Pose2
    stamp: float


@dataclass
class OdometryState:
    pose: Pose2 = field(default_factory=Pose2.identity)
    velocity: Velocity2 = field(default_factory=Velocity2)
    keyframes: deque = field(default_factory=deque)
    last_stamp: float | None = None

    @property
    def initialized(self) -> bool:
        return self.last_stamp is not None


@dataclass
class ScanReport:
    """Outcome of one scan: registration result (``None`` for the bootstrap scan) plus flags."""

    registration: RegistrationResult | None
    pose: Pose2
    keyframe_added: bool
    diverged: bool
    timings: dict[str, float]
    n_points: int
    n_surface_points: int


def _stage(timings, name, t0):
    t1 = time.perf_counter()
    timings[name] = timings.get(name, 0.0) + (t1 - t0)
    return t1


def extract(scan: PolarScan, velocity: Velocity2, cfg: OdometryConfig, threads: int = 1,
            timings: dict | None = None) -> tuple[SurfacePointSet, int]:
    """Front end for one scan: filtered, compensated cloud reduced to surface points."""
    timings = {} if timings is None else timings
    t = time.perf_counter()
    det = apply_filter(scan, cfg.filter, threads)
    cloud = to_cartesian(scan, det.azimuth, det.range_bin)
    t = _stage(timings, "filter", t)
    if cfg.motion_compensation:
        cloud = compensate(cloud, velocity)
    t = _stage(timings, "compensate", t)
    surf = compute_surface_points(cloud, cfg.feature)
    _stage(timings, "features", t)
    return surf, len(cloud)


def _keyframe_due(pose: Pose2, state: OdometryState, cfg: OdometryConfig) -> bool:
    if not state.keyframes:
        return True
    delta = relative(state.keyframes[-1].pose, pose)
    return math.hypot(delta.x, delta.y) > cfg.keyframe_min_dist or abs(delta.theta) > cfg.keyframe_min_rot


def _push_keyframe(state: OdometryState, surf: SurfacePointSet, pose: Pose2, stamp: float, s: int):
    state.keyframes.append(Keyframe(surf.transformed(pose), pose, stamp))
    while len(state.keyframes) > s:
        state.keyframes.popleft()


def process_scan(state: OdometryState, scan: PolarScan, cfg: OdometryConfig,
                 threads: int = 1) -> tuple[OdometryState, ScanReport]:
    """Advance the odometry by one sweep. ``state`` is updated in place and returned."""
    timings: dict[str, float] = {k: 0.0 for k in STAGES}
    if state.initialized and not scan.stamp > state.last_stamp:
        raise ValueError(f"scan stamp {scan.stamp} not after previous stamp {state.last_stamp}")
    surf, n_points = extract(scan, state.velocity, cfg, threads, timings)

    if not state.initialized:
        state.pose = Pose2.identity()
        state.velocity = Velocity2()
        state.last_stamp = scan.stamp
        _push_keyframe(state, surf, state.pose, scan.stamp, cfg.keyframe_count_s)
        return state, ScanReport(None, state.pose, True, False, timings, n_points, len(surf))

    dt = scan.stamp - state.last_stamp
    guess = predict(state.pose, state.velocity, dt)
    t = time.perf_counter()
    targets = [kf.surface_points for kf in state.keyframes]
    result = register(surf, targets, guess, cfg.registration, threads)
    _stage(timings, "register", t)

    diverged = result.correspondence_count == 0 or (
        not result.converged and result.final_cost > result.initial_cost)
    new_pose = guess if diverged else result.pose

    step = relative(state.pose, new_pose)
    state.velocity = Velocity2(step.x / dt, step.y / dt, step.theta / dt)
    state.pose = new_pose
    state.last_stamp = scan.stamp
    added = False
    if not diverged and _keyframe_due(new_pose, state, cfg):
        _push_keyframe(state, surf, new_pose, scan.stamp, cfg.keyframe_count_s)
        added = True
    return state, ScanReport(result, new_pose, added, diverged, timings, n_points, len(surf))


@dataclass
class SequenceResult:
    trajectory: Trajectory
    reports: list[ScanReport]

    @property
    def divergences(self) -> int:
        return sum(r.diverged for r in self.reports)

    def timing_stats(self) -> dict[str, dict[str, float]]:
        stats = {}
        for name in STAGES + ("total",):
            vals = np.array([sum(r.timings.values()) if name == "total" else r.timings.get(name, 0.0)
                             for r in self.reports])
            stats[name] = {"mean": float(vals.mean()) if vals.size else 0.0,
                           "max": float(vals.max()) if vals.size else 0.0}
        return stats


def run_sequence(scans: Iterable[PolarScan], cfg: OdometryConfig, threads: int = 1) -> SequenceResult:
    """Run the odometry over a time-ordered stream of scans; never aborts on registration failure."""
    state = OdometryState()
    stamps, poses, covs, reports = [], [], [], []
    for scan in scans:
        state, report = process_scan(state, scan, cfg, threads)
        stamps.append(scan.stamp)
        poses.append(report.pose)
        if report.registration is None or report.diverged:
            covs.append(np.full((3, 3), np.nan) if report.diverged else np.zeros((3, 3)))
        else:
            covs.append(report.registration.covariance)
        reports.append(report)
    traj = Trajectory.from_poses(stamps, poses, np.array(covs).reshape(-1, 3, 3))
    return SequenceResult(traj, reports)


def with_keyframes(cfg: OdometryConfig, s: int) -> OdometryConfig:
    return replace(cfg, keyframe_count_s=s)

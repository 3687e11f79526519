"""Trajectory error metrics: KITTI segment drift, consecutive RPE with bias, and ATE."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import compose_arrays, inverse_arrays, relative_arrays, wrap_angles
from .radar_io import Trajectory

DEFAULT_SEGMENTS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)
SYNTHETIC_SEGMENTS = (25.0, 50.0, 100.0, 200.0)


class EvaluationError(ValueError):
    pass


def _poses(traj) -> np.ndarray:
    if isinstance(traj, Trajectory):
        return np.asarray(traj.poses, dtype=float)
    return np.asarray(traj, dtype=float).reshape(-1, 3)


def _check_pair(est, gt, minimum: int) -> tuple[np.ndarray, np.ndarray]:
    p, q = _poses(est), _poses(gt)
    if len(p) != len(q):
        raise EvaluationError(f"trajectory lengths differ: estimate has {len(p)} poses, ground truth has {len(q)}")
    if len(p) < minimum:
        raise EvaluationError(f"need at least {minimum} poses, got {len(p)}")
    return p, q


def path_distances(poses: np.ndarray) -> np.ndarray:
    """Cumulative travelled distance at each pose."""
    steps = np.linalg.norm(np.diff(poses[:, :2], axis=0), axis=1)
    return np.concatenate(([0.0], np.cumsum(steps)))


def relative_error(est_i, est_j, gt_i, gt_j) -> np.ndarray:
    """``(gt_i⁻¹ gt_j)⁻¹ (est_i⁻¹ est_j)`` for stacked pose rows."""
    return relative_arrays(relative_arrays(gt_i, gt_j), relative_arrays(est_i, est_j))


@dataclass
class SegmentStats:
    length: float
    count: int
    translation_error: float  # percent
    rotation_error: float  # deg/m


@dataclass
class DriftReport:
    translation_error: float = 0.0
    rotation_error: float = 0.0
    per_length: list[SegmentStats] = field(default_factory=list)
    segment_count: int = 0

    @property
    def empty(self) -> bool:
        return self.segment_count == 0


def kitti_drift(est, gt, segment_lengths: Sequence[float] = DEFAULT_SEGMENTS, stride: int = 1) -> DriftReport:
    """Average translation (%) and rotation (deg/m) error over all sub-sequences of the given lengths.

    A segment of length ``L`` starting at pose ``i`` ends at the first pose whose ground-truth
    path distance from ``i`` exceeds ``L``; errors are normalised by ``L``.
    """
    p, q = _check_pair(est, gt, 1)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    dist = path_distances(q) if len(q) else np.zeros(0)
    starts = np.arange(0, len(q), stride)
    t_all, r_all, per = [], [], []
    for length in segment_lengths:
        ends = np.searchsorted(dist, dist[starts] + length, side="right")
        ok = ends < len(q)
        i, j = starts[ok], ends[ok]
        if len(i) == 0:
            per.append(SegmentStats(float(length), 0, float("nan"), float("nan")))
            continue
        e = relative_error(p[i], p[j], q[i], q[j])
        t_err = np.hypot(e[:, 0], e[:, 1]) / length
        r_err = np.abs(e[:, 2]) / length
        t_all.append(t_err)
        r_all.append(r_err)
        per.append(SegmentStats(float(length), len(i), 100.0 * float(t_err.mean()),
                                math.degrees(float(r_err.mean()))))
    if not t_all:
        return DriftReport(float("nan"), float("nan"), per, 0)
    t_cat, r_cat = np.concatenate(t_all), np.concatenate(r_all)
    return DriftReport(100.0 * float(t_cat.mean()), math.degrees(float(r_cat.mean())), per, len(t_cat))


@dataclass
class RpeReport:
    rpe_mean: float
    bias: tuple[float, float]  # longitudinal, lateral (m)
    rotation_bias: float  # rad

    @property
    def longitudinal_bias(self) -> float:
        return self.bias[0]

    @property
    def lateral_bias(self) -> float:
        return self.bias[1]


def rpe(est, gt) -> RpeReport:
    """Mean consecutive relative pose error plus its signed mean in the ground-truth body frame."""
    p, q = _check_pair(est, gt, 2)
    e = relative_error(p[:-1], p[1:], q[:-1], q[1:])
    norms = np.hypot(e[:, 0], e[:, 1])
    return RpeReport(float(norms.mean()), (float(e[:, 0].mean()), float(e[:, 1].mean())), float(e[:, 2].mean()))


def align_se2(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form least-squares rotation ``R`` and translation ``t`` with ``R src + t ≈ dst``."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    ms, md = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - ms, dst - md
    h = a.T @ b
    s = h[0, 1] - h[1, 0]
    c = h[0, 0] + h[1, 1]
    if math.hypot(s, c) < 1e-12:
        rot = np.eye(2)
    else:
        ang = math.atan2(s, c)
        rot = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    return rot, md - rot @ ms


def ate(est, gt) -> float:
    """Position RMSE after rigid alignment of the estimate onto ground truth."""
    p, q = _check_pair(est, gt, 2)
    rot, t = align_se2(p[:, :2], q[:, :2])
    res = p[:, :2] @ rot.T + t - q[:, :2]
    return float(np.sqrt(np.mean(np.sum(res ** 2, axis=1))))


def rmse_unaligned(est, gt) -> float:
    p, q = _check_pair(est, gt, 1)
    return float(np.sqrt(np.mean(np.sum((p[:, :2] - q[:, :2]) ** 2, axis=1))))


@dataclass
class EvaluationReport:
    drift: DriftReport
    rpe: RpeReport
    ate: float
    loop_error: float  # end-point position error relative to the first pose (m)

    def rows(self) -> list[tuple[str, str, float]]:
        rows = [
            ("drift", "translation_pct", self.drift.translation_error),
            ("drift", "rotation_deg_per_m", self.drift.rotation_error),
            ("drift", "segments", float(self.drift.segment_count)),
        ]
        for s in self.drift.per_length:
            tag = f"{s.length:g}m"
            rows += [(f"drift_{tag}", "translation_pct", s.translation_error),
                     (f"drift_{tag}", "rotation_deg_per_m", s.rotation_error),
                     (f"drift_{tag}", "segments", float(s.count))]
        rows += [
            ("rpe", "mean_m", self.rpe.rpe_mean),
            ("rpe", "bias_longitudinal_m", self.rpe.bias[0]),
            ("rpe", "bias_lateral_m", self.rpe.bias[1]),
            ("rpe", "bias_rotation_rad", self.rpe.rotation_bias),
            ("ate", "rmse_m", self.ate),
            ("endpoint", "error_m", self.loop_error),
        ]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("metric", "name", "value"))
        for r in self.rows():
            w.writerow((r[0], r[1], repr(float(r[2]))))
        return buf.getvalue()

    def to_text(self) -> str:
        d = self.drift
        lines = []
        if d.empty:
            lines.append("drift: no valid segments (trajectory shorter than the smallest segment length)")
        else:
            lines.append(f"drift: translation {d.translation_error:.4f} %  rotation {d.rotation_error:.6f} deg/m"
                         f"  ({d.segment_count} segments)")
        for s in d.per_length:
            if s.count == 0:
                lines.append(f"  {s.length:7g} m: no valid segments")
            else:
                lines.append(f"  {s.length:7g} m: {s.translation_error:.4f} %  {s.rotation_error:.6f} deg/m  n={s.count}")
        r = self.rpe
        lines.append(f"rpe: mean {r.rpe_mean:.6f} m  bias long {r.bias[0]:+.6f} m  lat {r.bias[1]:+.6f} m"
                     f"  rot {r.rotation_bias:+.3e} rad")
        lines.append(f"ate: {self.ate:.6f} m")
        lines.append(f"endpoint error: {self.loop_error:.6f} m")
        return "\n".join(lines) + "\n"


def evaluate(est, gt, segment_lengths: Sequence[float] = DEFAULT_SEGMENTS, stride: int = 1) -> EvaluationReport:
    p, q = _check_pair(est, gt, 2)
    e = relative_error(p[:1], p[-1:], q[:1], q[-1:])[0]
    end = float(math.hypot(e[0], e[1]))
    return EvaluationReport(kitti_drift(p, q, segment_lengths, stride), rpe(p, q), ate(p, q), end)

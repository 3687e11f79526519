"""Polar radar scans, Cartesian point clouds and on-disk formats.

Range bins are 1-based: bin ``d`` lives in column ``d - 1`` of the intensity
matrix and sits at range ``d * gamma``. Azimuth ``a`` (0-based) points along
``2 * pi * a / na`` in the sensor frame.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .geometry import Point2, Pose2

SCAN_MAGIC = b"CFRD"
SCAN_VERSION = 1
_HEADER = struct.Struct("<4sIIIddd")


class ScanFormatError(ValueError):
    """Base class for problems reading a ``.cfrad`` file."""


class MalformedHeaderError(ScanFormatError):
    pass


class ScanDimensionError(ScanFormatError):
    pass


class TruncatedScanError(ScanFormatError):
    pass


class TrajectoryParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class PolarScan:
    intensities: np.ndarray
    gamma: float
    sweep_duration: float
    stamp: float = 0.0

    def __post_init__(self):
        z = np.asarray(self.intensities).view()
        if z.ndim != 2 or z.shape[0] < 1 or z.shape[1] < 1:
            raise ScanDimensionError(f"intensity matrix must be 2-D and non-empty, got shape {z.shape}")
        if not self.gamma > 0 or not self.sweep_duration > 0:
            raise ValueError("gamma and sweep_duration must be positive")
        if z.dtype.kind == "f" and (not np.all(np.isfinite(z)) or np.any(z < 0)):
            raise ValueError("intensities must be finite and non-negative")
        if z.dtype.kind == "i" and np.any(z < 0):
            raise ValueError("intensities must be non-negative")
        z.setflags(write=False)
        object.__setattr__(self, "intensities", z)

    @property
    def na(self) -> int:
        return self.intensities.shape[0]

    @property
    def nr(self) -> int:
        return self.intensities.shape[1]

    @property
    def max_range(self) -> float:
        return self.nr * self.gamma

    def __eq__(self, other):
        if not isinstance(other, PolarScan):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and self.sweep_duration == other.sweep_duration
            and self.stamp == other.stamp
            and self.intensities.dtype == other.intensities.dtype
            and np.array_equal(self.intensities, other.intensities)
        )


class RadarPoint(NamedTuple):
    pos: Point2
    intensity: float
    azimuth_index: int
    time_offset: float


@dataclass
class PointCloud:
    """Column-oriented cloud of radar detections in the sensor frame."""

    xy: np.ndarray
    intensity: np.ndarray
    azimuth: np.ndarray
    time_offset: np.ndarray
    stamp: float = 0.0

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        n = len(self.xy)
        self.intensity = np.asarray(self.intensity, dtype=float).reshape(n)
        self.azimuth = np.asarray(self.azimuth, dtype=np.int64).reshape(n)
        self.time_offset = np.asarray(self.time_offset, dtype=float).reshape(n)

    @classmethod
    def empty(cls, stamp: float = 0.0) -> "PointCloud":
        return cls(np.zeros((0, 2)), np.zeros(0), np.zeros(0, np.int64), np.zeros(0), stamp)

    def __len__(self) -> int:
        return len(self.xy)

    def __iter__(self) -> Iterator[RadarPoint]:
        for (x, y), z, a, dt in zip(self.xy, self.intensity, self.azimuth, self.time_offset):
            yield RadarPoint(Point2(float(x), float(y)), float(z), int(a), float(dt))

    @property
    def points(self) -> list[RadarPoint]:
        return list(self)

    def with_xy(self, xy: np.ndarray) -> "PointCloud":
        return PointCloud(xy, self.intensity, self.azimuth, self.time_offset, self.stamp)

    def subset(self, mask) -> "PointCloud":
        return PointCloud(self.xy[mask], self.intensity[mask], self.azimuth[mask],
                          self.time_offset[mask], self.stamp)


def to_cartesian(scan: PolarScan, azimuth, range_bin) -> PointCloud:
    """Convert ``(azimuth, range_bin)`` detections of ``scan`` to a point cloud.

    Intensities are copied from the scan and every point is tagged with the
    time offset of its azimuth relative to the sweep centre.
    """
    from .motion import time_offsets

    a = np.asarray(azimuth, dtype=np.int64).reshape(-1)
    d = np.asarray(range_bin, dtype=np.int64).reshape(-1)
    if a.shape != d.shape:
        raise ValueError("azimuth and range_bin must have equal length")
    if a.size and (a.min() < 0 or a.max() >= scan.na):
        raise IndexError(f"azimuth index outside [0, {scan.na})")
    if d.size and (d.min() < 1 or d.max() > scan.nr):
        raise IndexError(f"range bin outside [1, {scan.nr}]")
    theta = 2.0 * np.pi * a / scan.na
    rng = d * scan.gamma
    xy = np.stack((rng * np.cos(theta), rng * np.sin(theta)), axis=-1)
    z = scan.intensities[a, d - 1].astype(float)
    return PointCloud(xy, z, a, time_offsets(a, scan.na, scan.sweep_duration), scan.stamp)


# --- .cfrad binary scans ---------------------------------------------------

def write_scan(scan: PolarScan, path) -> None:
    z = scan.intensities
    if z.dtype != np.uint16:
        if np.any(z > 65535) or np.any(z != np.round(z)):
            raise ValueError("scan intensities must be integers in the 16-bit range")
        z = z.astype(np.uint16)
    header = _HEADER.pack(SCAN_MAGIC, SCAN_VERSION, scan.na, scan.nr,
                          float(scan.gamma), float(scan.sweep_duration), float(scan.stamp))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(z, dtype="<u2").tobytes())


def read_scan(path) -> PolarScan:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise MalformedHeaderError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, na, nr, gamma, sweep, stamp = _HEADER.unpack_from(data)
    if magic != SCAN_MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if version != SCAN_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported version {version}")
    if na == 0 or nr == 0:
        raise ScanDimensionError(f"{path}: invalid dimensions na={na} nr={nr}")
    if not (math.isfinite(gamma) and gamma > 0 and math.isfinite(sweep) and sweep > 0):
        raise MalformedHeaderError(f"{path}: gamma and sweep duration must be positive")
    expected = na * nr * 2
    payload = len(data) - _HEADER.size
    if payload < expected:
        raise TruncatedScanError(f"{path}: payload has {payload} bytes, expected {expected}")
    if payload > expected:
        raise ScanDimensionError(f"{path}: payload has {payload} bytes, header implies {expected}")
    z = np.frombuffer(data, dtype="<u2", count=na * nr, offset=_HEADER.size)
    return PolarScan(z.astype(np.uint16).reshape(na, nr), gamma, sweep, stamp)


def list_scans(directory) -> list[Path]:
    """``.cfrad`` files in ``directory``, lexicographically ordered."""
    d = Path(directory)
    if not d.exists():
        raise FileNotFoundError(f"scan directory not found: {d}")
    if not d.is_dir():
        raise NotADirectoryError(f"not a directory: {d}")
    return sorted(d.glob("*.cfrad"))


# --- trajectories ------------------------------------------------------------

@dataclass
class Trajectory:
    """Timestamped SE(2) poses, stored as an (n, 3) array ``[x, y, theta]``."""

    stamps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    poses: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    covariances: np.ndarray | None = None

    def __post_init__(self):
        self.stamps = np.asarray(self.stamps, dtype=float).reshape(-1)
        self.poses = np.asarray(self.poses, dtype=float).reshape(-1, 3)
        if len(self.stamps) != len(self.poses):
            raise ValueError("stamps and poses differ in length")
        if self.covariances is not None:
            self.covariances = np.asarray(self.covariances, dtype=float).reshape(-1, 3, 3)
            if len(self.covariances) != len(self.poses):
                raise ValueError("covariances and poses differ in length")

    @classmethod
    def from_poses(cls, stamps: Sequence[float], poses: Sequence[Pose2], covariances=None) -> "Trajectory":
        arr = np.array([p.as_array() for p in poses], dtype=float).reshape(-1, 3)
        return cls(np.asarray(stamps, dtype=float), arr, covariances)

    def __len__(self) -> int:
        return len(self.poses)

    def pose(self, i: int) -> Pose2:
        return Pose2.from_array(self.poses[i])

    def __iter__(self) -> Iterator[Pose2]:
        for i in range(len(self)):
            yield self.pose(i)

    def path_lengths(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(0)
        steps = np.linalg.norm(np.diff(self.poses[:, :2], axis=0), axis=1)
        return np.concatenate(([0.0], np.cumsum(steps)))


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectory(traj: Trajectory, path) -> None:
    """One line per pose: ``stamp x y theta``; floats are written round-trip exact."""
    lines = [" ".join(_fmt(v) for v in (t, *p)) for t, p in zip(traj.stamps, traj.poses)]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_trajectory(path) -> Trajectory:
    stamps, poses = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 4:
            raise TrajectoryParseError(path, lineno, f"expected 4 fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise TrajectoryParseError(path, lineno, str(exc)) from None
        if not all(math.isfinite(v) for v in vals):
            raise TrajectoryParseError(path, lineno, "non-finite value")
        stamps.append(vals[0])
        poses.append(vals[1:])
    return Trajectory(np.array(stamps), np.array(poses).reshape(-1, 3))


def write_covariances(traj: Trajectory, path) -> None:
    """``stamp c00 c01 c02 c10 ... c22`` per pose (NaN rows when unavailable)."""
    covs = traj.covariances
    if covs is None:
        covs = np.full((len(traj), 3, 3), np.nan)
    lines = [" ".join(_fmt(v) for v in (t, *c.reshape(-1))) for t, c in zip(traj.stamps, covs)]
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_covariances(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split()
        if len(fields) != 10:
            raise TrajectoryParseError(path, lineno, f"expected 10 fields, got {len(fields)}")
        rows.append([float(f) for f in fields])
    arr = np.array(rows).reshape(-1, 10)
    return arr[:, 0], arr[:, 1:].reshape(-1, 3, 3)


def kitti_rows(traj: Trajectory) -> np.ndarray:
    """3x4 row-major pose matrices with the planar pose embedded at z = 0."""
    out = np.zeros((len(traj), 12))
    c, s = np.cos(traj.poses[:, 2]), np.sin(traj.poses[:, 2])
    out[:, 0], out[:, 1], out[:, 3] = c, -s, traj.poses[:, 0]
    out[:, 4], out[:, 5], out[:, 7] = s, c, traj.poses[:, 1]
    out[:, 10] = 1.0
    return out


def write_kitti(traj: Trajectory, path) -> None:
    rows = kitti_rows(traj)
    Path(path).write_text("".join(" ".join(f"{v:.9e}" for v in r) + "\n" for r in rows))

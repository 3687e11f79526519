"""SE(2) poses, body-frame velocities and rigid transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    wrapped = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)


def rot2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Velocity2:
    """Body-frame velocity: longitudinal, lateral (m/s) and yaw rate (rad/s)."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    def scaled(self, dt: float) -> "Pose2":
        """Increment accumulated over ``dt`` seconds, as a pose."""
        return Pose2(self.vx * dt, self.vy * dt, self.omega * dt)

    def __neg__(self) -> "Velocity2":
        return Velocity2(-self.vx, -self.vy, -self.omega)

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.omega])


@dataclass(frozen=True)
class Pose2:
    """Planar pose ``[x, y, theta]`` with theta kept in (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @classmethod
    def identity(cls) -> "Pose2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, v) -> "Pose2":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def rotation(self) -> np.ndarray:
        return rot2(self.theta)

    def matrix(self) -> np.ndarray:
        """Homogeneous 3x3 matrix."""
        m = np.eye(3)
        m[:2, :2] = self.rotation
        m[:2, 2] = (self.x, self.y)
        return m

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.theta)

    def __matmul__(self, other: "Pose2") -> "Pose2":
        return compose(self, other)

    def transform(self, pts: np.ndarray) -> np.ndarray:
        """Apply the pose to an (n, 2) array of points."""
        pts = np.asarray(pts, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        x, y = pts[..., 0], pts[..., 1]
        return np.stack((c * x - s * y + self.x, s * x + c * y + self.y), axis=-1)

    def rotate(self, vecs: np.ndarray) -> np.ndarray:
        vecs = np.asarray(vecs, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        x, y = vecs[..., 0], vecs[..., 1]
        return np.stack((c * x - s * y, s * x + c * y), axis=-1)


def compose(a: Pose2, b: Pose2) -> Pose2:
    """``a ⊕ b``: express ``b`` (given in a's frame) in a's parent frame."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta)


def inverse(p: Pose2) -> Pose2:
    return p.inverse()


def relative(a: Pose2, b: Pose2) -> Pose2:
    """``a⁻¹ ⊕ b``: pose of ``b`` seen from ``a``."""
    return compose(a.inverse(), b)


def transform_point(pose: Pose2, pt: Point2) -> Point2:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Point2(c * pt.x - s * pt.y + pose.x, s * pt.x + c * pt.y + pose.y)


def poses_to_array(poses) -> np.ndarray:
    return np.array([p.as_array() for p in poses], dtype=float).reshape(-1, 3)


def compose_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorised compose over (n, 3) pose arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
    x = a[..., 0] + c * b[..., 0] - s * b[..., 1]
    y = a[..., 1] + s * b[..., 0] + c * b[..., 1]
    return np.stack((x, y, wrap_angles(a[..., 2] + b[..., 2])), axis=-1)


def inverse_arrays(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    c, s = np.cos(a[..., 2]), np.sin(a[..., 2])
    x = -(c * a[..., 0] + s * a[..., 1])
    y = s * a[..., 0] - c * a[..., 1]
    return np.stack((x, y, wrap_angles(-a[..., 2])), axis=-1)


def relative_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return compose_arrays(inverse_arrays(a), b)

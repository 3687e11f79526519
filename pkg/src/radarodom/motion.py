"""Constant-velocity motion compensation and pose prediction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Pose2, Velocity2, compose


@dataclass(frozen=True)
class DistortionModel:
    velocity: Velocity2
    sweep_duration: float

    def __post_init__(self):
        if not self.sweep_duration > 0:
            raise ValueError("sweep_duration must be positive")


def time_offset(azimuth_index: int, na: int, sweep_duration: float) -> float:
    """Measurement time of an azimuth relative to the sweep centre, in [-dT/2, dT/2)."""
    if not 0 <= azimuth_index < na:
        raise IndexError(f"azimuth index {azimuth_index} outside [0, {na})")
    return (azimuth_index / na - 0.5) * sweep_duration


def time_offsets(azimuth: np.ndarray, na: int, sweep_duration: float) -> np.ndarray:
    return (np.asarray(azimuth, dtype=float) / na - 0.5) * sweep_duration


def _sensor_motion(time_offset: np.ndarray, velocity: Velocity2):
    theta = time_offset * velocity.omega
    tx = time_offset * velocity.vx
    ty = time_offset * velocity.vy
    return np.cos(theta), np.sin(theta), tx, ty


def undistort_points(xy: np.ndarray, time_offset: np.ndarray, velocity: Velocity2) -> np.ndarray:
    """Map points measured at ``t + dt`` into the sensor frame at the sweep centre.

    The sensor pose at ``t + dt`` relative to the centre is ``dt * velocity``
    (translation and yaw), so each point is moved by that rigid transform.
    """
    xy = np.asarray(xy, dtype=float)
    c, s, tx, ty = _sensor_motion(np.asarray(time_offset, dtype=float), velocity)
    x, y = xy[:, 0], xy[:, 1]
    return np.stack((c * x - s * y + tx, s * x + c * y + ty), axis=-1)


def distort_points(xy: np.ndarray, time_offset: np.ndarray, velocity: Velocity2) -> np.ndarray:
    """Exact inverse of :func:`undistort_points`."""
    xy = np.asarray(xy, dtype=float)
    c, s, tx, ty = _sensor_motion(np.asarray(time_offset, dtype=float), velocity)
    x, y = xy[:, 0] - tx, xy[:, 1] - ty
    return np.stack((c * x + s * y, -s * x + c * y), axis=-1)


def compensate(cloud, model: DistortionModel | Velocity2):
    """Return a copy of ``cloud`` with every point projected to the sweep-centre time."""
    velocity = model.velocity if isinstance(model, DistortionModel) else model
    if len(cloud) == 0 or (velocity.vx == 0.0 and velocity.vy == 0.0 and velocity.omega == 0.0):
        return cloud.with_xy(cloud.xy.copy())
    return cloud.with_xy(undistort_points(cloud.xy, cloud.time_offset, velocity))


def predict(prev_pose: Pose2, prev_velocity: Velocity2, dt: float) -> Pose2:
    """Constant-velocity starting guess; velocity is applied in the body frame of ``prev_pose``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return compose(prev_pose, prev_velocity.scaled(dt))

"""Oriented surface points from a filtered, motion-compensated point cloud."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Point2, Pose2


@dataclass(frozen=True)
class FeatureConfig:
    resolution_r: float = 3.0
    resample_f: float = 1.0
    intensity_weighted: bool = True
    min_support: int = 6
    max_condition: float = 1e5
    min_sensor_dist: float = 2.5
    z_min: float = 60.0
    query_point: str = "centroid"

    def __post_init__(self):
        if self.query_point not in ("centroid", "centre"):
            raise ValueError("query_point must be 'centroid' or 'centre'")
        if not self.resolution_r > 0 or not self.resample_f > 0:
            raise ValueError("resolution_r and resample_f must be positive")
        if self.min_support < 2:
            raise ValueError("min_support must be >= 2")

    @property
    def cell_size(self) -> float:
        return self.resolution_r / self.resample_f


@dataclass(frozen=True)
class SurfacePoint:
    mean: Point2
    normal: tuple[float, float]
    covariance: np.ndarray
    planarity: float
    support: int
    lambda_min: float
    lambda_max: float


@dataclass
class SurfacePointSet:
    """Columnar storage of oriented surface points expressed in the ``origin`` frame."""

    mean: np.ndarray
    normal: np.ndarray
    cov: np.ndarray
    planarity: np.ndarray
    support: np.ndarray
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    stamp: float = 0.0
    origin: Pose2 = field(default_factory=Pose2.identity)
    _tree: cKDTree | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1, 2)
        n = len(self.mean)
        self.normal = np.asarray(self.normal, dtype=float).reshape(n, 2)
        self.cov = np.asarray(self.cov, dtype=float).reshape(n, 2, 2)
        self.planarity = np.asarray(self.planarity, dtype=float).reshape(n)
        self.support = np.asarray(self.support, dtype=np.int64).reshape(n)
        self.lambda_min = np.asarray(self.lambda_min, dtype=float).reshape(n)
        self.lambda_max = np.asarray(self.lambda_max, dtype=float).reshape(n)

    @classmethod
    def empty(cls, stamp: float = 0.0) -> "SurfacePointSet":
        return cls(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 2, 2)), np.zeros(0),
                   np.zeros(0, np.int64), np.zeros(0), np.zeros(0), stamp)

    @classmethod
    def from_points(cls, mean, normal, cov, support=None, stamp: float = 0.0) -> "SurfacePointSet":
        """Build a set from means/normals/covariances, deriving eigenvalues and planarity."""
        cov = np.asarray(cov, dtype=float).reshape(-1, 2, 2)
        lmin, lmax, _ = eig2_symmetric(cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1])
        n = len(cov)
        support = np.full(n, 6) if support is None else support
        normal = np.asarray(normal, dtype=float).reshape(n, 2)
        normal = normal / np.linalg.norm(normal, axis=1, keepdims=True)
        return cls(mean, normal, cov, planarity(lmin, lmax), support, lmin, lmax, stamp)

    def __len__(self) -> int:
        return len(self.mean)

    def __iter__(self) -> Iterator[SurfacePoint]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> SurfacePoint:
        return SurfacePoint(Point2(*map(float, self.mean[i])), tuple(map(float, self.normal[i])),
                            self.cov[i].copy(), float(self.planarity[i]), int(self.support[i]),
                            float(self.lambda_min[i]), float(self.lambda_max[i]))

    @property
    def points(self) -> list[SurfacePoint]:
        return list(self)

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.mean if len(self) else np.zeros((0, 2)))
        return self._tree

    def transformed(self, pose: Pose2) -> "SurfacePointSet":
        """Re-express the set through ``pose`` (means moved, normals rotated, covariances conjugated)."""
        rot = pose.rotation
        cov = rot @ self.cov @ rot.T
        return SurfacePointSet(pose.transform(self.mean), pose.rotate(self.normal), cov,
                               self.planarity.copy(), self.support.copy(), self.lambda_min.copy(),
                               self.lambda_max.copy(), self.stamp, pose @ self.origin)


def planarity(lambda_min, lambda_max):
    """``log(1 + lambda_max / lambda_min)``; high for line-like neighbourhoods."""
    lmin = np.asarray(lambda_min, dtype=float)
    lmax = np.asarray(lambda_max, dtype=float)
    if np.any(lmin <= 0):
        raise ValueError("planarity requires lambda_min > 0")
    out = np.log1p(np.abs(lmax / lmin))
    return float(out) if out.ndim == 0 else out


def eig2_symmetric(a, b, c):
    """Eigen-decomposition of symmetric 2x2 matrices ``[[a, b], [b, c]]``.

    Returns ``(lambda_min, lambda_max, v_min)`` where ``v_min`` holds unit
    eigenvectors of the smaller eigenvalue.
    """
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    half_tr = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    lmax = half_tr + rad
    lmin = half_tr - rad
    # eigenvectors are scale invariant; normalising first avoids subnormal round-off
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(c))
    unit = np.where(scale > 0, scale, 1.0)
    sa, sb, sc, sl = a / unit, b / unit, c / unit, lmin / unit
    v1 = np.stack((sb, sl - sa), axis=-1)
    v2 = np.stack((sl - sc, sb), axis=-1)
    n1 = np.linalg.norm(v1, axis=-1)
    n2 = np.linalg.norm(v2, axis=-1)
    v = np.where((n1 >= n2)[..., None], v1, v2)
    nv = np.maximum(n1, n2)
    degenerate = nv <= 1e-12
    v = np.where(degenerate[..., None], np.array([1.0, 0.0]), v / np.where(degenerate, 1.0, nv)[..., None])
    return lmin, lmax, v


def weighted_moments(xy: np.ndarray, weights: np.ndarray | None = None):
    """Trace-normalised weighted mean and (population) covariance of an (l, 2) array."""
    xy = np.asarray(xy, dtype=float)
    w = np.ones(len(xy)) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    mu = w @ xy
    d = xy - mu
    return mu, (d * w[:, None]).T @ d


def intensity_weights(intensity: np.ndarray, z_min: float) -> np.ndarray:
    """Per-detection weight ``z - z_min``, clipped at zero."""
    return np.clip(np.asarray(intensity, dtype=float) - z_min, 0.0, None)


def radius_neighbors(points, query, radius: float) -> np.ndarray:
    """Indices of all stored points within ``radius`` (inclusive) of ``query``, ascending."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if isinstance(points, SurfacePointSet):
        tree = points.tree
        n = len(points)
    else:
        xy = points.xy if hasattr(points, "xy") else np.asarray(points, dtype=float).reshape(-1, 2)
        n = len(xy)
        tree = cKDTree(xy) if n else None
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    q = np.asarray(tuple(query), dtype=float)
    return np.asarray(sorted(tree.query_ball_point(q, radius)), dtype=np.int64)


def _flatten_neighbourhoods(lists) -> tuple[np.ndarray, np.ndarray]:
    counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
    if counts.sum() == 0:
        return counts, np.zeros(0, dtype=np.int64)
    flat = np.fromiter((i for l in lists for i in l), dtype=np.int64, count=int(counts.sum()))
    return counts, flat


def compute_surface_points(cloud, cfg: FeatureConfig) -> SurfacePointSet:
    """Grid the cloud into ``r/f`` cells and fit one oriented surface point per occupied cell.

    Each candidate uses every point within ``r`` of the cell's query point, by
    default the centroid of the points that fall in the cell. Candidates
    are dropped when supported by fewer than ``min_support`` points, when all
    supporting points come from one azimuth bin, or when the covariance
    condition number exceeds ``max_condition``.
    """
    xy = cloud.xy
    keep = np.hypot(xy[:, 0], xy[:, 1]) >= cfg.min_sensor_dist
    xy = xy[keep]
    intensity = cloud.intensity[keep]
    azimuth = cloud.azimuth[keep]
    if len(xy) < cfg.min_support:
        return SurfacePointSet.empty(cloud.stamp)

    cell = cfg.cell_size
    cells, inverse = np.unique(np.floor(xy / cell).astype(np.int64), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if cfg.query_point == "centre":
        centres = (cells + 0.5) * cell
    else:
        n_in = np.bincount(inverse, minlength=len(cells)).astype(float)
        centres = np.stack((np.bincount(inverse, xy[:, 0], len(cells)),
                            np.bincount(inverse, xy[:, 1], len(cells))), axis=-1) / n_in[:, None]
    tree = cKDTree(xy)
    counts, flat = _flatten_neighbourhoods(tree.query_ball_point(centres, cfg.resolution_r))

    ok = counts >= cfg.min_support
    owner = np.repeat(np.arange(len(cells)), counts)
    sel = ok[owner]
    flat, owner = flat[sel], owner[sel]
    idx_cells = np.nonzero(ok)[0]
    if idx_cells.size == 0:
        return SurfacePointSet.empty(cloud.stamp)
    # re-label owners to 0..m-1
    remap = np.full(len(cells), -1)
    remap[idx_cells] = np.arange(idx_cells.size)
    owner = remap[owner]
    m = idx_cells.size
    support = counts[idx_cells]

    if cfg.intensity_weighted:
        w = intensity_weights(intensity[flat], cfg.z_min)
        wsum = np.bincount(owner, weights=w, minlength=m)
        uniform = wsum <= 0
        w = np.where(uniform[owner], 1.0, w)
        wsum = np.where(uniform, support.astype(float), wsum)
    else:
        w = np.ones(flat.size)
        wsum = support.astype(float)
    wn = w / wsum[owner]

    p = xy[flat]
    mu = np.stack((np.bincount(owner, wn * p[:, 0], m), np.bincount(owner, wn * p[:, 1], m)), axis=-1)
    d = p - mu[owner]
    sxx = np.bincount(owner, wn * d[:, 0] * d[:, 0], m)
    sxy = np.bincount(owner, wn * d[:, 0] * d[:, 1], m)
    syy = np.bincount(owner, wn * d[:, 1] * d[:, 1], m)
    lmin, lmax, normal = eig2_symmetric(sxx, sxy, syy)

    az = azimuth[flat]
    az_lo = np.full(m, np.iinfo(np.int64).max)
    az_hi = np.full(m, np.iinfo(np.int64).min)
    np.minimum.at(az_lo, owner, az)
    np.maximum.at(az_hi, owner, az)
    multi_azimuth = az_hi > az_lo

    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(lmin > 0, lmax / lmin, np.inf)
    good = multi_azimuth & (cond <= cfg.max_condition) & (lmin > 0)

    mu, normal, lmin, lmax = mu[good], normal[good], lmin[good], lmax[good]
    flip = np.einsum("ij,ij->i", normal, mu) > 0
    normal[flip] *= -1.0
    cov = np.empty((len(mu), 2, 2))
    cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 0], cov[:, 1, 1] = sxx[good], sxy[good], sxy[good], syy[good]
    return SurfacePointSet(mu, normal, cov, np.log1p(lmax / lmin), support[good], lmin, lmax, cloud.stamp)


def surface_point_from_neighbourhood(xy, intensity, azimuth, cfg: FeatureConfig) -> SurfacePoint | None:
    """Fit a single surface point to an explicit neighbourhood; ``None`` when rejected."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if len(xy) < cfg.min_support or len(np.unique(azimuth)) < 2:
        return None
    w = intensity_weights(intensity, cfg.z_min) if cfg.intensity_weighted else np.ones(len(xy))
    if w.sum() <= 0:
        w = np.ones(len(xy))
    mu, cov = weighted_moments(xy, w)
    lmin, lmax, v = eig2_symmetric(cov[0, 0], cov[0, 1], cov[1, 1])
    lmin, lmax = float(lmin), float(lmax)
    if not lmin > 0 or lmax / lmin > cfg.max_condition:
        return None
    v = np.asarray(v, dtype=float)
    if float(v @ mu) > 0:
        v = -v
    return SurfacePoint(Point2(float(mu[0]), float(mu[1])), (float(v[0]), float(v[1])), cov,
                        math.log1p(lmax / lmin), len(xy), lmin, lmax)

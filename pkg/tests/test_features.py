import math

import numpy as np
import pytest
from hypothesis import example, given
from hypothesis import strategies as st

from radarodom.features import (FeatureConfig, SurfacePointSet, compute_surface_points, eig2_symmetric,
                                planarity, radius_neighbors, surface_point_from_neighbourhood,
                                weighted_moments)
from radarodom.geometry import Pose2
from radarodom.radar_io import PointCloud


def make_cloud(xy, intensity=None, azimuth=None):
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    n = len(xy)
    intensity = np.full(n, 100.0) if intensity is None else intensity
    azimuth = np.arange(n) if azimuth is None else azimuth
    return PointCloud(xy, intensity, azimuth, np.zeros(n))


def dense_pca(xy, w):
    """Reference weighted statistics via numpy's covariance and symmetric eigensolver."""
    mu = np.average(xy, axis=0, weights=w)
    cov = np.cov(xy.T, aweights=w, bias=True)
    vals, vecs = np.linalg.eigh(cov)
    return mu, cov, vals, vecs[:, 0]


def cell_oracle(cloud, cfg):
    """Per-cell brute force: query point, linear-scan neighbourhood, dense PCA, rejection rules."""
    xy, z, az = cloud.xy, cloud.intensity, cloud.azimuth
    keep = np.hypot(xy[:, 0], xy[:, 1]) >= cfg.min_sensor_dist
    xy, z, az = xy[keep], z[keep], az[keep]
    cells = {}
    for i, key in enumerate(map(tuple, np.floor(xy / cfg.cell_size).astype(int))):
        cells.setdefault(key, []).append(i)
    out = []
    for key in sorted(cells):
        if cfg.query_point == "centroid":
            q = xy[cells[key]].mean(axis=0)
        else:
            q = (np.array(key) + 0.5) * cfg.cell_size
        idx = [i for i in range(len(xy)) if np.hypot(*(xy[i] - q)) <= cfg.resolution_r]
        if len(idx) < cfg.min_support or len(set(az[idx])) < 2:
            continue
        w = np.clip(z[idx] - cfg.z_min, 0, None) if cfg.intensity_weighted else np.ones(len(idx))
        if w.sum() <= 0:
            w = np.ones(len(idx))
        mu, cov, vals, n = dense_pca(xy[idx], w)
        if vals[0] <= 0 or vals[1] / vals[0] > cfg.max_condition:
            continue
        out.append((mu, cov, vals, n if n @ mu < 0 else -n, len(idx)))
    return out


def test_planarity_examples():
    assert planarity(1.0, 1.0) == pytest.approx(math.log(2))
    assert planarity(1.0, math.e - 1) == pytest.approx(1.0)
    assert planarity(1e-4, 1e-2) == pytest.approx(4.61512, abs=1e-5)
    with pytest.raises(ValueError):
        planarity(0.0, 1.0)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
@example(0.0, 0.0, 1.5e-160)
def test_eig2_matches_eigh(a, b, c):
    lmin, lmax, v = eig2_symmetric(a, b, c)
    ref = np.linalg.eigvalsh(np.array([[a, b], [b, c]]))
    scale = max(1.0, abs(a), abs(b), abs(c))
    assert lmin == pytest.approx(ref[0], abs=1e-9 * scale)
    assert lmax == pytest.approx(ref[1], abs=1e-9 * scale)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    m = np.array([[a, b], [b, c]])
    if lmax - lmin > 1e-6 * scale:
        assert np.linalg.norm(m @ v - lmin * v) <= 1e-9 * scale


def test_uniform_weights_equal_sample_moments(rng):
    xy = rng.normal(size=(40, 2)) * [3.0, 0.5]
    mu, cov = weighted_moments(xy)
    np.testing.assert_allclose(mu, xy.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(cov, np.cov(xy.T, bias=True), atol=1e-12)


def test_neighbourhood_matches_dense_pca(rng):
    cfg = FeatureConfig(z_min=60.0)
    for _ in range(200):
        n = int(rng.integers(6, 60))
        xy = rng.normal(size=(n, 2)) * rng.uniform(0.05, 2.0, 2) + rng.uniform(-40, 40, 2)
        z = rng.uniform(61, 300, n)
        sp = surface_point_from_neighbourhood(xy, z, np.arange(n), cfg)
        mu, cov, vals, nrm = dense_pca(xy, z - 60.0)
        assert sp is not None
        np.testing.assert_allclose(tuple(sp.mean), mu, atol=1e-9)
        np.testing.assert_allclose(sp.covariance, cov, atol=1e-9)
        assert sp.lambda_min == pytest.approx(vals[0], abs=1e-9)
        assert abs(abs(np.dot(sp.normal, nrm)) - 1.0) < 1e-9


def test_collinear_single_azimuth_rejected():
    xy = np.column_stack((np.linspace(5, 8, 6), np.zeros(6)))
    assert surface_point_from_neighbourhood(xy, np.full(6, 100.0), np.zeros(6, int), FeatureConfig()) is None
    cloud = make_cloud(xy, azimuth=np.zeros(6, int))
    assert len(compute_surface_points(cloud, FeatureConfig())) == 0


def test_noisy_line_gives_vertical_normal(rng):
    x = np.linspace(10, 12, 20)
    xy = np.column_stack((x, rng.normal(0, 0.01, 20) + 5.0))
    sps = compute_surface_points(make_cloud(xy), FeatureConfig(resolution_r=3.0))
    assert len(sps) >= 1
    assert np.all(np.abs(sps.normal[:, 1]) > 0.999)
    assert np.all(np.einsum("ij,ij->i", sps.normal, sps.mean) < 0)


@pytest.mark.parametrize("n, expect", [(5, 0), (6, 1)])
def test_min_support_boundary(n, expect):
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    xy = np.column_stack((20 + 0.5 * np.cos(ang), 0.3 * np.sin(ang)))
    sps = compute_surface_points(make_cloud(xy), FeatureConfig(resolution_r=3.0))
    assert (len(sps) > 0) == bool(expect)
    assert np.all(sps.support == n)


def test_condition_limit():
    # an exact line with tiny orthogonal jitter: condition number far above 1e5
    xy = np.column_stack((np.linspace(10, 12, 10), 3.0 + 1e-5 * (-1.0) ** np.arange(10)))
    assert len(compute_surface_points(make_cloud(xy), FeatureConfig())) == 0
    loose = FeatureConfig(max_condition=1e12)
    assert len(compute_surface_points(make_cloud(xy), loose)) > 0


def test_min_sensor_distance_excludes_close_points():
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    xy = np.column_stack((0.5 * np.cos(ang), 0.5 * np.sin(ang)))
    assert len(compute_surface_points(make_cloud(xy), FeatureConfig(min_sensor_dist=2.5))) == 0


@pytest.mark.parametrize("query", ["centroid", "centre"])
def test_compute_matches_cell_oracle(rng, query):
    xy = np.concatenate([rng.uniform(-30, 30, (150, 2)),
                         np.column_stack((np.linspace(-20, 20, 120), 12 + rng.normal(0, 0.1, 120)))])
    z = rng.uniform(50, 200, len(xy))
    az = rng.integers(0, 400, len(xy))
    cfg = FeatureConfig(resolution_r=3.0, z_min=60.0, query_point=query)
    cloud = make_cloud(xy, z, az)
    sps = compute_surface_points(cloud, cfg)
    ref = cell_oracle(cloud, cfg)
    assert len(sps) == len(ref)
    for i, (mu, cov, vals, n, support) in enumerate(ref):
        np.testing.assert_allclose(sps.mean[i], mu, atol=1e-9)
        np.testing.assert_allclose(sps.cov[i], cov, atol=1e-9)
        np.testing.assert_allclose(sps.normal[i], n, atol=1e-9)
        assert sps.support[i] == support


def test_emitted_points_satisfy_invariants(rng):
    xy = rng.uniform(-40, 40, (600, 2))
    sps = compute_surface_points(make_cloud(xy, rng.uniform(61, 200, 600), rng.integers(0, 400, 600)),
                                 FeatureConfig(z_min=60.0))
    assert len(sps) > 0
    cells = len(np.unique(np.floor(xy / 3.0).astype(int), axis=0))
    assert len(sps) <= cells
    for sp in sps:
        assert np.linalg.norm(sp.normal) == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(sp.covariance, sp.covariance.T)
        assert sp.lambda_max >= sp.lambda_min > 0
        assert sp.support >= 6
        n = np.asarray(sp.normal)
        assert np.linalg.norm(sp.covariance @ n - sp.lambda_min * n) <= 1e-9


def test_rigid_motion_equivariance(rng):
    # a cloud whose grid assignment is unchanged by the shift/rotation is needed for exact equivariance,
    # so compare single-neighbourhood fits instead
    xy = rng.normal(size=(30, 2)) * [2.0, 0.2] + [15.0, 4.0]
    z = rng.uniform(61, 200, 30)
    az = np.arange(30)
    cfg = FeatureConfig(z_min=60.0)
    base = surface_point_from_neighbourhood(xy, z, az, cfg)
    t = np.array([3.0, -2.0])
    moved = surface_point_from_neighbourhood(xy + t, z, az, cfg)
    np.testing.assert_allclose(np.array(tuple(moved.mean)) - t, tuple(base.mean), atol=1e-9)
    np.testing.assert_allclose(moved.covariance, base.covariance, atol=1e-9)
    pose = Pose2(0, 0, 0.4)
    rot = surface_point_from_neighbourhood(pose.transform(xy), z, az, cfg)
    np.testing.assert_allclose(tuple(rot.mean), pose.transform(np.array(tuple(base.mean))), atol=1e-9)
    np.testing.assert_allclose(rot.covariance, pose.rotation @ base.covariance @ pose.rotation.T, atol=1e-9)
    assert abs(abs(np.dot(rot.normal, pose.rotate(np.array(base.normal)))) - 1) < 1e-9


def test_zero_intensity_weights_fall_back_to_uniform(rng):
    xy = rng.normal(size=(10, 2)) + [10, 0]
    sp = surface_point_from_neighbourhood(xy, np.full(10, 10.0), np.arange(10), FeatureConfig(z_min=60))
    np.testing.assert_allclose(tuple(sp.mean), xy.mean(axis=0), atol=1e-12)


def test_radius_neighbors_examples(rng):
    assert len(radius_neighbors(np.zeros((0, 2)), (0, 0), 1.0)) == 0
    assert len(radius_neighbors(SurfacePointSet.empty(), (0, 0), 1.0)) == 0
    pts = rng.uniform(-3, 3, (100, 2))
    assert 17 in radius_neighbors(pts, pts[17], 1e-6)
    q = (0.3, -0.2)
    brute = np.nonzero(np.hypot(pts[:, 0] - q[0], pts[:, 1] - q[1]) <= 1.0)[0]
    np.testing.assert_array_equal(radius_neighbors(pts, q, 1.0), brute)
    with pytest.raises(ValueError):
        radius_neighbors(pts, q, 0.0)


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), max_size=40),
       st.tuples(st.floats(-5, 5), st.floats(-5, 5)), st.floats(0.01, 4))
def test_radius_neighbors_property(pts, q, r):
    pts = np.array(pts, dtype=float).reshape(-1, 2)
    got = radius_neighbors(make_cloud(pts), q, r)
    d = np.hypot(pts[:, 0] - q[0], pts[:, 1] - q[1]) if len(pts) else np.zeros(0)
    # points within floating noise of the boundary may go either way
    sure_in = set(np.nonzero(d <= r * (1 - 1e-12))[0])
    sure_out = set(np.nonzero(d > r * (1 + 1e-12))[0])
    assert sure_in <= set(got)
    assert not (sure_out & set(got))


def test_surface_point_set_transform_roundtrip(rng):
    xy = rng.uniform(-40, 40, (400, 2))
    sps = compute_surface_points(make_cloud(xy, rng.uniform(61, 200, 400)), FeatureConfig(z_min=60.0))
    pose = Pose2(3, -1, 0.7)
    back = sps.transformed(pose).transformed(pose.inverse())
    np.testing.assert_allclose(back.mean, sps.mean, atol=1e-9)
    np.testing.assert_allclose(back.normal, sps.normal, atol=1e-12)
    np.testing.assert_allclose(back.cov, sps.cov, atol=1e-12)


@pytest.mark.parametrize("kwargs", [dict(resolution_r=0.0), dict(resample_f=-1.0), dict(min_support=1),
                                    dict(query_point="corner")])
def test_feature_config_invariants(kwargs):
    with pytest.raises(ValueError):
        FeatureConfig(**kwargs)

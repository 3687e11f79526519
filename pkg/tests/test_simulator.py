import math
from dataclasses import replace

import numpy as np
import pytest

from radarodom.filtering import KStrongestConfig, k_strongest
from radarodom.geometry import Pose2, Velocity2
from radarodom.motion import compensate
from radarodom.radar_io import to_cartesian
from radarodom.simulator import (SimConfig, SimTrajectory, SimulationError, SpeedProfile, World,
                                 WorldParseError, _cast, format_world, generate_sequence,
                                 loop_with_perimeter, parse_world, render_scan, rounded_rectangle,
                                 straight_path, urban_world)

QUIET = SimConfig().noiseless()


def test_empty_world_renders_zeros():
    scan = render_scan(World(bounds=(-5, -5, 5, 5)), Pose2(), Velocity2(), QUIET)
    assert scan.intensities.shape == (400, 1000)
    assert not np.any(scan.intensities)


def test_point_reflector_peak():
    world = World(points=[[10.0, 0.0]], point_reflectivity=[1.0], bounds=(-20, -20, 20, 20))
    z = render_scan(world, Pose2(), Velocity2(), QUIET).intensities
    a, col = np.unravel_index(np.argmax(z), z.shape)
    assert a == 0
    assert col + 1 == round(10.0 / QUIET.gamma)


def test_beam_and_range_spread():
    world = World(points=[[10.0, 0.0]], point_reflectivity=[1.0], bounds=(-20, -20, 20, 20))
    z = render_scan(world, Pose2(), Velocity2(), QUIET).intensities.astype(float)
    assert z[0, 99] > z[0, 98] > 0 and z[0, 100] > 0
    assert z[1, 99] > 0 and z[399, 99] > 0 and z[1, 99] < z[0, 99]
    assert z[4, 99] == 0 and z[396, 99] == 0


def test_intensity_falls_with_range():
    cfg = replace(QUIET, range_spread=0.0, beam_samples=1)
    peaks = []
    for r in (10.0, 20.0, 40.0):
        world = World(points=[[r, 0.0]], point_reflectivity=[1.0], bounds=(-50, -50, 50, 50))
        peaks.append(render_scan(world, Pose2(), Velocity2(), cfg).intensities.max())
    expected = [cfg.base_intensity / r for r in (10.0, 20.0, 40.0)]
    np.testing.assert_allclose(peaks, np.round(expected), atol=1)


def test_moving_wall_recovered_by_compensation():
    world = World(segments=[[20.0, -60.0, 20.0, 60.0]], segment_reflectivity=[1.0], bounds=(-30, -70, 30, 70))
    cfg = replace(QUIET, beam_samples=1, range_spread=0.0)
    v = Velocity2(10.0, 0.0, 0.0)
    scan = render_scan(world, Pose2(), v, cfg)
    rows = np.r_[np.arange(0, 60), np.arange(340, 400)]  # azimuths facing the wall
    cols = np.argmax(scan.intensities[rows], axis=1)
    cloud = to_cartesian(scan, rows, cols + 1)
    raw = np.sqrt(np.mean((cloud.xy[:, 0] - 20.0) ** 2))
    fixed = np.sqrt(np.mean((compensate(cloud, v).xy[:, 0] - 20.0) ** 2))
    assert np.ptp(cloud.xy[:, 0]) > 1.0  # ranges visibly distorted across the sweep
    assert fixed < cfg.gamma < raw


def test_multipath_ghost_at_mirror_image():
    # wall along y = -5 mirrors the reflector at (10, 0) to (10, -10)
    world = World(segments=[[-50.0, -5.0, 50.0, -5.0]], segment_reflectivity=[1.0],
                  points=[[10.0, 0.0]], point_reflectivity=[1.0], bounds=(-60, -60, 60, 60))
    with_ghost = render_scan(world, Pose2(), Velocity2(), replace(QUIET, multipath_gain=0.5)).intensities
    without = render_scan(world, Pose2(), Velocity2(), QUIET).intensities
    a = round(math.atan2(-10, 10) % (2 * math.pi) / (2 * math.pi) * 400)
    d = round(math.hypot(10, 10) / QUIET.gamma)
    window = (slice(a - 1, a + 2), slice(d - 3, d + 2))
    assert with_ghost[window].max() > 0
    assert without[window].max() == 0


def test_first_hit_consistency():
    world, path = urban_world(2)
    pose = Pose2(*path.pose_at(123.0))
    narrow = replace(QUIET, beam_width=2 * np.pi / 400, beam_samples=3)  # spread limited to one azimuth bin
    scan = render_scan(world, pose, Velocity2(), narrow)
    det = k_strongest(scan, KStrongestConfig(k=5, z_min=20))
    ang = pose.theta + 2 * np.pi * np.arange(400) / 400
    true_rng, *_ = _cast(np.tile(pose.translation, (400, 1)), np.stack((np.cos(ang), np.sin(ang)), -1),
                         world, QUIET.point_radius)
    true_bin = np.rint(true_rng / QUIET.gamma)
    assert len(det) > 100
    for a, d, _ in det:
        near = true_bin[[(a - 1) % 400, a, (a + 1) % 400]]
        assert np.min(np.abs(near - d)) <= 1


def test_render_invariant_to_sweep_duration_when_static():
    world, path = urban_world(0)
    pose = Pose2(*path.pose_at(10.0))
    a = render_scan(world, pose, Velocity2(), QUIET)
    b = render_scan(world, pose, Velocity2(), replace(QUIET, sweep_duration=0.1))
    np.testing.assert_array_equal(a.intensities, b.intensities)


def test_noise_model_statistics():
    cfg = replace(SimConfig(), speckle_sigma=0.0)
    z = render_scan(World(bounds=(-5, -5, 5, 5)), Pose2(), Velocity2(), cfg).intensities
    assert z.mean() == pytest.approx(cfg.noise_floor_mean, rel=0.05)
    assert z.dtype == np.uint16


def test_clamped_to_16_bit():
    world = World(points=[[3.0, 0.0]], point_reflectivity=[1e4], bounds=(-5, -5, 5, 5))
    z = render_scan(world, Pose2(), Velocity2(), QUIET).intensities
    assert z.max() == 65535


def test_pose_outside_bounds():
    with pytest.raises(SimulationError):
        render_scan(World(bounds=(-5, -5, 5, 5)), Pose2(6, 0, 0), Velocity2(), QUIET)


def test_stationary_sequence():
    world = World(points=[[10.0, 3.0]], point_reflectivity=[1.0], bounds=(-20, -20, 20, 20))
    traj = SimTrajectory(straight_path(0.0, Pose2(1.0, 2.0, 0.5)), SpeedProfile(0.0), duration=2.5)
    scans, gt = generate_sequence(world, traj, SimConfig(seed=4))
    assert len(scans) == 10
    assert np.all(gt.poses == gt.poses[0])
    np.testing.assert_allclose(gt.poses[0], [1.0, 2.0, 0.5])
    quiet = [render_scan(world, Pose2(1.0, 2.0, 0.5), Velocity2(), QUIET).intensities]
    diff = np.abs(scans[0].intensities.astype(int) - scans[1].intensities.astype(int))
    assert diff.max() > 0  # noise differs between sweeps
    peak = np.array(np.unravel_index(np.argmax(scans[0].intensities), quiet[0].shape))
    truth = np.array(np.unravel_index(np.argmax(quiet[0]), quiet[0].shape))
    assert np.all(np.abs(peak - truth) <= 2)


def test_straight_line_sequence():
    world = World(bounds=(-10, -10, 120, 10))
    scans, gt = generate_sequence(world, SimTrajectory(straight_path(100.0), SpeedProfile(5.0)), QUIET)
    assert len(scans) == 80
    np.testing.assert_allclose(np.diff(gt.poses[:, 0]), 1.25, atol=1e-9)
    np.testing.assert_allclose(gt.stamps, np.arange(80) * 0.25)


@pytest.mark.parametrize("amplitude", [0.0, 0.3])
def test_closed_loop_returns_to_start(amplitude):
    world, path = urban_world(0)
    traj = SimTrajectory(path, SpeedProfile(5.0, amplitude, 20.0))
    fitted = traj.fitted(0.25)
    n = fitted.tick_count(0.25)
    assert n > 300
    assert fitted.arc_length((n - 1) * 0.25) == pytest.approx(path.length, rel=1e-9)
    small = replace(QUIET, na=16, nr=50)
    world2 = World(bounds=world.bounds)
    _, gt = generate_sequence(world2, traj, small)
    np.testing.assert_array_equal(gt.poses[-1], gt.poses[0])


def test_loop_perimeter():
    assert loop_with_perimeter(500.0).length == pytest.approx(500.0, abs=1e-9)
    rr = rounded_rectangle(40, 20, 5)
    end = rr.pose_at(rr.length - 1e-9)
    np.testing.assert_allclose(end[:2], rr.start.translation, atol=1e-6)


def test_path_leaving_bounds_reports_time():
    world = World(bounds=(-10, -10, 20, 10))
    with pytest.raises(SimulationError, match="t="):
        generate_sequence(world, SimTrajectory(straight_path(100.0), SpeedProfile(5.0)), replace(QUIET, na=8, nr=20))


def test_sequence_deterministic_under_seed():
    world, path = urban_world(1)
    traj = SimTrajectory(straight_path(10.0, Pose2(*path.pose_at(0.0))), SpeedProfile(5.0))
    a, _ = generate_sequence(world, traj, SimConfig(seed=9))
    b, _ = generate_sequence(world, traj, SimConfig(seed=9))
    c, _ = generate_sequence(world, traj, SimConfig(seed=10))
    assert all(x == y for x, y in zip(a, b))
    assert not all(x == y for x, y in zip(a, c))


def test_world_text_roundtrip():
    world, _ = urban_world(0)
    back = parse_world(format_world(world))
    np.testing.assert_array_equal(back.segments, world.segments)
    np.testing.assert_array_equal(back.point_reflectivity, world.point_reflectivity)
    assert back.bounds == world.bounds


@pytest.mark.parametrize("text, line", [
    ("SEG 0 0 1 1 1\nPT 1 2\n", 2),
    ("# c\n\nSEG 0 0 1 x 1\n", 3),
    ("PT 0 0 -1\n", 1),
    ("BOX 1 2 3\n", 1),
])
def test_world_parse_errors_carry_line(text, line):
    with pytest.raises(WorldParseError) as exc:
        parse_world(text)
    assert exc.value.lineno == line


def test_world_invariants():
    with pytest.raises(ValueError):
        World(points=[[0, 0]], point_reflectivity=[0.0])
    with pytest.raises(ValueError):
        SimConfig(multipath_gain=1.5)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radarodom.geometry import (Point2, Pose2, Velocity2, compose, compose_arrays, inverse,
                                inverse_arrays, relative, relative_arrays, transform_point,
                                wrap_angle, wrap_angles)

coord = st.floats(-10, 10, allow_nan=False)
angle = st.floats(-10, 10, allow_nan=False)
poses = st.builds(Pose2, coord, coord, angle)


def as_matrix(p: Pose2) -> np.ndarray:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return np.array([[c, -s, p.x], [s, c, p.y], [0, 0, 1.0]])


def from_matrix(m) -> Pose2:
    return Pose2(m[0, 2], m[1, 2], math.atan2(m[1, 0], m[0, 0]))


def close(a: Pose2, b: Pose2, tol=1e-12):
    return (abs(a.x - b.x) <= tol and abs(a.y - b.y) <= tol
            and abs(wrap_angle(a.theta - b.theta)) <= tol)


@pytest.mark.parametrize("a, b, expected", [
    (Pose2(), Pose2(1, 2, 0.3), Pose2(1, 2, 0.3)),
    (Pose2(1, 0, math.pi / 2), Pose2(1, 0, 0), Pose2(1, 1, math.pi / 2)),
    (Pose2(0, 0, math.pi), Pose2(1, 0, math.pi), Pose2(-1, 0, 0)),
])
def test_compose_examples(a, b, expected):
    assert close(compose(a, b), expected)
    assert close(a @ b, expected)


@pytest.mark.parametrize("a, b, expected", [
    (Pose2(1, 1, 0), Pose2(2, 1, 0), Pose2(1, 0, 0)),
    (Pose2(3, -2, 1.1), Pose2(3, -2, 1.1), Pose2()),
    (Pose2(), Pose2(4, 5, -0.5), Pose2(4, 5, -0.5)),
])
def test_relative_examples(a, b, expected):
    assert close(relative(a, b), expected)


@pytest.mark.parametrize("pose, pt, expected", [
    (Pose2(), Point2(3, 4), (3, 4)),
    (Pose2(0, 0, math.pi), Point2(1, 0), (-1, 0)),
    (Pose2(1, 2, math.pi / 2), Point2(1, 0), (1, 3)),
])
def test_transform_point_examples(pose, pt, expected):
    out = transform_point(pose, pt)
    assert isinstance(out, Point2)
    assert out.x == pytest.approx(expected[0], abs=1e-12)
    assert out.y == pytest.approx(expected[1], abs=1e-12)


@pytest.mark.parametrize("theta", [math.pi, -math.pi, 3 * math.pi, -3 * math.pi, 0.0, 7.0, -7.0])
def test_wrap_is_half_open(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-12)
    assert wrap_angles(np.array([theta]))[0] == pytest.approx(w, abs=1e-12)


def test_pi_stays_positive():
    assert Pose2(0, 0, -math.pi).theta == math.pi
    assert compose(Pose2(0, 0, math.pi / 2), Pose2(0, 0, math.pi / 2)).theta == pytest.approx(math.pi)


@given(poses, poses)
def test_compose_matches_matrix_product(a, b):
    assert close(compose(a, b), from_matrix(as_matrix(a) @ as_matrix(b)), 1e-9)


@given(poses, poses, poses)
def test_compose_associative(a, b, c):
    assert close(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12)


@given(poses)
def test_inverse_cancels(p):
    assert close(compose(p, inverse(p)), Pose2(), 1e-12)
    assert close(compose(inverse(p), p), Pose2(), 1e-12)


@given(poses)
def test_theta_always_wrapped(p):
    for q in (p, inverse(p), compose(p, p), relative(p, Pose2(1, 2, 3))):
        assert -math.pi < q.theta <= math.pi


@given(poses, st.lists(st.tuples(coord, coord), min_size=2, max_size=8))
def test_transform_preserves_distances(p, pts):
    pts = np.array(pts)
    out = p.transform(pts)
    d_in = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d_out = np.linalg.norm(out[:, None] - out[None], axis=-1)
    np.testing.assert_allclose(d_out, d_in, atol=1e-12)


def test_bounded_magnitude_rigidity(rng):
    # the stated 1e-12 bound, on unit-scale data
    p = Pose2(0.3, -0.2, 0.7)
    pts = rng.uniform(-1, 1, (20, 2))
    out = p.transform(pts)
    d_in = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    d_out = np.linalg.norm(out[:, None] - out[None], axis=-1)
    assert np.max(np.abs(d_in - d_out)) < 1e-12


def test_array_helpers_match_scalar(rng):
    a = np.column_stack((rng.uniform(-5, 5, (50, 2)), rng.uniform(-3, 3, 50)))
    b = np.column_stack((rng.uniform(-5, 5, (50, 2)), rng.uniform(-3, 3, 50)))
    ca, ia, ra = compose_arrays(a, b), inverse_arrays(a), relative_arrays(a, b)
    for i in range(50):
        pa, pb = Pose2.from_array(a[i]), Pose2.from_array(b[i])
        assert close(Pose2.from_array(ca[i]), compose(pa, pb), 1e-12)
        assert close(Pose2.from_array(ia[i]), inverse(pa), 1e-12)
        assert close(Pose2.from_array(ra[i]), relative(pa, pb), 1e-12)


def test_velocity_scaled_and_negated():
    v = Velocity2(4.0, -1.0, 0.2)
    assert v.scaled(0.25) == Pose2(1.0, -0.25, 0.05)
    assert -v == Velocity2(-4.0, 1.0, -0.2)

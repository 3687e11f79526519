import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from radarodom.features import SurfacePointSet

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_surface_set(rng, n=None, extent=15.0, spacing=7.0, jitter=1.0):
    """Sparse, well-separated oriented points with anisotropic covariances."""
    g = np.arange(-2 * spacing, 2 * spacing + 1e-9, spacing)
    mean = np.array([(x, y) for x in g for y in g if x * x + y * y <= extent ** 2], dtype=float)
    mean = mean + rng.uniform(-jitter, jitter, mean.shape)
    if n is not None:
        mean = mean[:n]
    ang = rng.uniform(0, 2 * np.pi, len(mean))
    normal = np.stack((np.cos(ang), np.sin(ang)), axis=-1)
    tangent = np.stack((-normal[:, 1], normal[:, 0]), axis=-1)
    l1 = rng.uniform(0.01, 0.05, len(mean))
    l2 = rng.uniform(0.5, 1.5, len(mean))
    cov = (l1[:, None, None] * normal[:, :, None] * normal[:, None, :]
           + l2[:, None, None] * tangent[:, :, None] * tangent[:, None, :])
    support = rng.integers(6, 40, len(mean))
    return SurfacePointSet.from_points(mean, normal, cov, support)


def moved_set(s: SurfacePointSet, pose) -> SurfacePointSet:
    """Express ``s`` in a frame displaced by ``pose`` (so registering back yields ``pose``)."""
    inv = pose.inverse()
    rot = inv.rotation
    cov = np.einsum("ij,njk,lk->nil", rot, s.cov, rot)
    return SurfacePointSet.from_points(inv.transform(s.mean), inv.rotate(s.normal), cov, s.support)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

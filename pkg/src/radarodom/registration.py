"""Robust scan-to-multi-keyframe registration of oriented surface points.

The objective for a pose ``x`` is ``sum_k sum_(i,j) w_ij * rho(g_ij(x))`` where
``g`` is a squared point-to-point, point-to-line or point-to-distribution
distance and ``rho`` a robust loss. By default the loss acts on the distance
``h = sqrt(g)`` (``robust_input="distance"``); ``robust_input="metric"`` feeds
``g`` itself to the loss.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .features import SurfacePoint, SurfacePointSet
from .geometry import Pose2


class Cost(str, Enum):
    P2P = "P2P"
    P2L = "P2L"
    P2D = "P2D"


class Loss(str, Enum):
    SQUARED = "squared"
    HUBER = "huber"
    PSEUDO_HUBER = "pseudo_huber"
    CAUCHY = "cauchy"
    TUKEY = "tukey"


class WeightScheme(str, Enum):
    UNIFORM = "uniform"
    PLAN = "plan"
    DET = "det"
    DIR = "dir"
    COMBINED = "combined"


@dataclass(frozen=True)
class RegistrationConfig:
    cost: Cost = Cost.P2P
    loss: Loss = Loss.HUBER
    loss_delta: float = 0.1
    assoc_radius: float = 3.0
    normal_tolerance: float = math.radians(30.0)
    weight_scheme: WeightScheme = WeightScheme.COMBINED
    covariance_dampening: float = 0.1
    max_iterations: int = 8
    rel_decrease_eps: float = 1e-7
    robust_input: str = "distance"
    max_inner_iterations: int = 30

    def __post_init__(self):
        object.__setattr__(self, "cost", Cost(self.cost))
        object.__setattr__(self, "loss", Loss(self.loss))
        object.__setattr__(self, "weight_scheme", WeightScheme(self.weight_scheme))
        if not self.loss_delta > 0:
            raise ValueError("loss_delta must be positive")
        if not self.assoc_radius > 0:
            raise ValueError("assoc_radius must be positive")
        if self.robust_input not in ("distance", "metric"):
            raise ValueError("robust_input must be 'distance' or 'metric'")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class Correspondence(NamedTuple):
    keyframe_id: int
    target_index: int
    source_index: int
    weight: float


@dataclass
class Correspondences:
    keyframe: np.ndarray
    target: np.ndarray
    source: np.ndarray
    weight: np.ndarray

    @classmethod
    def empty(cls) -> "Correspondences":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), np.zeros(0))

    def __len__(self) -> int:
        return len(self.source)

    def __iter__(self) -> Iterator[Correspondence]:
        for k, j, i, w in zip(self.keyframe, self.target, self.source, self.weight):
            yield Correspondence(int(k), int(j), int(i), float(w))


@dataclass
class RegistrationResult:
    pose: Pose2
    covariance: np.ndarray
    iterations: int
    final_cost: float
    converged: bool
    correspondence_count: int
    initial_cost: float = 0.0
    covariance_ok: bool = True
    history: list[float] = field(default_factory=list)


# --- robust losses -----------------------------------------------------------

def robust_loss(h, loss: Loss | str, delta: float):
    """Closed-form robust loss of a scalar (or array) ``h``."""
    loss = Loss(loss)
    h = np.asarray(h, dtype=float)
    a = np.abs(h)
    if loss is Loss.SQUARED:
        out = 0.5 * h * h
    elif loss is Loss.HUBER:
        out = np.where(a <= delta, 0.5 * h * h, delta * (a - 0.5 * delta))
    elif loss is Loss.PSEUDO_HUBER:
        out = delta * delta * (np.sqrt(1.0 + (h / delta) ** 2) - 1.0)
    elif loss is Loss.CAUCHY:
        out = 0.5 * delta * delta * np.log1p((h / delta) ** 2)
    else:
        inner = 1.0 - (h / delta) ** 2
        out = np.where(a <= delta, delta * delta / 6.0 * (1.0 - inner ** 3), delta * delta / 6.0)
    return float(out) if out.ndim == 0 else out


def robust_loss_derivative(h, loss: Loss | str, delta: float):
    """``dL/dh``."""
    loss = Loss(loss)
    h = np.asarray(h, dtype=float)
    a = np.abs(h)
    if loss is Loss.SQUARED:
        out = h.copy()
    elif loss is Loss.HUBER:
        out = np.where(a <= delta, h, delta * np.sign(h))
    elif loss is Loss.PSEUDO_HUBER:
        out = h / np.sqrt(1.0 + (h / delta) ** 2)
    elif loss is Loss.CAUCHY:
        out = h / (1.0 + (h / delta) ** 2)
    else:
        out = np.where(a <= delta, h * (1.0 - (h / delta) ** 2) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def _rho_of_squared(s: np.ndarray, loss: Loss, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """``L(sqrt(s))`` and its derivative w.r.t. ``s``, written without square roots at zero."""
    d2 = delta * delta
    if loss is Loss.SQUARED:
        return 0.5 * s, np.full_like(s, 0.5)
    if loss is Loss.HUBER:
        inside = s <= d2
        root = np.sqrt(np.where(inside, d2, s))
        return (np.where(inside, 0.5 * s, delta * (root - 0.5 * delta)),
                np.where(inside, 0.5, 0.5 * delta / root))
    if loss is Loss.PSEUDO_HUBER:
        q = np.sqrt(1.0 + s / d2)
        return d2 * (q - 1.0), 0.5 / q
    if loss is Loss.CAUCHY:
        return 0.5 * d2 * np.log1p(s / d2), 0.5 / (1.0 + s / d2)
    inside = s <= d2
    u = np.where(inside, 1.0 - s / d2, 0.0)
    return d2 / 6.0 * (1.0 - u ** 3), 0.5 * u * u


def _rho(g: np.ndarray, cfg: RegistrationConfig) -> tuple[np.ndarray, np.ndarray]:
    if cfg.robust_input == "distance":
        return _rho_of_squared(g, cfg.loss, cfg.loss_delta)
    return (np.asarray(robust_loss(g, cfg.loss, cfg.loss_delta), dtype=float),
            np.asarray(robust_loss_derivative(g, cfg.loss, cfg.loss_delta), dtype=float))


# --- weights and per-pair costs ---------------------------------------------

def f_sim(a, b):
    """Similarity ``2 min(a, b) / (a + b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = a + b
    out = np.where(den > 0, 2.0 * np.minimum(a, b) / np.where(den > 0, den, 1.0), 1.0)
    return float(out) if out.ndim == 0 else out


def _weights(scheme: WeightScheme, plan_i, plan_j, det_i, det_j, n_i, n_j) -> np.ndarray:
    m = len(plan_i)
    if scheme is WeightScheme.UNIFORM:
        return np.ones(m)
    w = np.zeros(m)
    if scheme in (WeightScheme.PLAN, WeightScheme.COMBINED):
        w = w + f_sim(plan_i, plan_j)
    if scheme in (WeightScheme.DET, WeightScheme.COMBINED):
        w = w + f_sim(det_i, det_j)
    if scheme in (WeightScheme.DIR, WeightScheme.COMBINED):
        w = w + np.maximum(np.einsum("ij,ij->i", n_i, n_j), 0.0)
    return w


def residual_weight(a: SurfacePoint, b: SurfacePoint, scheme: WeightScheme | str) -> float:
    """Similarity weight between two surface points given in a common frame."""
    w = _weights(WeightScheme(scheme), np.array([a.planarity]), np.array([b.planarity]),
                 np.array([a.support]), np.array([b.support]),
                 np.array([a.normal], dtype=float), np.array([b.normal], dtype=float))
    return float(w[0])


def dampened_information(cov: np.ndarray, dampening: float) -> np.ndarray:
    """``(cov + dampening * I)^-1`` for a stack of 2x2 covariances."""
    cov = np.asarray(cov, dtype=float)
    a = cov[..., 0, 0] + dampening
    b = cov[..., 0, 1]
    c = cov[..., 1, 1] + dampening
    det = a * c - b * b
    info = np.empty_like(cov)
    info[..., 0, 0] = c / det
    info[..., 0, 1] = -b / det
    info[..., 1, 0] = -b / det
    info[..., 1, 1] = a / det
    return info


def cost_residual(target: SurfacePoint, source: SurfacePoint, pose: Pose2, cost: Cost | str,
                  dampening: float = 0.1) -> float:
    """Squared metric ``g`` between a target point (world) and a source point moved by ``pose``."""
    cost = Cost(cost)
    mu_t = np.array(tuple(target.mean), dtype=float)
    e = mu_t - pose.transform(np.array(tuple(source.mean), dtype=float))
    if cost is Cost.P2P:
        return float(e @ e)
    if cost is Cost.P2L:
        return float(np.dot(target.normal, e) ** 2)
    info = np.linalg.inv(np.asarray(target.covariance, dtype=float) + dampening * np.eye(2))
    return float(e @ info @ e)


# --- correspondences ---------------------------------------------------------

def _match_keyframe(src_world: np.ndarray, src_normal_world: np.ndarray, target: SurfacePointSet,
                    cfg: RegistrationConfig):
    if len(target) == 0 or len(src_world) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy()
    lists = target.tree.query_ball_point(src_world, cfg.assoc_radius)
    counts = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
    total = int(counts.sum())
    if total == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy()
    tgt = np.fromiter((j for l in lists for j in l), dtype=np.int64, count=total)
    src = np.repeat(np.arange(len(lists)), counts)
    cos_tol = math.cos(cfg.normal_tolerance)
    dots = np.einsum("ij,ij->i", src_normal_world[src], target.normal[tgt])
    ok = dots > cos_tol
    src, tgt = src[ok], tgt[ok]
    diff = target.mean[tgt] - src_world[src]
    d2 = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((tgt, d2, src))
    src, tgt = src[order], tgt[order]
    first = np.ones(len(src), dtype=bool)
    first[1:] = src[1:] != src[:-1]
    return src[first], tgt[first]


def find_correspondences(source: SurfacePointSet, targets: Sequence[SurfacePointSet], pose: Pose2,
                         cfg: RegistrationConfig, threads: int = 1) -> Correspondences:
    """Nearest compatible target point per source point and keyframe.

    A target qualifies when its mean lies within ``assoc_radius`` of the moved
    source mean and the angle between the normals is below ``normal_tolerance``.
    """
    src_world = pose.transform(source.mean)
    n_world = pose.rotate(source.normal)

    def match(k):
        return _match_keyframe(src_world, n_world, targets[k], cfg)

    if threads > 1 and len(targets) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(targets))) as pool:
            matches = list(pool.map(match, range(len(targets))))
    else:
        matches = [match(k) for k in range(len(targets))]

    parts = []
    for k, (src, tgt) in enumerate(matches):
        if len(src) == 0:
            continue
        t = targets[k]
        w = _weights(cfg.weight_scheme, source.planarity[src], t.planarity[tgt], source.support[src],
                     t.support[tgt], n_world[src], t.normal[tgt])
        parts.append(Correspondences(np.full(len(src), k, dtype=np.int64), tgt, src, w))
    if not parts:
        return Correspondences.empty()
    return Correspondences(*(np.concatenate([getattr(p, f) for p in parts])
                             for f in ("keyframe", "target", "source", "weight")))


# --- objective ---------------------------------------------------------------

@dataclass
class _Problem:
    src: np.ndarray
    tgt: np.ndarray
    normal: np.ndarray
    info: np.ndarray | None
    weight: np.ndarray


def _build_problem(source: SurfacePointSet, targets: Sequence[SurfacePointSet],
                   corr: Correspondences, cfg: RegistrationConfig) -> _Problem:
    m = len(corr)
    tgt = np.empty((m, 2))
    normal = np.empty((m, 2))
    info = np.empty((m, 2, 2)) if cfg.cost is Cost.P2D else None
    for k in np.unique(corr.keyframe):
        sel = corr.keyframe == k
        t = targets[int(k)]
        idx = corr.target[sel]
        tgt[sel] = t.mean[idx]
        normal[sel] = t.normal[idx]
        if info is not None:
            info[sel] = dampened_information(t.cov[idx], cfg.covariance_dampening)
    return _Problem(source.mean[corr.source], tgt, normal, info, corr.weight.astype(float))


def _evaluate(problem: _Problem, x: np.ndarray, cfg: RegistrationConfig, derivatives: bool):
    c, s = math.cos(x[2]), math.sin(x[2])
    px, py = problem.src[:, 0], problem.src[:, 1]
    rx, ry = c * px - s * py, s * px + c * py
    e = problem.tgt - np.stack((rx + x[0], ry + x[1]), axis=-1)
    if cfg.cost is Cost.P2P:
        g = np.einsum("ij,ij->i", e, e)
    elif cfg.cost is Cost.P2L:
        r = np.einsum("ij,ij->i", problem.normal, e)
        g = r * r
    else:
        se = np.einsum("ijk,ik->ij", problem.info, e)
        g = np.einsum("ij,ij->i", e, se)
    rho, drho = _rho(g, cfg)
    f = float(np.sum(problem.weight * rho))
    if not derivatives:
        return f, None, None, g
    m = len(g)
    je = np.zeros((m, 2, 3))
    je[:, 0, 0] = -1.0
    je[:, 1, 1] = -1.0
    je[:, 0, 2] = ry
    je[:, 1, 2] = -rx
    if cfg.cost is Cost.P2P:
        jr = je
        grad_g = 2.0 * np.einsum("ij,ijk->ik", e, je)
        gn = np.einsum("ijk,ijl->ikl", jr, jr)
    elif cfg.cost is Cost.P2L:
        jr = np.einsum("ij,ijk->ik", problem.normal, je)
        grad_g = 2.0 * r[:, None] * jr
        gn = np.einsum("ik,il->ikl", jr, jr)
    else:
        grad_g = 2.0 * np.einsum("ij,ijk->ik", se, je)
        gn = np.einsum("ijk,ijl,ilm->ikm", je, problem.info, je)
    coef = problem.weight * drho
    grad = coef @ grad_g
    hess = np.einsum("i,ikl->kl", 2.0 * coef, gn)
    return f, grad, hess, g


def objective(source: SurfacePointSet, targets: Sequence[SurfacePointSet], pose: Pose2,
              cfg: RegistrationConfig, correspondences: Correspondences | None = None) -> float:
    """Weighted robust sum over all correspondences of all keyframes."""
    if correspondences is None:
        correspondences = find_correspondences(source, targets, pose, cfg)
    if len(correspondences) == 0:
        return 0.0
    problem = _build_problem(source, targets, correspondences, cfg)
    return _evaluate(problem, pose.as_array(), cfg, derivatives=False)[0]


def objective_gradient(source: SurfacePointSet, targets: Sequence[SurfacePointSet], pose: Pose2,
                       cfg: RegistrationConfig, correspondences: Correspondences | None = None) -> np.ndarray:
    """Analytic gradient of :func:`objective` w.r.t. ``[x, y, theta]`` for fixed correspondences."""
    if correspondences is None:
        correspondences = find_correspondences(source, targets, pose, cfg)
    if len(correspondences) == 0:
        return np.zeros(3)
    problem = _build_problem(source, targets, correspondences, cfg)
    return _evaluate(problem, pose.as_array(), cfg, derivatives=True)[1]


# --- solver ------------------------------------------------------------------

@dataclass
class _InnerResult:
    x: np.ndarray
    cost: float
    accepted: int
    last_step: float
    costs: list[float]


def _solve_inner(problem: _Problem, x0: np.ndarray, cfg: RegistrationConfig) -> _InnerResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) with IRLS-weighted normal equations."""
    x = x0.copy()
    f, grad, hess, _ = _evaluate(problem, x, cfg, derivatives=True)
    costs = [f]
    mu = 1e-4
    accepted = 0
    last_step = 0.0
    for _ in range(cfg.max_inner_iterations):
        if f == 0.0 or not np.any(grad):
            break
        diag = np.diag(hess).copy()
        floor = max(1e-9 * float(diag.max(initial=0.0)), 1e-12)
        diag = np.maximum(diag, floor)
        improved = False
        while mu < 1e12:
            lhs = hess + mu * np.diag(diag)
            try:
                step = -np.linalg.solve(lhs, grad)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(lhs, grad, rcond=None)[0]
            x_new = x + step
            f_new = _evaluate(problem, x_new, cfg, derivatives=False)[0]
            if f_new < f:
                improved = True
                break
            mu *= 10.0
        if not improved:
            break
        mu = max(mu / 10.0, 1e-12)
        decrease = f - f_new
        x = x_new
        x[2] = math.remainder(x[2], 2.0 * math.pi)
        accepted += 1
        last_step = float(np.linalg.norm(step))
        f, grad, hess, _ = _evaluate(problem, x, cfg, derivatives=True)
        costs.append(f)
        if last_step < 1e-12 or decrease <= 1e-15 * max(f, 1e-300):
            break
    return _InnerResult(x, f, accepted, last_step, costs)


def _covariance(hess: np.ndarray) -> tuple[np.ndarray, bool]:
    hess = 0.5 * (hess + hess.T)
    evals = np.linalg.eigvalsh(hess)
    top = float(evals[-1])
    ok = top > 0 and evals[0] > 0 and top / evals[0] <= 1e12
    if ok:
        cov = np.linalg.inv(hess)
    else:
        ridge = max(1e-12 * top, 1e-12)
        cov = np.linalg.inv(hess + ridge * np.eye(3))
    return 0.5 * (cov + cov.T), ok


def register(source: SurfacePointSet, targets: Sequence[SurfacePointSet], initial_pose: Pose2,
             cfg: RegistrationConfig, threads: int = 1) -> RegistrationResult:
    """Alternate between associating correspondences and minimising the robust objective.

    Stops when an inner solve needs at most one (tiny) step, when the relative
    cost decrease between outer iterations drops below ``rel_decrease_eps``, or
    after ``max_iterations`` outer iterations.
    """
    x = initial_pose.as_array()
    converged = False
    prev_cost = None
    initial_cost = None
    history: list[float] = []
    corr = Correspondences.empty()
    problem = None
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        corr = find_correspondences(source, targets, Pose2.from_array(x), cfg, threads)
        if len(corr) == 0:
            problem = None
            break
        problem = _build_problem(source, targets, corr, cfg)
        inner = _solve_inner(problem, x, cfg)
        if initial_cost is None:
            initial_cost = inner.costs[0]
        x = inner.x
        history.append(inner.cost)
        if inner.accepted == 0 or (inner.accepted == 1 and inner.last_step < 1e-6):
            converged = True
            break
        if prev_cost is not None and abs(prev_cost - inner.cost) <= cfg.rel_decrease_eps * prev_cost:
            converged = True
            break
        prev_cost = inner.cost

    pose = Pose2.from_array(x)
    if problem is None:
        return RegistrationResult(pose, np.eye(3) * 1e12, it, 0.0, False, 0,
                                  0.0 if initial_cost is None else initial_cost, False, history)
    f, _, hess, _ = _evaluate(problem, pose.as_array(), cfg, derivatives=True)
    cov, cov_ok = _covariance(hess)
    return RegistrationResult(pose, cov, it, f, converged, len(corr), initial_cost, cov_ok, history)

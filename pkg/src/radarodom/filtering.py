"""Sparse detection from dense polar scans: k-strongest and CA-CFAR."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .radar_io import PolarScan


@dataclass(frozen=True)
class KStrongestConfig:
    k: int = 12
    z_min: float = 70.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.z_min < 0:
            raise ValueError("z_min must be >= 0")


@dataclass(frozen=True)
class CaCfarConfig:
    window: int = 40
    guard: int = 10
    false_alarm_rate: float = 1e-2
    z_floor: float = 20.0

    def __post_init__(self):
        if self.window < 1 or self.guard < 0:
            raise ValueError("window must be >= 1 and guard >= 0")
        if not 0.0 < self.false_alarm_rate < 1.0:
            raise ValueError("false_alarm_rate must lie in (0, 1)")


@dataclass
class Detections:
    """Selected cells; ``range_bin`` is 1-based (column ``range_bin - 1``)."""

    azimuth: np.ndarray
    range_bin: np.ndarray
    intensity: np.ndarray

    def __len__(self) -> int:
        return len(self.azimuth)

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        for a, d, z in zip(self.azimuth, self.range_bin, self.intensity):
            yield int(a), int(d), float(z)

    def tuples(self) -> list[tuple[int, int, float]]:
        return list(self)


def _concat(parts: list[Detections]) -> Detections:
    if not parts:
        return Detections(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
    return Detections(np.concatenate([p.azimuth for p in parts]),
                      np.concatenate([p.range_bin for p in parts]),
                      np.concatenate([p.intensity for p in parts]))


def _row_chunks(na: int, threads: int) -> list[tuple[int, int]]:
    n = max(1, min(threads, na))
    edges = np.linspace(0, na, n + 1).astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def _run_rows(fn, z: np.ndarray, threads: int) -> Detections:
    chunks = _row_chunks(z.shape[0], threads)
    if len(chunks) == 1:
        return fn(z, 0)
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: fn(z[c[0]:c[1]], c[0]), chunks))
    return _concat(parts)


def _k_strongest_rows(z: np.ndarray, row0: int, k: int, z_min: float) -> Detections:
    rows, cols = np.nonzero(z > z_min)
    vals = z[rows, cols]
    # sort by row, then descending intensity, then ascending range (closer wins ties)
    order = np.lexsort((cols, -vals.astype(float), rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        first = np.searchsorted(rows, rows, side="left")
        keep = np.arange(rows.size) - first < k
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    order = np.lexsort((cols, rows))
    return Detections((rows[order] + row0).astype(np.int64), (cols[order] + 1).astype(np.int64),
                      vals[order].astype(float))


def k_strongest(scan: PolarScan, cfg: KStrongestConfig, threads: int = 1) -> Detections:
    """Keep, per azimuth, the ``k`` strongest range bins whose intensity exceeds ``z_min``.

    Ties at the k-th rank go to the smaller range bin. Output is sorted by
    azimuth, then range bin.
    """
    return _run_rows(lambda z, r0: _k_strongest_rows(z, r0, cfg.k, cfg.z_min), scan.intensities, threads)


def cfar_scale(n_train: np.ndarray | int, false_alarm_rate: float) -> np.ndarray:
    """Cell-averaging threshold factor for exponential noise: ``N (Pfa^(-1/N) - 1)``."""
    n = np.asarray(n_train, dtype=float)
    return n * (false_alarm_rate ** (-1.0 / n) - 1.0)


def _ca_cfar_rows(z: np.ndarray, row0: int, cfg: CaCfarConfig) -> Detections:
    zf = z.astype(float)
    na, nr = zf.shape
    csum = np.zeros((na, nr + 1))
    np.cumsum(zf, axis=1, out=csum[:, 1:])
    d = np.arange(nr)
    g, w = cfg.guard, cfg.window
    lead_lo, lead_hi = np.clip(d - g - w, 0, nr), np.clip(d - g, 0, nr)
    lag_lo, lag_hi = np.clip(d + g + 1, 0, nr), np.clip(d + g + w + 1, 0, nr)
    n_train = (lead_hi - lead_lo) + (lag_hi - lag_lo)
    total = (csum[:, lead_hi] - csum[:, lead_lo]) + (csum[:, lag_hi] - csum[:, lag_lo])
    noise = total / n_train
    thresh = cfar_scale(n_train, cfg.false_alarm_rate) * noise
    hit = (zf >= cfg.z_floor) & (zf > thresh)
    rows, cols = np.nonzero(hit)
    return Detections((rows + row0).astype(np.int64), (cols + 1).astype(np.int64), zf[rows, cols])


def ca_cfar(scan: PolarScan, cfg: CaCfarConfig, threads: int = 1) -> Detections:
    """Cell-averaging CFAR along range, independently per azimuth.

    Training cells shrink to one side near the ends of the range axis.
    """
    if 2 * (cfg.window + cfg.guard) + 1 > scan.nr:
        raise ValueError(f"CA-CFAR window {cfg.window} + guard {cfg.guard} too large for nr={scan.nr}")
    return _run_rows(lambda z, r0: _ca_cfar_rows(z, r0, cfg), scan.intensities, threads)


def apply_filter(scan: PolarScan, cfg, threads: int = 1) -> Detections:
    if isinstance(cfg, KStrongestConfig):
        return k_strongest(scan, cfg, threads)
    if isinstance(cfg, CaCfarConfig):
        return ca_cfar(scan, cfg, threads)
    raise TypeError(f"unknown filter config {type(cfg).__name__}")

"""Flat ``key = value`` parameter files and the named presets."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .features import FeatureConfig
from .filtering import CaCfarConfig, KStrongestConfig
from .odometry import OdometryConfig
from .registration import Cost, Loss, RegistrationConfig, WeightScheme


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Parameters:
    """User-facing odometry parameters in their natural units (angles in degrees)."""

    filter: str = "kstrong"
    k: int = 12
    z_min: float = 70.0
    cfar_window: int = 40
    cfar_guard: int = 10
    cfar_pfa: float = 0.01
    cfar_floor: float = 20.0
    resample_f: float = 1.0
    resolution_r: float = 3.5
    min_support: int = 6
    max_condition: float = 1e5
    d_min: float = 2.5
    intensity_weighted: bool = True
    cost: str = "P2L"
    loss: str = "huber"
    loss_delta: float = 0.1
    theta_max_deg: float = 30.0
    weights: str = "combined"
    covariance_dampening: float = 0.1
    max_iterations: int = 8
    robust_input: str = "distance"
    keyframes_s: int = 1
    keyframe_dist: float = 1.5
    keyframe_rot_deg: float = 5.0
    motion_compensation: bool = True

    def to_odometry_config(self) -> OdometryConfig:
        try:
            if self.filter == "kstrong":
                filt = KStrongestConfig(self.k, self.z_min)
            elif self.filter == "cacfar":
                filt = CaCfarConfig(self.cfar_window, self.cfar_guard, self.cfar_pfa, self.cfar_floor)
            else:
                raise ConfigError(f"unknown filter {self.filter!r} (expected kstrong or cacfar)")
            feat = FeatureConfig(self.resolution_r, self.resample_f, self.intensity_weighted,
                                 self.min_support, self.max_condition, self.d_min,
                                 self.z_min if self.filter == "kstrong" else self.cfar_floor)
            reg = RegistrationConfig(Cost(self.cost), Loss(self.loss), self.loss_delta, self.resolution_r,
                                     math.radians(self.theta_max_deg), WeightScheme(self.weights),
                                     self.covariance_dampening, self.max_iterations,
                                     robust_input=self.robust_input)
            return OdometryConfig(filt, feat, reg, self.keyframes_s, self.keyframe_dist,
                                  math.radians(self.keyframe_rot_deg), self.motion_compensation)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def dumps(self) -> str:
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in fields(self))


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(name: str, kind, text: str, lineno: int):
    try:
        if kind is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
        return text
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {text!r} for {name}") from None


_TYPES = {"bool": bool, "int": int, "float": float, "str": str}


def loads(text: str, base: Parameters | None = None) -> Parameters:
    """Parse ``key = value`` lines on top of ``base`` (defaults if omitted). ``#`` starts a comment."""
    base = Parameters() if base is None else base
    kinds = {f.name: _TYPES[f.type] if isinstance(f.type, str) else f.type for f in fields(Parameters)}
    updates, seen = {}, set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            if updates:
                raise ConfigError(f"line {lineno}: preset must come before other keys")
            base = preset(value)
            continue
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        updates[key] = _convert(key, kinds[key], value, lineno)
    params = replace(base, **updates)
    params.to_odometry_config()  # validate eagerly
    return params


def load(path) -> Parameters:
    return loads(Path(path).read_text())


_CFEAR_1 = Parameters()
_CFEAR_3 = replace(_CFEAR_1, k=40, z_min=60.0, resolution_r=3.0, cost="P2P", keyframes_s=4)

PRESETS: dict[str, Parameters] = {
    "cfear-1": _CFEAR_1,
    "cfear-2": replace(_CFEAR_1, keyframes_s=3),
    "cfear-3": _CFEAR_3,
    "cfear-3-s50": replace(_CFEAR_3, keyframes_s=50, loss="cauchy"),
    "baseline": replace(_CFEAR_3, keyframes_s=1),
}


def preset(name: str) -> Parameters:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None

"""Command-line entry point: ``odometry``, ``simulate`` and ``evaluate`` subcommands.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .geometry import Pose2
from .evaluation import DEFAULT_SEGMENTS, EvaluationError, evaluate
from .odometry import STAGES, run_sequence
from .radar_io import (ScanFormatError, Trajectory, TrajectoryParseError, list_scans, read_scan,
                       read_trajectory, write_covariances, write_kitti, write_scan, write_trajectory)
from .simulator import (SimConfig, SimTrajectory, SimulationError, SpeedProfile, WorldParseError,
                        generate_sequence, loop_with_perimeter, read_world, straight_path, street_world, urban_world)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("radarodom")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _resolve_params(args) -> cfgmod.Parameters:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        base = cfgmod.preset(args.preset) if args.preset else None
        return cfgmod.loads(path.read_text(), base)
    return cfgmod.preset(args.preset or "cfear-3")


def _timing_report(result, n_scans: int) -> str:
    stats = result.timing_stats()
    lines = [f"scans {n_scans}", f"divergences {result.divergences}",
             "stage mean_ms max_ms"]
    for name in STAGES + ("total",):
        s = stats[name]
        lines.append(f"{name} {1e3 * s['mean']:.3f} {1e3 * s['max']:.3f}")
    n_sp = [r.n_surface_points for r in result.reports]
    if n_sp:
        lines.append(f"surface_points_mean {np.mean(n_sp):.1f}")
    return "\n".join(lines) + "\n"


def cmd_odometry(args) -> int:
    params = _resolve_params(args)
    if args.print_config:
        sys.stdout.write(params.dumps())
        return EXIT_OK
    if args.scan_dir is None or args.output is None:
        raise UsageError("odometry needs SCAN_DIR and --output unless --print-config is given")
    cfg = params.to_odometry_config()
    paths = list_scans(args.scan_dir)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if not paths:
        log.warning("no .cfrad scans in %s; writing an empty trajectory", args.scan_dir)
    result = run_sequence((read_scan(p) for p in paths), cfg, threads=args.threads)
    for i, r in enumerate(result.reports):
        if r.diverged:
            log.warning("scan %d (%s): registration diverged, kept predicted pose", i, paths[i].name)
    write_trajectory(result.trajectory, out)
    write_covariances(result.trajectory, out.with_suffix(".cov"))
    if args.kitti:
        write_kitti(result.trajectory, out.with_suffix(".kitti"))
    timing = Path(args.timing) if args.timing else out.with_suffix(".timing.txt")
    timing.write_text(_timing_report(result, len(paths)))
    return EXIT_OK


def parse_traj_spec(spec: str) -> SimTrajectory:
    """``kind[:length][,key=value...]`` with kind in {loop, line, stationary}.

    Keys: speed, amplitude, period (speed profile); height, radius (loop shape);
    x, y, heading (line start); duration (stationary).
    """
    head, *opts = spec.split(",")
    kind, _, length_txt = head.partition(":")
    kv = {}
    for o in opts:
        k, sep, v = o.partition("=")
        if not sep:
            raise UsageError(f"bad trajectory option {o!r}")
        try:
            kv[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"bad trajectory option value {o!r}") from None
    known = {"speed", "amplitude", "period", "height", "radius", "x", "y", "heading", "duration"}
    if set(kv) - known:
        raise UsageError(f"unknown trajectory options: {', '.join(sorted(set(kv) - known))}")
    try:
        length = float(length_txt) if length_txt else None
    except ValueError:
        raise UsageError(f"bad trajectory length {length_txt!r}") from None
    speed = SpeedProfile(kv.get("speed", 5.0), kv.get("amplitude", 0.0), kv.get("period", 20.0))
    if kind == "loop":
        path = loop_with_perimeter(length or 500.0, kv.get("height", 100.0), kv.get("radius", 10.0))
        return SimTrajectory(path, speed)
    if kind == "line":
        start = Pose2(kv.get("x", 0.0), kv.get("y", 0.0), kv.get("heading", 0.0))
        return SimTrajectory(straight_path(length or 100.0, start), speed)
    if kind == "stationary":
        duration = kv.get("duration", 2.5)
        start = Pose2(kv.get("x", 0.0), kv.get("y", 0.0), kv.get("heading", 0.0))
        return SimTrajectory(straight_path(0.0, start), SpeedProfile(0.0), duration=duration)
    raise UsageError(f"unknown trajectory kind {kind!r} (expected loop, line or stationary)")


def _load_world(spec: str, seed: int):
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        if name == "urban":
            return urban_world(seed)[0]
        if name == "street":
            return street_world(seed)[0]
        raise UsageError(f"unknown builtin world {name!r} (expected urban or street)")
    path = Path(spec)
    if not path.is_file():
        raise FileNotFoundError(f"world file not found: {path}")
    return read_world(path)


def cmd_simulate(args) -> int:
    world = _load_world(args.world, args.seed)
    traj = parse_traj_spec(args.traj)
    sim = SimConfig(na=args.na, nr=args.nr, gamma=args.gamma, sweep_duration=args.sweep_duration,
                    speckle_sigma=args.speckle, noise_floor_mean=args.noise_floor,
                    multipath_gain=args.multipath, seed=args.seed)
    scans, gt = generate_sequence(world, traj, sim)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i, scan in enumerate(scans):
        write_scan(scan, out / f"scan_{i:06d}.cfrad")
    write_trajectory(gt, out / "groundtruth.traj")
    log.info("wrote %d scans to %s", len(scans), out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    est, gt = read_trajectory(args.estimate), read_trajectory(args.groundtruth)
    if len(est) != len(gt):
        raise EvaluationError(f"trajectory lengths differ: {args.estimate} has {len(est)} poses, "
                              f"{args.groundtruth} has {len(gt)}")
    segments = DEFAULT_SEGMENTS if args.segments is None else args.segments
    report = evaluate(est, gt, segments, args.stride)
    sys.stdout.write(report.to_text())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def _segments(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad segment list {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("segment lengths must be positive")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="radarodom", description="Spinning-radar odometry toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    o = sub.add_parser("odometry", help="estimate a trajectory from a directory of .cfrad scans")
    o.add_argument("scan_dir", nargs="?")
    o.add_argument("-o", "--output", help="output .traj path (.cov and .timing.txt written alongside)")
    o.add_argument("--preset", choices=None, help=f"one of {', '.join(cfgmod.PRESETS)} (default cfear-3)")
    o.add_argument("--config", help="key = value parameter file (applied on top of --preset)")
    o.add_argument("--threads", type=_positive_int, default=1)
    o.add_argument("--seed", type=int, default=0, help="accepted for symmetry; odometry is deterministic")
    o.add_argument("--print-config", action="store_true", help="print the resolved parameters and exit")
    o.add_argument("--timing", help="timing report path")
    o.add_argument("--kitti", action="store_true", help="also write KITTI 3x4 pose rows")
    o.set_defaults(func=cmd_odometry)

    s = sub.add_parser("simulate", help="render a synthetic scan sequence with ground truth")
    s.add_argument("--world", default="builtin:urban", help="world file or builtin:urban / builtin:street")
    s.add_argument("--traj", default="loop:500", help="trajectory spec, e.g. loop:500,speed=5,amplitude=0.3")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=_positive_int, default=1, help="accepted for symmetry")
    d = SimConfig()
    s.add_argument("--na", type=_positive_int, default=d.na)
    s.add_argument("--nr", type=_positive_int, default=d.nr)
    s.add_argument("--gamma", type=float, default=d.gamma)
    s.add_argument("--sweep-duration", type=float, default=d.sweep_duration)
    s.add_argument("--speckle", type=float, default=d.speckle_sigma)
    s.add_argument("--noise-floor", type=float, default=d.noise_floor_mean)
    s.add_argument("--multipath", type=float, default=d.multipath_gain)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="compare an estimated trajectory against ground truth")
    e.add_argument("estimate")
    e.add_argument("groundtruth")
    e.add_argument("--segments", type=_segments, help="comma-separated segment lengths in metres")
    e.add_argument("--stride", type=_positive_int, default=1)
    e.add_argument("--csv", help="write metric,name,value rows here")
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, cfgmod.ConfigError) as exc:
        if isinstance(exc, cfgmod.ConfigError) and getattr(args, "config", None) and "preset" not in str(exc):
            log.error("%s", exc)
            return EXIT_DATA
        parser.print_usage(sys.stderr)
        log.error("%s", exc)
        return EXIT_USAGE
    except (FileNotFoundError, NotADirectoryError, PermissionError, IsADirectoryError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ScanFormatError, TrajectoryParseError, WorldParseError, EvaluationError, SimulationError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

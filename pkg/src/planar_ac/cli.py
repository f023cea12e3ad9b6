"""``planar-ac`` command line: bench, solve and simulate.

Exit codes: 0 success, 2 bad arguments or unparsable input, 3 output could
not be written, 4 no model found.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bench
from .corrfile import CorrespondenceFile, ParseError, load
from .errors import NoModelFound
from .geometry import PlaneClass, denormalize_rows, planar_angle
from .methods import METHODS
from .ransac import RansacConfig, Refit, ransac_pose

EXIT_OK, EXIT_USAGE, EXIT_WRITE, EXIT_NO_MODEL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _nonneg(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _solver_list(s):
    names = [x.strip() for x in s.split(",") if x.strip()]
    bad = [x for x in names if x not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown solver(s) {bad}; choose from {', '.join(METHODS)}")
    return names


def _wall_angle(s):
    v = float(s)
    if not -90.0 < v < 90.0:
        raise argparse.ArgumentTypeError("wall angle must lie in (-90, 90) degrees")
    return v


def _ratio(s):
    v = float(s)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError("outlier ratio must lie in [0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="planar-ac", description="Planar-motion relative pose from affine correspondences.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="run a synthetic error sweep")
    b.add_argument("--experiment", choices=[e.value for e in bench.Experiment], default="noise")
    b.add_argument("--solvers", type=_solver_list, default=None,
                   help="comma-separated solver names")
    b.add_argument("--n", type=_positive_int, default=1000, help="trials per cell")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--plane", choices=[c.value for c in PlaneClass], default=None,
                   help="plane class for noise and tilt sweeps")
    b.add_argument("--motion", choices=[m.value for m in bench.Motion], default="forward")
    b.add_argument("--out-csv", "--out", dest="out_csv", default="-")
    b.add_argument("--out-svg", default=None)

    s = sub.add_parser("solve", help="estimate pose from a correspondence file")
    s.add_argument("input")
    s.add_argument("--solver", choices=list(METHODS), default="1ac-ground")
    s.add_argument("--threshold", type=float, default=1e-3)
    s.add_argument("--max-iterations", type=_positive_int, default=10_000)
    s.add_argument("--confidence", type=float, default=0.99)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--refit", choices=[r.value for r in Refit], default="ac")
    s.add_argument("--no-lo", action="store_true", help="disable local optimization")
    s.add_argument("--all", action="store_true",
                   help="print every equally supported hypothesis, one per line")
    s.add_argument("--out", default="-")

    m = sub.add_parser("simulate", help="write a synthetic correspondence file")
    m.add_argument("--plane", choices=[c.value for c in PlaneClass], default="ground")
    m.add_argument("--wall-angle", type=_wall_angle, default=0.0, help="degrees")
    m.add_argument("--motion", choices=[mo.value for mo in bench.Motion], default="forward")
    m.add_argument("--alpha", type=float, default=None, help="yaw in degrees; random if omitted")
    m.add_argument("--tilt", type=float, default=0.0, help="degrees about X")
    m.add_argument("--points", type=_positive_int, default=100)
    m.add_argument("--baseline", type=float, default=0.1)
    m.add_argument("--distance", type=float, default=1.0)
    m.add_argument("--focal", type=float, default=1000.0)
    m.add_argument("--point-noise", type=_nonneg, default=0.0, help="pixels")
    m.add_argument("--angle-noise", type=_nonneg, default=0.0, help="degrees")
    m.add_argument("--scale-noise", type=_nonneg, default=0.0, help="percent")
    m.add_argument("--both-images", action="store_true")
    m.add_argument("--outlier-ratio", type=_ratio, default=0.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.add_argument("--truth", default=None, help="ground-truth JSON (default: OUT.json)")
    return p


def _write(path, text) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as f:
        f.write(text)


def _vec(v) -> str:
    return ",".join(f"{x:.9g}" for x in np.asarray(v, dtype=float) + 0.0)


def cmd_bench(args) -> int:
    scene = None
    if args.plane is not None or args.motion != "forward":
        kw = {"motion": args.motion}
        if args.plane is not None:
            kw["plane"] = args.plane
        scene = bench.SceneConfig(**kw)
    result = bench.run_sweep(args.experiment, args.solvers, args.n, args.seed, scene)
    try:
        _write(args.out_csv, result.to_csv())
        if args.out_svg:
            bench.plot_svg(result, args.out_svg)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_WRITE
    return EXIT_OK


def _record(hyp, result) -> str:
    alpha = math.degrees(planar_angle(hyp.rotation))
    normal = "none" if hyp.normal is None else _vec(hyp.normal)
    return (f"alpha_deg={alpha:.9g} t={_vec(hyp.t_dir)} normal={normal} "
            f"inliers={result.inlier_count} iterations={result.iterations} "
            f"time_ms={1000 * result.wall_time:.3f}\n")


def cmd_solve(args) -> int:
    try:
        data = load(args.input)
        cfg = RansacConfig(args.threshold, args.max_iterations, args.confidence, args.seed,
                           args.solver, Refit(args.refit), not args.no_lo)
    except (OSError, ParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = ransac_pose(data.normalized(), cfg)
    except NoModelFound as e:
        print(f"error: no model found: {e}", file=sys.stderr)
        return EXIT_NO_MODEL
    hyps = result.alternatives if args.all else [result.hypothesis]
    try:
        _write(args.out, "".join(_record(h, result) for h in hyps))
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_WRITE
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = bench.SceneConfig(
            plane=args.plane, wall_angle=math.radians(args.wall_angle),
            plane_distance=args.distance, baseline=args.baseline, focal=args.focal,
            motion=args.motion, alpha=None if args.alpha is None else math.radians(args.alpha),
            points_per_trial=args.points, vertical_tilt=math.radians(args.tilt))
        noise = bench.NoiseParams(args.point_noise, args.angle_noise, args.scale_noise,
                                  args.both_images)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(args.seed)
    trial = bench.generate_trial(cfg, noise, rng)
    rows = trial.pixel_rows
    n_out = int(round(args.points * args.outlier_ratio / (1.0 - args.outlier_ratio)))
    if n_out:
        out = denormalize_rows(trial.K, trial.K, bench.outlier_rows(n_out, cfg, rng))
        rows = np.vstack([rows, out])
    order = rng.permutation(len(rows))
    rows = rows[order]
    inliers = sorted(int(i) for i in np.flatnonzero(order < args.points))
    truth = {
        "plane": trial.plane.value,
        "wall_angle_deg": args.wall_angle,
        "alpha_deg": math.degrees(trial.alpha),
        "rotation": trial.rotation.tolist(),
        "t_dir": trial.t_dir.tolist(),
        "normal": trial.normal.tolist(),
        "homography": trial.homography.h.tolist(),
        "inliers": inliers,
        "seed": args.seed,
    }
    try:
        _write(args.out, CorrespondenceFile(trial.K, trial.K, rows).dumps())
        _write(args.truth or args.out + ".json", json.dumps(truth, indent=2) + "\n")
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_WRITE
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return {"bench": cmd_bench, "solve": cmd_solve, "simulate": cmd_simulate}[args.command](args)

"""Synthetic scenes, the two-part noise model and the three error sweeps.

A trial places a plane at distance ``plane_distance`` from the first camera,
samples points whose projections fall inside both image frames, and
projects them through the exact plane homography. Affinities are the
Jacobians of that homography at the true points.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError, ProjectionOutOfFrame
from .geometry import (CameraIntrinsics, Homography, PlaneClass, affine_rows_from_homography,
                       compose_homography, normalize_rows, planar_rotation, rotation_x)
from .methods import get_method
from .validation import pose_errors

MAX_BATCHES = 200


class Motion(enum.Enum):
    FORWARD = "forward"
    SIDEWAYS = "sideways"


class Experiment(enum.Enum):
    NOISE = "noise"
    WALL = "wall"
    TILT = "tilt"


@dataclass(frozen=True)
class SceneConfig:
    plane: PlaneClass = PlaneClass.GROUND
    # yaw of a general wall away from the frontal orientation, radians
    wall_angle: float = 0.0
    plane_distance: float = 1.0
    baseline: float = 0.1
    focal: float = 1000.0
    motion: Motion = Motion.FORWARD
    # None draws the yaw uniformly from +-max_alpha per trial
    alpha: float | None = None
    max_alpha: float = math.radians(15.0)
    points_per_trial: int = 4
    # rotation of the second camera about X, radians
    vertical_tilt: float = 0.0
    half_frame_px: float = 1000.0
    max_depth: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "plane", PlaneClass(self.plane))
        object.__setattr__(self, "motion", Motion(self.motion))
        if not self.plane_distance > 0:
            raise ValueError("plane_distance must be positive")
        if not self.focal > 0 or not self.half_frame_px > 0:
            raise ValueError("focal length and frame size must be positive")
        if self.points_per_trial < 1:
            raise ValueError("points_per_trial must be at least 1")
        if not abs(self.wall_angle) < math.pi / 2:
            raise ValueError("wall angle must lie in (-90, 90) degrees")

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(self.focal, self.focal)

    @property
    def normal(self) -> np.ndarray:
        """Unit plane normal pointing from the plane towards the first camera."""
        if self.plane is PlaneClass.GROUND:
            return np.array([0.0, 1.0, 0.0])
        if self.plane is PlaneClass.SIDE:
            return np.array([-1.0, 0.0, 0.0])
        if self.plane is PlaneClass.FRONTAL:
            return np.array([0.0, 0.0, -1.0])
        w = self.wall_angle
        return np.array([-math.sin(w), 0.0, -math.cos(w)])


@dataclass(frozen=True)
class NoiseParams:
    point_px: float = 0.0
    affine_angle_deg: float = 0.0
    affine_scale_pct: float = 0.0
    both_images: bool = False
    gaussian: bool = False

    def __post_init__(self):
        if min(self.point_px, self.affine_angle_deg, self.affine_scale_pct) < 0:
            raise ValueError("noise levels must be non-negative")

    def scaled(self, f: float) -> "NoiseParams":
        return NoiseParams(f * self.point_px, f * self.affine_angle_deg,
                           f * self.affine_scale_pct, self.both_images, self.gaussian)


@dataclass
class Trial:
    rows: np.ndarray  # normalized (k, 8)
    pixel_rows: np.ndarray
    K: CameraIntrinsics
    rotation: np.ndarray
    t_dir: np.ndarray
    normal: np.ndarray
    homography: Homography
    alpha: float
    plane: PlaneClass
    wall_angle: float = 0.0


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _scene_pose(cfg: SceneConfig, alpha: float):
    R = rotation_x(cfg.vertical_tilt) @ planar_rotation(alpha)
    direction = np.array([0.0, 0.0, 1.0]) if cfg.motion is Motion.FORWARD else np.array([1.0, 0.0, 0.0])
    t = -R @ (cfg.baseline * direction)
    return R, t


def _sample_points(cfg, R, t, n_vec, rng, k):
    f, half, d = cfg.focal, cfg.half_frame_px, cfg.plane_distance
    lim = half / f
    got = np.empty((0, 2))
    for _ in range(MAX_BATCHES):
        x1 = rng.uniform(-lim, lim, size=(4 * k, 2))
        u1 = np.column_stack([x1, np.ones(len(x1))])
        # ray depth z with n.(z u) + d = 0
        nu = u1 @ n_vec
        with np.errstate(divide="ignore", invalid="ignore"):
            z = -d / nu
        ok = (nu < 0) & (z <= cfg.max_depth)
        X = u1 * z[:, None]
        X2 = X @ R.T + t
        ok &= X2[:, 2] > 1e-9
        with np.errstate(divide="ignore", invalid="ignore"):
            x2 = X2[:, :2] / X2[:, 2:3]
        ok &= np.all(np.abs(x2) <= lim, axis=1)
        got = np.vstack([got, x1[ok]])
        if len(got) >= k:
            return got[:k]
    raise ProjectionOutOfFrame(f"could not place {k} points inside both frames")


def _rot2(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def _perturb_affine(a: np.ndarray, noise: NoiseParams, u: np.ndarray) -> np.ndarray:
    """``u`` holds four numbers in [-1, 1): two rotation and two scale factors."""
    U, s, Vt = np.linalg.svd(a)
    da = math.radians(noise.affine_angle_deg)
    ds = noise.affine_scale_pct / 100.0
    U = _rot2(u[0] * da) @ U
    Vt = _rot2(u[1] * da) @ Vt
    s = s * (1.0 + ds * u[2:4])
    return U @ np.diag(s) @ Vt


def generate_trial(cfg: SceneConfig, noise: NoiseParams = NoiseParams(), seed=0) -> Trial:
    rng = _rng(seed)
    alpha = cfg.alpha if cfg.alpha is not None else rng.uniform(-cfg.max_alpha, cfg.max_alpha)
    R, t = _scene_pose(cfg, alpha)
    n_vec = cfg.normal
    H = compose_homography(R, t, n_vec, cfg.plane_distance)
    k = cfg.points_per_trial
    x1 = _sample_points(cfg, R, t, n_vec, rng, k)
    rows = affine_rows_from_homography(H, x1)

    # noise randoms are always drawn so that trials sharing a seed differ
    # only in noise magnitude
    if noise.gaussian:
        offsets2 = rng.normal(size=(k, 2))
        offsets1 = rng.normal(size=(k, 2))
    else:
        ang2 = rng.uniform(0.0, 2 * math.pi, size=k)
        ang1 = rng.uniform(0.0, 2 * math.pi, size=k)
        offsets2 = np.column_stack([np.cos(ang2), np.sin(ang2)])
        offsets1 = np.column_stack([np.cos(ang1), np.sin(ang1)])
    aff_u = rng.uniform(-1.0, 1.0, size=(k, 4))

    for i in range(k):
        a = rows[i, 4:8].reshape(2, 2)
        rows[i, 4:8] = _perturb_affine(a, noise, aff_u[i]).ravel()
    K = cfg.intrinsics
    pix = np.empty_like(rows)
    pix[:, :2] = rows[:, :2] * cfg.focal
    pix[:, 2:4] = rows[:, 2:4] * cfg.focal
    pix[:, 4:8] = rows[:, 4:8]
    pix[:, 2:4] += noise.point_px * offsets2
    if noise.both_images:
        pix[:, :2] += noise.point_px * offsets1
    t_dir = t / np.linalg.norm(t)
    return Trial(normalize_rows(K, K, pix), pix, K, R, t_dir, n_vec, H, float(alpha), cfg.plane,
                 cfg.wall_angle)


def outlier_rows(n: int, cfg: SceneConfig, seed=0) -> np.ndarray:
    """Random normalized AC rows with both points uniform in the frame."""
    rng = _rng(seed)
    lim = cfg.half_frame_px / cfg.focal
    pts = rng.uniform(-lim, lim, size=(n, 4))
    aff = np.eye(2).ravel() + rng.normal(scale=0.2, size=(n, 4))
    return np.column_stack([pts, aff])


# --------------------------------------------------------------------------
# sweeps

NOISE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
FULL_NOISE = NoiseParams(1.0, 5.0, 5.0)
WALL_ANGLES_DEG = tuple(range(-80, 81, 20))
TILT_NOISE = NoiseParams(1.0, 1.0, 1.0)
TILT_DEG = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class Cell:
    solver: str
    axis_value: float
    xi_r: float
    xi_t: float
    xi_n: float | None
    failures: int = 0


@dataclass
class SweepResult:
    experiment: Experiment
    n: int
    seed: int
    cells: list[Cell] = field(default_factory=list)

    @property
    def solvers(self) -> list[str]:
        return list(dict.fromkeys(c.solver for c in self.cells))

    def series(self, solver: str, metric: str = "xi_r") -> tuple[np.ndarray, np.ndarray]:
        cs = [c for c in self.cells if c.solver == solver]
        return (np.array([c.axis_value for c in cs]),
                np.array([getattr(c, metric) for c in cs], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "solver", "axis_value", "xi_r_deg", "xi_t_deg", "xi_n_deg",
                    "n", "seed"])
        for c in self.cells:
            xi_n = "" if c.xi_n is None else f"{math.degrees(c.xi_n):.9g}"
            w.writerow([self.experiment.value, c.solver, f"{c.axis_value:.9g}",
                        f"{math.degrees(c.xi_r):.9g}", f"{math.degrees(c.xi_t):.9g}", xi_n,
                        self.n, self.seed])
        return buf.getvalue()


_FALLBACK = (math.pi / 2, math.pi / 2, math.pi / 2)


def trial_errors(solver: str, trial: Trial, with_normal: bool = False):
    """Errors of the hypothesis closest to the truth, or ``None`` on failure.

    Estimators that return several physically valid hypotheses (homography
    decompositions, the general wall solver) are scored by their best one.
    """
    method = get_method(solver)
    try:
        hyps = method.fit(trial.rows, select=True)
    except GeometryError:
        return None
    truth = (trial.rotation, trial.t_dir, trial.normal)
    best = None
    for h in hyps:
        if h.rotation is None:
            continue
        est = (h.rotation, h.t_dir, h.normal) if with_normal else (h.rotation, h.t_dir)
        e = pose_errors(est, truth)
        key = e.xi_r + e.xi_t
        if best is None or key < best[0]:
            best = (key, e)
    if best is None:
        return None
    e = best[1]
    xi_n = e.xi_n if with_normal else None
    if with_normal and xi_n is None:
        xi_n = math.pi / 2
    return e.xi_r, e.xi_t, xi_n


def _grid(experiment: Experiment, scene: SceneConfig | None):
    """``(axis values, scene per value, noise per value)`` for an experiment."""
    if experiment is Experiment.NOISE:
        base = scene or SceneConfig()
        return [(lvl, base, FULL_NOISE.scaled(lvl)) for lvl in NOISE_LEVELS]
    if experiment is Experiment.WALL:
        base = scene or SceneConfig(plane=PlaneClass.GENERAL_VERTICAL)
        return [(float(a), replace(base, plane=PlaneClass.GENERAL_VERTICAL,
                                    wall_angle=math.radians(a)), FULL_NOISE)
                for a in WALL_ANGLES_DEG]
    base = scene or SceneConfig()
    return [(tilt, replace(base, vertical_tilt=math.radians(tilt)), TILT_NOISE)
            for tilt in TILT_DEG]


def default_solvers(experiment: Experiment) -> list[str]:
    if experiment is Experiment.WALL:
        return ["1ac-vertical", "2ac", "4pc"]
    return ["1ac-ground", "2ac", "4pc"]


def run_sweep(experiment, solvers=None, n: int = 1000, seed: int = 0,
              scene: SceneConfig | None = None) -> SweepResult:
    """Mean errors per (axis value, solver) over ``n`` trials.

    Trial ``i`` draws from the stream ``(seed, i)`` at every axis value, so
    cells along a sweep share their scenes and noise directions.
    """
    experiment = Experiment(experiment)
    if n < 1:
        raise ValueError("n must be at least 1")
    solvers = list(solvers) if solvers else default_solvers(experiment)
    for s in solvers:
        get_method(s)
    with_normal = experiment is Experiment.WALL
    result = SweepResult(experiment, n, seed)
    for value, cfg, noise in _grid(experiment, scene):
        sums = np.zeros((len(solvers), 3))
        fails = [0] * len(solvers)
        for i in range(n):
            trial = generate_trial(cfg, noise, [seed, i])
            for j, s in enumerate(solvers):
                err = trial_errors(s, trial, with_normal)
                if err is None:
                    fails[j] += 1
                    err = _FALLBACK
                sums[j] += [err[0], err[1], err[2] if err[2] is not None else 0.0]
        for j, s in enumerate(solvers):
            m = sums[j] / n
            result.cells.append(Cell(s, float(value), float(m[0]), float(m[1]),
                                     float(m[2]) if with_normal else None, fails[j]))
    return result


_AXIS_LABEL = {
    Experiment.NOISE: "noise level (fraction of 1 px, 5 deg, 5 %)",
    Experiment.WALL: "wall angle (deg)",
    Experiment.TILT: "vertical tilt (deg)",
}


def plot_svg(result: SweepResult, path, metric: str = "xi_r") -> None:
    """One polyline per solver; deterministic SVG output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "planar-ac", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in result.solvers:
            x, y = result.series(s, metric)
            ax.plot(x, np.degrees(y), marker="o", label=s)
        ax.set_xlabel(_AXIS_LABEL[result.experiment])
        ax.set_ylabel(f"mean {metric.replace('xi_', 'error ')} (deg)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

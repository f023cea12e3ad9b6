"""Essential matrices, epipolar residuals, triangulation, cheirality and pose errors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AllCandidatesFail, ParallelRays, ZeroTranslation
from .geometry import as_ac_array, skew
from .solvers import SolverCandidate


@dataclass(frozen=True)
class EssentialMatrix:
    e: np.ndarray
    # set when the linear estimate had a multi-dimensional null space (e.g. coplanar points)
    degenerate: bool = False


class RelativePose(NamedTuple):
    rotation: np.ndarray
    t_dir: np.ndarray
    normal: np.ndarray | None = None


@dataclass(frozen=True)
class Triangulation:
    point: np.ndarray
    depth1: float
    depth2: float
    reprojection_error: float


@dataclass(frozen=True)
class PoseErrors:
    xi_r: float
    xi_t: float
    xi_n: float | None = None
    t_undefined: bool = False


def _rt(pose):
    if isinstance(pose, SolverCandidate):
        pose = pose.pose
    if isinstance(pose, tuple) and not hasattr(pose, "rotation"):
        return np.asarray(pose[0], dtype=float), np.asarray(pose[1], dtype=float)
    return pose.rotation, pose.t_dir


def essential_from_rt(R, t) -> EssentialMatrix:
    t = np.asarray(t, dtype=float)
    n = np.linalg.norm(t)
    if n < 1e-12:
        raise ZeroTranslation("essential matrix undefined without translation")
    return EssentialMatrix(skew(t / n) @ np.asarray(R, dtype=float))


def essential_from_pose(pose) -> EssentialMatrix:
    """``E = [t]x R`` with unit ``t``; Frobenius norm is sqrt(2)."""
    return essential_from_rt(*_rt(pose))


def _e(E) -> np.ndarray:
    return E.e if isinstance(E, EssentialMatrix) else np.asarray(E, dtype=float)


def sampson_distances(E, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """First-order geometric epipolar error for ``(k, 2)`` point arrays.

    Returned in distance units (square root of the usual Sampson error).
    """
    e = _e(E)
    x1 = np.atleast_2d(x1)
    x2 = np.atleast_2d(x2)
    # E @ [x, y, 1] written out to avoid building homogeneous arrays
    l0 = e[0, 0] * x1[:, 0] + e[0, 1] * x1[:, 1] + e[0, 2]
    l1 = e[1, 0] * x1[:, 0] + e[1, 1] * x1[:, 1] + e[1, 2]
    l2 = e[2, 0] * x1[:, 0] + e[2, 1] * x1[:, 1] + e[2, 2]
    m0 = e[0, 0] * x2[:, 0] + e[1, 0] * x2[:, 1] + e[2, 0]
    m1 = e[0, 1] * x2[:, 0] + e[1, 1] * x2[:, 1] + e[2, 1]
    r = x2[:, 0] * l0 + x2[:, 1] * l1 + l2
    den = l0 * l0 + l1 * l1 + m0 * m0 + m1 * m1
    return np.abs(r) / np.sqrt(np.maximum(den, 1e-300))


def sampson_distance(E, pc) -> float:
    """``pc`` is ``(x1, x2)`` or an AC row / :class:`AffineCorrespondence`."""
    if isinstance(pc, tuple) and len(pc) == 2:
        x1, x2 = np.asarray(pc[0], float)[:2], np.asarray(pc[1], float)[:2]
    else:
        row = as_ac_array(pc)[0]
        x1, x2 = row[:2], row[2:4]
    return float(sampson_distances(E, x1[None], x2[None])[0])


def symmetric_epipolar_distances(E, x1, x2) -> np.ndarray:
    """RMS of the two point-to-epipolar-line distances."""
    e = _e(E)
    h1 = np.column_stack([np.atleast_2d(x1), np.ones(len(np.atleast_2d(x1)))])
    h2 = np.column_stack([np.atleast_2d(x2), np.ones(len(np.atleast_2d(x2)))])
    l = h1 @ e.T
    m = h2 @ e
    r = np.sum(h2 * l, axis=1)
    d2 = r / np.hypot(l[:, 0], l[:, 1])
    d1 = r / np.hypot(m[:, 0], m[:, 1])
    return np.sqrt(0.5 * (d1 * d1 + d2 * d2))


def triangulate_depths(R, t, x1: np.ndarray, x2: np.ndarray):
    """Midpoint triangulation of ``(k, 2)`` normalized point arrays.

    Returns ``(depth1, depth2, points, parallel)``; depths of parallel
    rays are set to 0.
    """
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float)
    x1 = np.atleast_2d(x1)
    x2 = np.atleast_2d(x2)
    k = len(x1)
    u1 = np.column_stack([x1, np.ones(k)])
    d2 = np.column_stack([x2, np.ones(k)]) @ R  # rows are R^T u2
    c2 = -R.T @ t
    a = np.sum(u1 * u1, axis=1)
    b = np.sum(u1 * d2, axis=1)
    c = np.sum(d2 * d2, axis=1)
    p = u1 @ c2
    q = d2 @ c2
    det = b * b - a * c
    parallel = np.abs(det) <= 1e-12 * a * c
    safe = np.where(parallel, 1.0, det)
    lam1 = np.where(parallel, 0.0, (b * q - c * p) / safe)
    lam2 = np.where(parallel, 0.0, (a * q - b * p) / safe)
    pts = 0.5 * (lam1[:, None] * u1 + c2 + lam2[:, None] * d2)
    return lam1, lam2, pts, parallel


def triangulate(pose, pc) -> Triangulation:
    R, t = _rt(pose)
    if isinstance(pc, tuple) and len(pc) == 2:
        x1, x2 = np.asarray(pc[0], float)[:2], np.asarray(pc[1], float)[:2]
    else:
        row = as_ac_array(pc)[0]
        x1, x2 = row[:2], row[2:4]
    if np.linalg.norm(t) < 1e-12:
        raise ParallelRays("zero baseline")
    lam1, lam2, pts, parallel = triangulate_depths(R, t, x1[None], x2[None])
    if parallel[0]:
        raise ParallelRays("rays are parallel")
    X = pts[0]
    proj1 = X[:2] / X[2]
    Xc2 = R @ X + t
    proj2 = Xc2[:2] / Xc2[2]
    err = math.sqrt(0.5 * (np.sum((proj1 - x1) ** 2) + np.sum((proj2 - x2) ** 2)))
    return Triangulation(X, float(lam1[0]), float(lam2[0]), err)


def cheirality_count(R, t, x1, x2) -> int:
    """Number of correspondences triangulating in front of both cameras."""
    t = np.asarray(t, dtype=float)
    if np.linalg.norm(t) < 1e-12:
        u1 = np.column_stack([np.atleast_2d(x1), np.ones(len(np.atleast_2d(x1)))])
        u2 = np.column_stack([np.atleast_2d(x2), np.ones(len(np.atleast_2d(x2)))])
        return int(np.count_nonzero(np.sum((u1 @ np.asarray(R).T) * u2, axis=1) > 0))
    lam1, lam2, _, parallel = triangulate_depths(R, t, x1, x2)
    return int(np.count_nonzero((lam1 > 0) & (lam2 > 0) & ~parallel))


def _sort_key(c, count):
    if isinstance(c, SolverCandidate):
        delta = c.plane.delta if c.plane.delta is not None else 0.0
        return (-count, c.residual, c.pose.alpha, delta, tuple(c.pose.t_dir))
    R, t = _rt(c)
    return (-count, 0.0, *np.round(R.ravel(), 12), *np.round(t, 12))


def rank_by_cheirality(candidates: Sequence, acs) -> list[tuple[int, object]]:
    arr = as_ac_array(acs)
    scored = []
    for c in candidates:
        R, t = _rt(c)
        scored.append((cheirality_count(R, t, arr[:, :2], arr[:, 2:4]), c))
    scored.sort(key=lambda sc: _sort_key(sc[1], sc[0]))
    return scored


def cheirality_select(candidates: Sequence, acs):
    """Candidate with the most points in front of both cameras.

    Ties go to the smaller recomposition residual, then to a fixed
    ordering on the parameters, so the result does not depend on the order
    of ``candidates``.
    """
    if not candidates:
        raise AllCandidatesFail("no candidates")
    if len(candidates) == 1:
        return candidates[0]
    count, best = rank_by_cheirality(candidates, acs)[0]
    if count == 0:
        raise AllCandidatesFail("no candidate places a point in front of both cameras")
    return best


def plausible_candidates(candidates: Sequence, acs) -> list:
    """All candidates sharing the best positive cheirality count."""
    ranked = rank_by_cheirality(candidates, acs)
    if not ranked or ranked[0][0] == 0:
        return []
    top = ranked[0][0]
    return [c for n, c in ranked if n == top]


def _angle_between(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    cosv = float(np.dot(a, b) / (na * nb))
    return math.acos(min(1.0, max(-1.0, cosv)))


def rotation_error(R_est, R_true) -> float:
    cosv = 0.5 * (np.trace(np.asarray(R_true) @ np.asarray(R_est).T) - 1.0)
    return math.acos(min(1.0, max(-1.0, cosv)))


def pose_errors(estimated, truth) -> PoseErrors:
    """Angular rotation, translation-direction and normal errors in radians.

    ``estimated`` and ``truth`` are ``(R, t)`` or ``(R, t, n)`` tuples. An
    estimated translation of (near) zero length yields ``pi / 2`` with
    ``t_undefined`` set.
    """
    R_e, t_e = estimated[0], np.asarray(estimated[1], dtype=float)
    R_t, t_t = truth[0], np.asarray(truth[1], dtype=float)
    xi_r = rotation_error(R_e, R_t)
    undefined = np.linalg.norm(t_e) < 1e-12 or np.linalg.norm(t_t) < 1e-12
    xi_t = math.pi / 2 if undefined else _angle_between(t_e, t_t)
    n_e = estimated[2] if len(estimated) > 2 else None
    n_t = truth[2] if len(truth) > 2 else None
    xi_n = None
    if n_e is not None and n_t is not None:
        xi_n = _angle_between(n_e, n_t)
    return PoseErrors(xi_r, xi_t, xi_n, bool(undefined))

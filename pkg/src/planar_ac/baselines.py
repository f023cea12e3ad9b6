"""General-motion estimators used for comparison: 4PC DLT, 2AC homography, 8PC essential."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration
from .geometry import Homography, as_ac_array
from .validation import EssentialMatrix, cheirality_count


@dataclass(frozen=True)
class HomographyDecomposition:
    rotation: np.ndarray
    t_dir: np.ndarray
    normal: np.ndarray | None
    # t / d, so that compose_homography(R, t_over_d, normal, 1) ~ H
    t_over_d: np.ndarray
    pure_rotation: bool = False


def hartley_normalization(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to the origin with RMS distance sqrt(2)."""
    pts = np.asarray(pts, dtype=float)
    c = pts.mean(axis=0)
    rms = math.sqrt(np.mean(np.sum((pts - c) ** 2, axis=1)))
    if rms < 1e-12:
        raise DegenerateConfiguration("points are coincident")
    s = math.sqrt(2.0) / rms
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def _apply(T, pts):
    return pts * T[0, 0] + T[:2, 2]


def _split_pairs(x1, x2):
    if x2 is None:
        arr = np.atleast_2d(np.asarray(x1, dtype=float))
        return arr[:, :2], arr[:, 2:4]
    return np.atleast_2d(np.asarray(x1, dtype=float)), np.atleast_2d(np.asarray(x2, dtype=float))


def _has_collinear_triple(pts, tol=1e-9) -> bool:
    scale = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]), 1e-300) ** 2
    for i, j, k in itertools.combinations(range(len(pts)), 3):
        d1, d2 = pts[j] - pts[i], pts[k] - pts[i]
        if abs(d1[0] * d2[1] - d1[1] * d2[0]) <= tol * scale:
            return True
    return False


def _null_vector(M: np.ndarray, what: str) -> np.ndarray:
    _, sv, vt = np.linalg.svd(M)
    # a one-dimensional null space is needed; 9 unknowns
    if M.shape[0] < 8 or sv[7] <= 1e-10 * sv[0]:
        raise DegenerateConfiguration(f"{what}: rank deficient system")
    return vt[-1]


def dlt_homography(x1, x2=None) -> Homography:
    """Normalized DLT from ``>= 4`` point pairs (``(k, 2)`` arrays, or ``(k, 4)``)."""
    x1, x2 = _split_pairs(x1, x2)
    if len(x1) < 4:
        raise DegenerateConfiguration("DLT needs at least four correspondences")
    if len(x1) == 4 and (_has_collinear_triple(x1) or _has_collinear_triple(x2)):
        raise DegenerateConfiguration("three of the four points are collinear")
    T1, T2 = hartley_normalization(x1), hartley_normalization(x2)
    p, q = _apply(T1, x1), _apply(T2, x2)
    k = len(p)
    x, y, xp, yp = p[:, 0], p[:, 1], q[:, 0], q[:, 1]
    o, z = np.ones(k), np.zeros(k)
    M = np.empty((2 * k, 9))
    M[0::2] = np.column_stack([x, y, o, z, z, z, -xp * x, -xp * y, -xp])
    M[1::2] = np.column_stack([z, z, z, x, y, o, -yp * x, -yp * y, -yp])
    Hn = _null_vector(M, "DLT").reshape(3, 3)
    return Homography(np.linalg.solve(T2, Hn @ T1))


def homography_2ac(acs) -> Homography:
    """Homography from ``>= 2`` ACs: two point rows and four affine rows each."""
    arr = as_ac_array(acs)
    if len(arr) < 2:
        raise DegenerateConfiguration("2AC needs at least two affine correspondences")
    # coincident locations are rejected by the normalization
    T1, T2 = hartley_normalization(arr[:, :2]), hartley_normalization(arr[:, 2:4])
    p, q = _apply(T1, arr[:, :2]), _apply(T2, arr[:, 2:4])
    a = arr[:, 4:8] * (T2[0, 0] / T1[0, 0])
    k = len(arr)
    x, y, xp, yp = p[:, 0], p[:, 1], q[:, 0], q[:, 1]
    a1, a2, a3, a4 = a.T
    o, z = np.ones(k), np.zeros(k)
    M = np.empty((6 * k, 9))
    M[0::6] = np.column_stack([x, y, o, z, z, z, -xp * x, -xp * y, -xp])
    M[1::6] = np.column_stack([z, z, z, x, y, o, -yp * x, -yp * y, -yp])
    M[2::6] = np.column_stack([o, z, z, z, z, z, -(xp + a1 * x), -a1 * y, -a1])
    M[3::6] = np.column_stack([z, o, z, z, z, z, -a2 * x, -(xp + a2 * y), -a2])
    M[4::6] = np.column_stack([z, z, z, o, z, z, -(yp + a3 * x), -a3 * y, -a3])
    M[5::6] = np.column_stack([z, z, z, z, o, z, -a4 * x, -(yp + a4 * y), -a4])
    Hn = _null_vector(M, "2AC").reshape(3, 3)
    return Homography(np.linalg.solve(T2, Hn @ T1))


def project_to_essential(F: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(F)
    return U @ np.diag([1.0, 1.0, 0.0]) @ Vt


def eight_point_essential(x1, x2=None) -> EssentialMatrix:
    """Normalized eight-point estimate projected onto the essential manifold.

    Coplanar scenes leave a multi-dimensional null space; the result is then
    returned with ``degenerate`` set rather than raised, since it is a
    property of the data rather than a failure of the input.
    """
    x1, x2 = _split_pairs(x1, x2)
    if len(x1) < 8:
        raise DegenerateConfiguration("eight-point algorithm needs at least eight correspondences")
    T1, T2 = hartley_normalization(x1), hartley_normalization(x2)
    p, q = _apply(T1, x1), _apply(T2, x2)
    x, y, xp, yp = p[:, 0], p[:, 1], q[:, 0], q[:, 1]
    M = np.column_stack([xp * x, xp * y, xp, yp * x, yp * y, yp, x, y, np.ones(len(x))])
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.count_nonzero(sv > 1e-10 * sv[0]))
    if rank < 6:
        raise DegenerateConfiguration(f"eight-point system has rank {rank}")
    F = T2.T @ vt[-1].reshape(3, 3) @ T1
    return EssentialMatrix(project_to_essential(F), degenerate=rank < 8)


_W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def decompose_essential(E, x1, x2):
    """``(R, t_dir)`` maximizing the cheirality count among the four factorizations."""
    e = E.e if isinstance(E, EssentialMatrix) else np.asarray(E, dtype=float)
    U, _, Vt = np.linalg.svd(e)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    best = None
    for R in (U @ _W @ Vt, U @ _W.T @ Vt):
        for t in (U[:, 2], -U[:, 2]):
            n = cheirality_count(R, t, x1, x2)
            if best is None or n > best[0]:
                best = (n, R, t)
    return best[1], best[2]


def decompose_homography(H, x1, x2=None) -> list[HomographyDecomposition]:
    """Physically valid ``(R, t, n)`` factorizations of a calibrated homography.

    Candidates are filtered by requiring the sample points to lie on the
    visible side of the plane; all candidates sharing the best count are
    returned (typically two).
    """
    x1, x2 = _split_pairs(x1, x2)
    h = H.h if isinstance(H, Homography) else np.asarray(H, dtype=float)
    h = h / np.linalg.svd(h, compute_uv=False)[1]
    u1 = np.column_stack([x1, np.ones(len(x1))])
    u2 = np.column_stack([x2, np.ones(len(x2))])
    if np.sum(np.sign(np.sum(u2 * (u1 @ h.T), axis=1))) < 0:
        h = -h
    w, V = np.linalg.eigh(h.T @ h)
    w, V = w[::-1], V[:, ::-1]
    if np.linalg.det(V) < 0:
        V = -V
    s1, s3 = w[0], w[2]
    if s1 - s3 < 1e-10:
        U, _, Vt = np.linalg.svd(h)
        R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
        return [HomographyDecomposition(R, np.zeros(3), None, np.zeros(3), True)]
    v1, v2, v3 = V[:, 0], V[:, 1], V[:, 2]
    a, b = math.sqrt(max(0.0, 1.0 - s3)), math.sqrt(max(0.0, s1 - 1.0))
    den = math.sqrt(s1 - s3)
    sols = []
    for u in ((a * v1 + b * v3) / den, (a * v1 - b * v3) / den):
        Um = np.column_stack([v2, u, np.cross(v2, u)])
        hv2, hu = h @ v2, h @ u
        Wm = np.column_stack([hv2, hu, np.cross(hv2, hu)])
        R = Wm @ Um.T
        N = np.cross(v2, u)
        T = (h - R) @ N
        sols += [(R, N, T), (R, -N, -T)]
    scored = []
    for R, N, T in sols:
        # plane N.X = d with d > 0 in front of camera 1; our normal is -N
        visible = int(np.count_nonzero(u1 @ N > 0))
        scored.append((visible, R, N, T))
    top = max(s[0] for s in scored)
    out = []
    for visible, R, N, T in scored:
        if visible != top:
            continue
        nt = np.linalg.norm(T)
        out.append(HomographyDecomposition(R, T / nt if nt > 0 else T, -N, T, nt < 1e-12))
    return out

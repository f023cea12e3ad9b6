"""Single-AC solvers for planar motion over ground, axis-aligned and vertical planes.

Every solver accepts one affine correspondence (the minimal case) or ``k``
of them, in which case the stacked ``6k``-row system is solved in the
least-squares sense. Inputs are normalized coordinates, either a sequence of
:class:`~planar_ac.geometry.AffineCorrespondence` or a ``(k, 8)`` array of
rows ``[x, y, x', y', a1, a2, a3, a4]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import lapack

from .errors import Degenerate, DegenerateCircle, NoRealIntersection
from .geometry import PlanarPose, PlaneClass, PlaneHypothesis, as_ac_array, translation_sign

NULL_TOL = 1e-10
CLAMP_TOL = 1e-6
RECOMPOSE_TOL = 1e-6


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    b: np.ndarray

    @property
    def blocks(self) -> int:
        return self.A.shape[0] // 6


@dataclass(frozen=True)
class SolverCandidate:
    pose: PlanarPose
    plane: PlaneHypothesis
    p: float
    q: float
    residual: float = 0.0


@dataclass
class SolverReport:
    candidates: list[SolverCandidate]
    system: LinearSystem | None = None
    degenerate: bool = False
    normal_undetermined: bool = False
    clamped: bool = False

    @cached_property
    def conditioning(self) -> float:
        """Smallest singular value of the coefficient matrix."""
        if self.system is None:
            return float("nan")
        return float(np.linalg.svd(self.system.A, compute_uv=False)[-1])

    @property
    def best(self) -> SolverCandidate:
        return self.candidates[0]


def _svd(M: np.ndarray):
    """Singular values and ``V^T`` of a small matrix.

    LAPACK is called directly: for 6 x 5 inputs the ``numpy.linalg``
    wrapper costs more than the factorization itself.
    """
    _, sv, vt, info = lapack.dgesdd(M, compute_uv=1, full_matrices=0)
    if info != 0:
        _, sv, vt = np.linalg.svd(M, full_matrices=False)
    return sv, vt


# --------------------------------------------------------------------------
# coefficient matrices, returned augmented as [A | b]

def _columns(acs):
    arr = as_ac_array(acs)
    if len(arr) == 0:
        raise ValueError("at least one affine correspondence is required")
    if len(arr) == 1:
        return arr[0].tolist(), 1
    return list(arr.T), len(arr)


def _stack(flat, cols: int, k: int) -> np.ndarray:
    """``flat`` lists the 6 x cols block row-major; entries are scalars or length-k arrays."""
    if k == 1:
        return np.array(flat, dtype=float).reshape(6, cols)
    m = np.array(flat, dtype=float).reshape(6, cols, k)
    return m.transpose(2, 0, 1).reshape(6 * k, cols)


def _ground_aug(acs) -> np.ndarray:
    (x, y, xp, yp, a1, a2, a3, a4), k = _columns(acs)
    z = 0.0 * x
    return _stack((
        x - xp, -xp * x - 1.0, y, -xp * y, z,
        -yp, -yp * x, z, -yp * y, -y,
        1.0 - a1, -xp - a1 * x, z, -a1 * y, z,
        -a2, -a2 * x, z + 1.0, -xp - a2 * y, z,
        -a3, -yp - a3 * x, z, -a3 * y, z,
        -a4, -a4 * x, z, -yp - a4 * y, z - 1.0,
    ), 5, k)


def _side_aug(acs) -> np.ndarray:
    (x, y, xp, yp, a1, a2, a3, a4), k = _columns(acs)
    z = 0.0 * x
    return _stack((
        x - xp, -1.0 - xp * x, -x, xp * x, z,
        -yp, -yp * x, z, yp * x, -y,
        1.0 - a1, -a1 * x - xp, z - 1.0, a1 * x + xp, z,
        -a2, -a2 * x, z, a2 * x, z,
        -a3, -a3 * x - yp, z, a3 * x + yp, z,
        -a4, -a4 * x, z, a4 * x, z - 1.0,
    ), 5, k)


def _frontal_aug(acs) -> np.ndarray:
    (x, y, xp, yp, a1, a2, a3, a4), k = _columns(acs)
    z = 0.0 * x
    return _stack((
        x - xp, -1.0 - xp * x, z - 1.0, xp, z,
        -yp, -yp * x, z, yp, -y,
        1.0 - a1, -a1 * x - xp, z, a1, z,
        -a2, -a2 * x, z, a2, z,
        -a3, -a3 * x - yp, z, a3, z,
        -a4, -a4 * x, z, a4, z - 1.0,
    ), 5, k)


def _general_matrix(acs) -> np.ndarray:
    (x, y, xp, yp, a1, a2, a3, a4), k = _columns(acs)
    z = 0.0 * x
    return _stack((
        z + 1.0, z, z, -(xp + a1 * x), -a1,
        z, z, z, -a2 * x, -a2,
        z, z, z, -(yp + a3 * x), -a3,
        z, z, z + 1.0, -a4 * x, -a4,
        x, z + 1.0, z, -x * xp, -xp,
        z, z, y, -x * yp, -yp,
    ), 5, k)


_AUGMENTED = {
    PlaneClass.GROUND: _ground_aug,
    PlaneClass.SIDE: _side_aug,
    PlaneClass.FRONTAL: _frontal_aug,
}


def _system(aug: np.ndarray) -> LinearSystem:
    return LinearSystem(aug[:, :4], aug[:, 4])


def build_ground_system(acs) -> LinearSystem:
    """``A x = b`` with ``x = [cos a, sin a, p, q]`` for a ground-plane homography."""
    return _system(_ground_aug(acs))


def build_vertical_special_system(acs, kind: PlaneClass) -> LinearSystem:
    """Side wall (normal ``[1,0,0]``) or frontal wall (normal ``[0,0,1]``) system."""
    if kind not in (PlaneClass.SIDE, PlaneClass.FRONTAL):
        raise ValueError(f"not a special vertical plane: {kind}")
    return _system(_AUGMENTED[kind](acs))


def build_general_vertical_system(acs) -> LinearSystem:
    """Homogeneous ``A h = 0`` with ``h = [h1, h3, h5, h7, h9]``."""
    A = _general_matrix(acs)
    return LinearSystem(A, np.zeros(A.shape[0]))


def algebraic_objective(kind: PlaneClass, acs, alpha: float, p: float, q: float) -> float:
    """``||A [cos a, sin a, p, q] - b||^2`` for the axis-aligned plane classes."""
    aug = _AUGMENTED[kind](acs)
    r = aug[:, :4] @ np.array([math.cos(alpha), math.sin(alpha), p, q]) - aug[:, 4]
    return float(r @ r)


# --------------------------------------------------------------------------
# axis-aligned planes

def _visible_side_sign(kind: PlaneClass, arr: np.ndarray, delta: float | None = None) -> float:
    # Points must satisfy n.u < 0 for a plane n.X + d = 0 (d > 0) in front of camera 1.
    if kind is PlaneClass.GROUND:
        dots = arr[:, 1]
    elif kind is PlaneClass.SIDE:
        dots = arr[:, 0]
    elif kind is PlaneClass.FRONTAL:
        return -1.0
    else:
        dots = math.cos(delta) * arr[:, 0] + math.sin(delta)
    if len(dots) == 1:
        return -1.0 if dots[0] > 0 else 1.0
    pos = int(np.count_nonzero(dots > 0))
    return -1.0 if 2 * pos > len(dots) else 1.0


def _oriented_candidate(kind, arr, alpha, p, q, residual) -> SolverCandidate:
    sign = _visible_side_sign(kind, arr) * translation_sign(kind)
    pose = PlanarPose(alpha, (sign * p, 0.0, sign * q))
    plane = PlaneHypothesis(kind, None, -1.0 if sign != translation_sign(kind) else 1.0)
    return SolverCandidate(pose, plane, p, q, residual)


def _rapid(aug: np.ndarray) -> tuple[float, float, float, float]:
    M = aug * np.array([1.0, 1.0, 1.0, 1.0, -1.0])
    sv, vt = _svd(M)
    if sv[-2] - sv[-1] < NULL_TOL:
        raise Degenerate("ambiguous null space")
    c, s, p, q, w = vt[-1].tolist()
    if abs(w) < NULL_TOL:
        raise Degenerate("null vector has vanishing last coordinate")
    c, s, p, q = c / w, s / w, p / w, q / w
    return math.atan2(s, c), p, q, math.hypot(c, s)


def _min_quadratic_on_circle(m00, m01, m11, g0, g1) -> tuple[float, float]:
    """Global minimizer of ``u'Mu - 2 g'u`` subject to ``|u| = 1``.

    The minimizer satisfies ``(M - lam I) u = g`` with ``lam`` at most the
    smallest eigenvalue of ``M``; with ``mu = lam_min - lam`` the secular
    equation ``|u(mu)| = 1`` has a single root on ``mu >= 0``.
    """
    phi = 0.5 * math.atan2(2.0 * m01, m00 - m11)
    e2 = (math.cos(phi), math.sin(phi))
    e1 = (-e2[1], e2[0])
    gap = 2.0 * math.hypot(0.5 * (m00 - m11), m01)
    c1 = e1[0] * g0 + e1[1] * g1
    c2 = e2[0] * g0 + e2[1] * g1
    gnorm = math.hypot(c1, c2)
    scale = max(abs(m00), abs(m11), gnorm, 1e-300)
    if gnorm <= 1e-14 * scale and gap <= 1e-14 * scale:
        raise Degenerate("objective is constant on the unit circle")

    tiny = 1e-13 * scale
    if abs(c1) <= tiny and gap > 0 and abs(c2) < gap:
        # hard case: lam equals the smallest eigenvalue
        u2 = c2 / gap
        u1 = math.copysign(math.sqrt(max(0.0, 1.0 - u2 * u2)), c1 if c1 else 1.0)
    else:
        lo, hi = abs(c1), gnorm
        mu = hi
        for _ in range(100):
            d2 = mu + gap
            n2 = (c1 / mu) ** 2 + (c2 / d2) ** 2 if mu > 0 else math.inf
            f = 1.0 / math.sqrt(n2) - 1.0
            if f > 0:
                hi = mu
            else:
                lo = mu
            if abs(f) < 1e-15:
                break
            dn2 = -2.0 * c1 * c1 / mu ** 3 - 2.0 * c2 * c2 / d2 ** 3
            step = -f / (-0.5 * dn2 / n2 ** 1.5)
            nxt = mu + step
            if not lo < nxt < hi:
                nxt = 0.5 * (lo + hi)
            if nxt == mu:
                break
            mu = nxt
        u1, u2 = c1 / mu, c2 / (mu + gap)
    x = u1 * e1[0] + u2 * e2[0]
    y = u1 * e1[1] + u2 * e2[1]
    n = math.hypot(x, y)
    return x / n, y / n


def _optimal(aug: np.ndarray) -> tuple[float, float, float, float]:
    G = (aug.T @ aug).tolist()
    (g00, g01, g02, g03, g04), (_, g11, g12, g13, g14), (_, _, g22, g23, g24), \
        (_, _, _, g33, g34), _ = G
    det = g22 * g33 - g23 * g23
    if det <= NULL_TOL * max(g22 * g33, 1e-300):
        raise Degenerate("translation columns are rank deficient")
    i22, i23, i33 = g33 / det, -g23 / det, g22 / det
    k00, k01 = g02 * i22 + g03 * i23, g02 * i23 + g03 * i33
    k10, k11 = g12 * i22 + g13 * i23, g12 * i23 + g13 * i33
    m00 = g00 - (k00 * g02 + k01 * g03)
    m01 = g01 - (k00 * g12 + k01 * g13)
    m11 = g11 - (k10 * g12 + k11 * g13)
    h0 = g04 - (k00 * g24 + k01 * g34)
    h1 = g14 - (k10 * g24 + k11 * g34)
    c, s = _min_quadratic_on_circle(m00, m01, m11, h0, h1)
    w0 = g24 - (g02 * c + g12 * s)
    w1 = g34 - (g03 * c + g13 * s)
    p = i22 * w0 + i23 * w1
    q = i23 * w0 + i33 * w1
    return math.atan2(s, c), p, q, 1.0


def ground_stationarity_quartic(acs, kind: PlaneClass = PlaneClass.GROUND) -> np.ndarray:
    """Coefficients (highest first) of the quartic in ``t = tan(alpha / 2)``
    whose real roots are the stationary points of the reduced objective.

    Not used by the solvers; exposed to cross-check their optimality.
    """
    aug = _AUGMENTED[kind](acs)
    A, b = aug[:, :4], aug[:, 4]
    A1, A2 = A[:, :2], A[:, 2:]
    P = np.eye(len(b)) - A2 @ np.linalg.pinv(A2)
    M = A1.T @ P @ A1
    g = A1.T @ P @ b
    dm = M[1, 1] - M[0, 0]
    return np.array([M[0, 1] + g[1], 2 * g[0] - 2 * dm, -6 * M[0, 1],
                     2 * dm + 2 * g[0], M[0, 1] - g[1]])


def solve_axis_aligned(kind: PlaneClass, acs, method: str) -> SolverReport:
    arr = as_ac_array(acs)
    aug = _AUGMENTED[kind](arr)
    if method == "rapid":
        alpha, p, q, _ = _rapid(aug)
    elif method == "optimal":
        alpha, p, q, _ = _optimal(aug)
    else:
        raise ValueError(f"unknown method {method!r}")
    rotation_only = math.hypot(p, q) < NULL_TOL
    if rotation_only:
        p = q = 0.0
    r = aug @ np.array([math.cos(alpha), math.sin(alpha), p, q, -1.0])
    cand = _oriented_candidate(kind, arr, alpha, p, q, math.sqrt(r @ r))
    return SolverReport([cand], _system(aug), normal_undetermined=rotation_only)


def solve_ground_rapid(acs) -> SolverReport:
    """Null vector of ``[A | -b]`` divided by its last coordinate."""
    return solve_axis_aligned(PlaneClass.GROUND, acs, "rapid")


def solve_ground_optimal(acs) -> SolverReport:
    """Global least-squares minimizer of ``|A x - b|`` on ``x1^2 + x2^2 = 1``."""
    return solve_axis_aligned(PlaneClass.GROUND, acs, "optimal")


def solve_vertical_special(acs, kind: PlaneClass, method: str = "optimal") -> SolverReport:
    if kind not in (PlaneClass.SIDE, PlaneClass.FRONTAL):
        raise ValueError(f"not a special vertical plane: {kind}")
    return solve_axis_aligned(kind, acs, method)


# --------------------------------------------------------------------------
# general vertical plane

def _intersect(s1: float, s2: float, clamp_tol: float):
    if s1 < s2 or s2 < 0:
        raise ValueError(f"need s1 >= s2 >= 0, got {s1}, {s2}")
    d = s1 * s1 - s2 * s2
    if d <= 1e-12 * max(1.0, s1 * s1):
        if abs(s1 - 1.0) <= 1e-9:
            raise DegenerateCircle("ellipse coincides with the unit circle")
        raise NoRealIntersection(f"circle of radius {s1} does not meet the unit circle")
    a2 = (1.0 - s2 * s2) / d
    clamped = False
    if a2 < 0.0 or a2 > 1.0:
        if a2 < -clamp_tol or a2 > 1.0 + clamp_tol:
            raise NoRealIntersection(f"no real intersection for s1={s1}, s2={s2}")
        a2 = min(max(a2, 0.0), 1.0)
        clamped = True
    a, b = math.sqrt(a2), math.sqrt(1.0 - a2)
    pts = []
    for sa in (1.0, -1.0):
        for sb in (1.0, -1.0):
            v = (sa * a, sb * b)
            if v not in pts:
                pts.append(v)
    return [(v, (s1 * v[0], s2 * v[1])) for v in pts], clamped


def intersect_unit_circle_ellipse(s1: float, s2: float, clamp_tol: float = CLAMP_TOL):
    """Unit vectors ``v`` with ``diag(s1, s2) v`` also of unit length.

    Returns a list of ``(v1', v2')`` pairs (up to four).
    """
    return _intersect(s1, s2, clamp_tol)[0]


def svd2x2(m00, m01, m10, m11):
    """Closed-form ``M = Rot(phi) diag(sx, sy) Rot(theta)``; ``sx >= |sy|``, ``sy`` signed."""
    e, f = 0.5 * (m00 + m11), 0.5 * (m00 - m11)
    g, h = 0.5 * (m10 + m01), 0.5 * (m10 - m01)
    qq, rr = math.hypot(e, h), math.hypot(f, g)
    a1, a2 = math.atan2(g, f), math.atan2(h, e)
    return qq + rr, qq - rr, 0.5 * (a2 - a1), 0.5 * (a2 + a1)


def solve_vertical_general(acs, clamp_tol: float = CLAMP_TOL) -> SolverReport:
    """Pose and wall angle from the null vector of the 6k x 5 system.

    Returns up to four candidates: two poses, each with both normal
    orientations. Use :func:`planar_ac.validation.cheirality_select` to pick
    one. ``clamp_tol=math.inf`` projects noisy inputs onto the nearest
    feasible intersection instead of failing.
    """
    A = _general_matrix(acs)
    sv, vt = _svd(A)
    if sv[-2] - sv[-1] < NULL_TOL:
        raise Degenerate("ambiguous null space")
    h1, h3, h5, h7, h9 = vt[-1].tolist()
    if abs(h5) < NULL_TOL:
        raise Degenerate("h5 vanishes")
    h1, h3, h7, h9 = h1 / h5, h3 / h5, h7 / h5, h9 / h5
    system = LinearSystem(A, np.zeros(A.shape[0]))

    sx, sy, theta, phi = svd2x2(h9, -h7, -h3, h1)
    if sx - abs(sy) <= 1e-9 * max(1.0, sx):
        if abs(sx - 1.0) <= 1e-6 and abs(abs(sy) - 1.0) <= 1e-6:
            alpha = math.atan2(h7 - h3, h1 + h9)
            cand = SolverCandidate(PlanarPose(alpha), PlaneHypothesis(PlaneClass.GENERAL_VERTICAL),
                                   0.0, 0.0, 0.0)
            return SolverReport([cand], system, normal_undetermined=True)
        raise DegenerateCircle("B has equal singular values")
    pairs, clamped = _intersect(sx, abs(sy), clamp_tol)
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    sgn = 1.0 if sy >= 0 else -1.0
    kind = PlaneClass.GENERAL_VERTICAL
    cands = []
    for (v1x, v1y), (v2x, v2y) in pairs:
        v2y *= sgn
        # v1 = Rot(-theta) v1', v2 = Rot(phi) v2'
        cd, sd = ct * v1x + st * v1y, -st * v1x + ct * v1y
        w0, w1 = cp * v2x - sp * v2y, sp * v2x + cp * v2y
        # v2 = (cos, sin) of alpha + delta; unit up to clamping
        wn = math.hypot(w0, w1)
        c, s = (w0 * cd + w1 * sd) / wn, (w1 * cd - w0 * sd) / wn
        p = (c - h1) * cd - (s + h3) * sd
        q = (s - h7) * cd + (c - h9) * sd
        res = max(abs(c - p * cd - h1), abs(-s - p * sd - h3),
                  abs(s - q * cd - h7), abs(c - q * sd - h9))
        if res > RECOMPOSE_TOL and not clamped:
            continue
        # translation sign for this class is +1, see pose_and_plane_from_params
        pose = PlanarPose(math.atan2(s, c), (p, 0.0, q))
        cands.append(SolverCandidate(pose, PlaneHypothesis(kind, math.atan2(sd, cd)), p, q, res))
    if not cands:
        raise Degenerate("no candidate reproduces the homography")
    return SolverReport(cands, system, clamped=clamped)

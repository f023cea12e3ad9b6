"""Domain types and exact forward maps for planar camera motion.

Conventions used throughout the package:

* Points are normalized image coordinates (``K^-1`` applied), third
  homogeneous coordinate 1.
* The second camera sees ``X' = R X + t``.
* A plane is ``{X : n.X + d = 0}`` with ``d > 0``, so ``n`` points from the
  plane towards the first camera. With this convention the plane-induced
  homography is ``H = R - t n^T / d``.
* Planar rotation is about the camera Y axis with the pattern
  ``[[cos a, 0, -sin a], [0, 1, 0], [sin a, 0, cos a]]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NonPositiveDistance, PointAtInfinity, SingularIntrinsics

EPS_DEGENERATE = 1e-12
TWO_PI = 2.0 * math.pi


class PlaneClass(enum.Enum):
    GROUND = "ground"
    FRONTAL = "frontal"
    SIDE = "side"
    GENERAL_VERTICAL = "general"


class HomographyStructure(enum.Enum):
    GENERAL = "general"
    GROUND = "ground"
    FRONTAL_VERTICAL = "frontal"
    SIDE_VERTICAL = "side"
    GENERAL_VERTICAL = "general-vertical"


_CANONICAL_NORMALS = {
    PlaneClass.GROUND: (0.0, 1.0, 0.0),
    PlaneClass.FRONTAL: (0.0, 0.0, 1.0),
    PlaneClass.SIDE: (1.0, 0.0, 0.0),
}

# t_dir = sign * normalize([p, 0, q]) for the canonical normal and d > 0.
# Fixed by expanding H = R - t n^T / d, see pose_and_plane_from_params.
_TRANSLATION_SIGN = {
    PlaneClass.GROUND: -1.0,
    PlaneClass.FRONTAL: 1.0,
    PlaneClass.SIDE: 1.0,
    PlaneClass.GENERAL_VERTICAL: 1.0,
}


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float = 0.0
    cy: float = 0.0
    skew: float = 0.0

    def __post_init__(self):
        vals = (self.fx, self.fy, self.cx, self.cy, self.skew)
        if not all(math.isfinite(v) for v in vals) or self.fx <= 0 or self.fy <= 0:
            raise SingularIntrinsics(f"invalid intrinsics {vals}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, self.skew, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @property
    def linear(self) -> np.ndarray:
        """Upper-left 2x2 block of K."""
        return np.array([[self.fx, self.skew], [0.0, self.fy]])


class NormalizedPoint(NamedTuple):
    x: float
    y: float

    @property
    def homogeneous(self) -> np.ndarray:
        return np.array([self.x, self.y, 1.0])


@dataclass(frozen=True)
class AffineCorrespondence:
    """A point pair plus the 2x2 local affinity from image 1 to image 2."""

    p1: NormalizedPoint
    p2: NormalizedPoint
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p1", NormalizedPoint(*map(float, self.p1)))
        object.__setattr__(self, "p2", NormalizedPoint(*map(float, self.p2)))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(2, 2))

    @property
    def is_valid(self) -> bool:
        row = self.to_row()
        return bool(np.all(np.isfinite(row)) and abs(np.linalg.det(self.a)) > EPS_DEGENERATE)

    def to_row(self) -> np.ndarray:
        """``[x, y, x', y', a1, a2, a3, a4]``."""
        return np.array([*self.p1, *self.p2, *self.a.ravel()])

    @classmethod
    def from_row(cls, row) -> "AffineCorrespondence":
        row = np.asarray(row, dtype=float)
        return cls(NormalizedPoint(row[0], row[1]), NormalizedPoint(row[2], row[3]),
                   row[4:8].reshape(2, 2))


def as_ac_array(acs) -> np.ndarray:
    """Pack ACs into a ``(k, 8)`` float array.

    Accepts an array of shape ``(8,)`` or ``(k, 8)``, a single
    :class:`AffineCorrespondence`, or a sequence of them.
    """
    if isinstance(acs, np.ndarray):
        arr = acs.astype(float, copy=False)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
    elif isinstance(acs, AffineCorrespondence):
        arr = acs.to_row()[None, :]
    else:
        acs = list(acs)
        if not acs:
            return np.empty((0, 8))
        arr = np.array([ac.to_row() if isinstance(ac, AffineCorrespondence) else ac
                        for ac in acs], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 8:
        raise ValueError(f"expected (k, 8) affine correspondences, got {arr.shape}")
    return arr


def ac_list(arr) -> list[AffineCorrespondence]:
    return [AffineCorrespondence.from_row(r) for r in as_ac_array(arr)]


@dataclass(frozen=True)
class PlanarPose:
    """Yaw angle plus unit translation direction ``[tx, 0, tz]``.

    ``t_dir`` is the zero vector for a pure rotation.
    """

    alpha: float
    t_dir: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha) % TWO_PI)
        # scalar math: this sits on the minimal-solver hot path
        tx, ty, tz = self.t_dir
        tx, tz = float(tx), float(tz)
        if ty != 0.0:
            raise ValueError("planar translation must have zero Y component")
        n = math.hypot(tx, tz)
        if n > 0:
            tx, tz = tx / n, tz / n
        object.__setattr__(self, "t_dir", np.array([tx + 0.0, 0.0, tz + 0.0]))

    @property
    def rotation(self) -> np.ndarray:
        return planar_rotation(self.alpha)

    @property
    def is_pure_rotation(self) -> bool:
        return self.t_dir[0] == 0.0 and self.t_dir[2] == 0.0


@dataclass(frozen=True)
class PlaneHypothesis:
    """Plane class plus orientation.

    ``delta`` is only used for :attr:`PlaneClass.GENERAL_VERTICAL` and may be
    ``None`` when the normal is unobservable (zero translation). ``sign``
    flips the canonical normal of the axis-aligned classes.
    """

    kind: PlaneClass
    delta: float | None = None
    sign: float = 1.0

    @property
    def normal(self) -> np.ndarray | None:
        if self.kind is PlaneClass.GENERAL_VERTICAL:
            if self.delta is None:
                return None
            return np.array([math.cos(self.delta), 0.0, math.sin(self.delta)])
        return self.sign * np.array(_CANONICAL_NORMALS[self.kind])


@dataclass(frozen=True)
class ScaledTranslationParams:
    """Plane-distance-scaled translation; see :func:`pose_and_plane_from_params`."""

    p: float
    q: float


@dataclass(frozen=True)
class Homography:
    h: np.ndarray
    structure: HomographyStructure = HomographyStructure.GENERAL

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).reshape(3, 3))

    def normalized(self) -> np.ndarray:
        """Unit Frobenius norm, largest-magnitude entry positive."""
        h = self.h / np.linalg.norm(self.h)
        flat = h.ravel()
        if flat[np.argmax(np.abs(flat))] < 0:
            h = -h
        return h

    def equals(self, other: "Homography | np.ndarray", tol: float = 1e-8) -> bool:
        other = other if isinstance(other, Homography) else Homography(other)
        return bool(np.max(np.abs(self.normalized() - other.normalized())) <= tol)


def planar_rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotation_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def planar_angle(R: np.ndarray) -> float:
    """Inverse of :func:`planar_rotation`, in ``(-pi, pi]``."""
    return math.atan2(R[2, 0] - R[0, 2], R[0, 0] + R[2, 2])


def wrap_angle(a: float) -> float:
    """Wrap to ``(-pi, pi]``."""
    return math.atan2(math.sin(a), math.cos(a))


def _structure_of(R, t, n, tol=1e-15) -> HomographyStructure:
    planar = (abs(t[1]) <= tol and abs(R[1, 1] - 1.0) <= tol
              and max(abs(R[0, 1]), abs(R[1, 0]), abs(R[1, 2]), abs(R[2, 1])) <= tol)
    if not planar or abs(n[1]) > tol and (abs(n[0]) > tol or abs(n[2]) > tol):
        return HomographyStructure.GENERAL
    if abs(n[1]) > tol:
        return HomographyStructure.GROUND
    if abs(n[0]) <= tol:
        return HomographyStructure.FRONTAL_VERTICAL
    if abs(n[2]) <= tol:
        return HomographyStructure.SIDE_VERTICAL
    return HomographyStructure.GENERAL_VERTICAL


def compose_homography(R, t, n, d: float = 1.0) -> Homography:
    """Plane-induced homography ``R - t n^T / d``."""
    if not d > 0:
        raise NonPositiveDistance(f"plane distance must be positive, got {d}")
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float).reshape(3)
    n = np.asarray(n, dtype=float).reshape(3)
    h = R - np.outer(t, n) / d
    return Homography(h, _structure_of(R, t, n))


def _as_matrix(H) -> np.ndarray:
    return H.h if isinstance(H, Homography) else np.asarray(H, dtype=float)


def map_point(H, u, eps: float = EPS_DEGENERATE) -> NormalizedPoint:
    h = _as_matrix(H)
    x, y = float(u[0]), float(u[1])
    s = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if abs(s) < eps:
        raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
    return NormalizedPoint((h[0, 0] * x + h[0, 1] * y + h[0, 2]) / s,
                           (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / s)


def affine_from_homography(H, u, eps: float = EPS_DEGENERATE) -> AffineCorrespondence:
    """Exact AC induced by ``H`` at first-image point ``u`` (the Jacobian of the map)."""
    h = _as_matrix(H)
    x, y = float(u[0]), float(u[1])
    s = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if abs(s) < eps:
        raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
    xp = (h[0, 0] * x + h[0, 1] * y + h[0, 2]) / s
    yp = (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / s
    a = np.array([[h[0, 0] - xp * h[2, 0], h[0, 1] - xp * h[2, 1]],
                  [h[1, 0] - yp * h[2, 0], h[1, 1] - yp * h[2, 1]]]) / s
    return AffineCorrespondence(NormalizedPoint(x, y), NormalizedPoint(xp, yp), a)


def affine_rows_from_homography(H, pts: np.ndarray) -> np.ndarray:
    """Vectorized :func:`affine_from_homography` returning ``(k, 8)`` rows."""
    h = _as_matrix(H)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    s = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if np.any(np.abs(s) < EPS_DEGENERATE):
        raise PointAtInfinity("a point maps to infinity")
    xp = (h[0, 0] * x + h[0, 1] * y + h[0, 2]) / s
    yp = (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / s
    return np.column_stack([x, y, xp, yp,
                            (h[0, 0] - xp * h[2, 0]) / s, (h[0, 1] - xp * h[2, 1]) / s,
                            (h[1, 0] - yp * h[2, 0]) / s, (h[1, 1] - yp * h[2, 1]) / s])


def translation_sign(kind: PlaneClass) -> float:
    return _TRANSLATION_SIGN[kind]


def pose_and_plane_from_params(kind: PlaneClass, alpha: float, p: float, q: float,
                               delta: float | None = None) -> tuple[PlanarPose, PlaneHypothesis]:
    """Canonical pose and plane for solver parameters ``(alpha, p, q)``.

    The translation sign is chosen so that
    ``compose_homography(R(alpha), rho * t_dir, plane.normal, d)`` with
    ``rho / d = hypot(p, q)`` reproduces the homography form each solver
    assumes:

    * ground:   ``h2 = p``, ``h8 = q``                  -> ``t_dir ~ -[p, 0, q]``
    * side:     ``h1 = cos a - p``, ``h7 = sin a - q``  -> ``t_dir ~ +[p, 0, q]``
    * frontal:  ``h3 = -sin a - p``, ``h9 = cos a - q`` -> ``t_dir ~ +[p, 0, q]``
    * general:  ``h1 = cos a - p cos d`` etc.           -> ``t_dir ~ +[p, 0, q]``
    """
    if kind is PlaneClass.GENERAL_VERTICAL and delta is None and (p or q):
        raise ValueError("general vertical plane needs delta")
    sgn = _TRANSLATION_SIGN[kind]
    return PlanarPose(alpha, (sgn * p, 0.0, sgn * q)), PlaneHypothesis(kind, delta)


def params_from_homography(kind: PlaneClass, H, delta: float | None = None) -> tuple[float, float, float]:
    """Extract ``(alpha, p, q)`` from a homography of the given structure.

    ``H`` is rescaled so that ``h5 = 1``. For the general vertical class the
    plane angle ``delta`` must be supplied.
    """
    h = _as_matrix(H)
    h = h / h[1, 1]
    h1, h2, h3, h7, h8, h9 = h[0, 0], h[0, 1], h[0, 2], h[2, 0], h[2, 1], h[2, 2]
    if kind is PlaneClass.GROUND:
        return math.atan2(h7 - h3, h1 + h9), h2, h8
    if kind is PlaneClass.FRONTAL:
        a = math.atan2(h7, h1)
        return a, -math.sin(a) - h3, math.cos(a) - h9
    if kind is PlaneClass.SIDE:
        a = math.atan2(-h3, h9)
        return a, math.cos(a) - h1, math.sin(a) - h7
    if delta is None:
        raise ValueError("general vertical plane needs delta")
    cd, sd = math.cos(delta), math.sin(delta)
    a = math.atan2(-h3 * cd + h1 * sd, h9 * cd - h7 * sd) - delta
    c, s = math.cos(a), math.sin(a)
    return a, (c - h1) * cd - (s + h3) * sd, (s - h7) * cd + (c - h9) * sd


def normalize_point(K: CameraIntrinsics, pixel) -> NormalizedPoint:
    u = np.linalg.solve(K.matrix, np.array([pixel[0], pixel[1], 1.0]))
    return NormalizedPoint(u[0] / u[2], u[1] / u[2])


def denormalize_point(K: CameraIntrinsics, u) -> np.ndarray:
    return (K.matrix @ np.array([u[0], u[1], 1.0]))[:2]


def normalize_affinity(K1: CameraIntrinsics, K2: CameraIntrinsics, a_pixel) -> np.ndarray:
    """Convert a pixel-space affinity to normalized coordinates."""
    return np.linalg.solve(K2.linear, np.asarray(a_pixel, dtype=float) @ K1.linear)


def denormalize_affinity(K1: CameraIntrinsics, K2: CameraIntrinsics, a) -> np.ndarray:
    return K2.linear @ np.asarray(a, dtype=float) @ np.linalg.inv(K1.linear)


def normalize_rows(K1: CameraIntrinsics, K2: CameraIntrinsics, rows: np.ndarray) -> np.ndarray:
    """Pixel ``(k, 8)`` AC rows to normalized rows."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    out = np.empty_like(rows)
    ones = np.ones(len(rows))
    out[:, :2] = np.linalg.solve(K1.matrix, np.column_stack([rows[:, :2], ones]).T)[:2].T
    out[:, 2:4] = np.linalg.solve(K2.matrix, np.column_stack([rows[:, 2:4], ones]).T)[:2].T
    a = rows[:, 4:8].reshape(-1, 2, 2)
    out[:, 4:8] = (np.linalg.inv(K2.linear) @ a @ K1.linear).reshape(-1, 4)
    return out


def denormalize_rows(K1: CameraIntrinsics, K2: CameraIntrinsics, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    out = np.empty_like(rows)
    ones = np.ones(len(rows))
    out[:, :2] = (K1.matrix @ np.column_stack([rows[:, :2], ones]).T)[:2].T
    out[:, 2:4] = (K2.matrix @ np.column_stack([rows[:, 2:4], ones]).T)[:2].T
    a = rows[:, 4:8].reshape(-1, 2, 2)
    out[:, 4:8] = (K2.linear @ a @ np.linalg.inv(K1.linear)).reshape(-1, 4)
    return out


def homogeneous(pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(pts)
    return np.column_stack([pts, np.ones(len(pts))])


def skew(v: Sequence[float]) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])

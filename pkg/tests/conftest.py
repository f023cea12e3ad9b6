import math

import numpy as np
import pytest

from planar_ac.geometry import (PlaneClass, affine_rows_from_homography, compose_homography,
                                planar_rotation)


def plane_normal(kind, delta=0.0, flip=False):
    """Normal ``n`` of the plane ``n.X + 1 = 0`` for each class."""
    n = {
        PlaneClass.GROUND: np.array([0.0, 1.0, 0.0]),
        PlaneClass.FRONTAL: np.array([0.0, 0.0, -1.0]),
        PlaneClass.SIDE: np.array([1.0, 0.0, 0.0]),
        PlaneClass.GENERAL_VERTICAL: np.array([math.cos(delta), 0.0, math.sin(delta)]),
    }[kind]
    # only ground and side walls can be seen from either side
    return -n if flip and kind in (PlaneClass.GROUND, PlaneClass.SIDE) else n


def visible_points(rng, R, t, n, k, lim=1.0, max_depth=20.0, tries=1000):
    """``k`` normalized points on ``n.X + 1 = 0`` in front of both cameras."""
    out = []
    for _ in range(tries):
        x = rng.uniform(-lim, lim, size=(64, 2))
        u = np.column_stack([x, np.ones(64)])
        nu = u @ n
        with np.errstate(divide="ignore"):
            z = -1.0 / nu
        X = u * z[:, None]
        z2 = (X @ R.T + t)[:, 2]
        ok = (nu < 0) & (z < max_depth) & (z2 > 0.05)
        out.extend(x[ok])
        if len(out) >= k:
            return np.array(out[:k])
    raise RuntimeError("no visible points")


class Instance:
    def __init__(self, kind, alpha, t, n, delta, rows, H):
        self.kind, self.alpha, self.t, self.n, self.delta = kind, alpha, t, n, delta
        self.rows, self.H = rows, H

    @property
    def t_dir(self):
        return self.t / np.linalg.norm(self.t)

    @property
    def rotation(self):
        return planar_rotation(self.alpha)


def random_instance(rng, kind, k=1, alpha=None, rho=None, delta=None, t_angle=None):
    """Forward-generated noise-free instance: alpha in [-pi/4, pi/4], rho in [0.01, 0.3]."""
    kind = PlaneClass(kind)
    alpha = rng.uniform(-math.pi / 4, math.pi / 4) if alpha is None else alpha
    rho = rng.uniform(0.01, 0.3) if rho is None else rho
    ta = rng.uniform(-math.pi, math.pi) if t_angle is None else t_angle
    t = rho * np.array([math.sin(ta), 0.0, math.cos(ta)])
    R = planar_rotation(alpha)
    random_delta = kind is PlaneClass.GENERAL_VERTICAL and delta is None
    for _ in range(100):
        if random_delta:
            # walls facing away from the camera are redrawn below
            delta = rng.uniform(-math.pi, math.pi)
        n = plane_normal(kind, delta or 0.0, flip=bool(rng.integers(2)))
        try:
            x = visible_points(rng, R, t, n, k, tries=20 if random_delta else 1000)
            break
        except RuntimeError:
            if not random_delta:
                raise
    H = compose_homography(R, t, n, 1.0)
    return Instance(kind, alpha, t, n, delta, affine_rows_from_homography(H, x), H)


def angle_diff(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

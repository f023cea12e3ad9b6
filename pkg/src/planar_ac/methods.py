"""Name -> estimator registry shared by the robust loop, the benchmark and the CLI.

Each estimator maps a set of normalized AC rows to a list of relative pose
hypotheses. With ``select=True`` the hypotheses are restricted to those
passing the cheirality test on the given correspondences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import baselines, solvers
from .geometry import PlaneClass, skew
from .validation import plausible_candidates


@dataclass(frozen=True)
class Hypothesis:
    rotation: np.ndarray | None
    t_dir: np.ndarray | None
    normal: np.ndarray | None = None
    essential: np.ndarray | None = None
    candidate: solvers.SolverCandidate | None = None

    def essential_matrix(self) -> np.ndarray | None:
        if self.essential is not None:
            return self.essential
        if self.t_dir is None or not np.any(self.t_dir):
            return None
        return skew(self.t_dir) @ self.rotation


@dataclass(frozen=True)
class Method:
    name: str
    sample_size: int
    fit: Callable[..., list[Hypothesis]]
    plane: PlaneClass | None = None
    proposed: bool = False


def _from_report(report: solvers.SolverReport, arr, select: bool) -> list[Hypothesis]:
    cands = report.candidates
    if select and len(cands) > 1:
        cands = plausible_candidates(cands, arr)
    return [Hypothesis(c.pose.rotation, c.pose.t_dir, c.plane.normal, candidate=c) for c in cands]


def _axis_aligned(kind: PlaneClass, method: str):
    def fit(arr, select=True):
        return _from_report(solvers.solve_axis_aligned(kind, arr, method), arr, select)
    return fit


def _general(arr, select=True):
    return _from_report(solvers.solve_vertical_general(arr, clamp_tol=math.inf), arr, select)


def _from_homography(H, arr) -> list[Hypothesis]:
    return [Hypothesis(d.rotation, d.t_dir, d.normal)
            for d in baselines.decompose_homography(H, arr[:, :2], arr[:, 2:4])]


def _fit_2ac(arr, select=True):
    return _from_homography(baselines.homography_2ac(arr), arr)


def _fit_4pc(arr, select=True):
    return _from_homography(baselines.dlt_homography(arr[:, :2], arr[:, 2:4]), arr)


def _fit_8pc(arr, select=True):
    E = baselines.eight_point_essential(arr[:, :2], arr[:, 2:4])
    if not select:
        return [Hypothesis(None, None, essential=E.e)]
    R, t = baselines.decompose_essential(E, arr[:, :2], arr[:, 2:4])
    return [Hypothesis(R, t, essential=E.e)]


METHODS: dict[str, Method] = {}


def _register(m: Method):
    METHODS[m.name] = m


for _kind, _label in ((PlaneClass.GROUND, "ground"), (PlaneClass.FRONTAL, "frontal"),
                      (PlaneClass.SIDE, "side")):
    _register(Method(f"1ac-{_label}", 1, _axis_aligned(_kind, "optimal"), _kind, True))
    _register(Method(f"1ac-{_label}-rapid", 1, _axis_aligned(_kind, "rapid"), _kind, True))
_register(Method("1ac-vertical", 1, _general, PlaneClass.GENERAL_VERTICAL, True))
_register(Method("2ac", 2, _fit_2ac))
_register(Method("4pc", 4, _fit_4pc))
_register(Method("8pc", 8, _fit_8pc))


def get_method(name: str) -> Method:
    try:
        return METHODS[name]
    except KeyError:
        raise ValueError(f"unknown solver {name!r}; choose from {', '.join(METHODS)}") from None

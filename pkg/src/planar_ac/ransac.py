"""Locally optimized RANSAC over affine correspondences.

Hypotheses from any registered estimator are verified through the
essential matrix composed from the recovered pose, not through the
homography, and the best model is refit on its inliers.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import decompose_essential, eight_point_essential
from .errors import GeometryError, NoModelFound
from .geometry import as_ac_array
from .methods import Hypothesis, get_method
from .validation import sampson_distances


class Refit(enum.Enum):
    OVERDETERMINED_AC = "ac"
    EIGHT_POINT = "eight-point"
    NONE = "none"


@dataclass(frozen=True)
class RansacConfig:
    threshold: float = 1e-3
    max_iterations: int = 10_000
    confidence: float = 0.99
    seed: int = 0
    solver: str = "1ac-ground"
    refit: Refit = Refit.OVERDETERMINED_AC
    local_optimization: bool = True

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        get_method(self.solver)
        object.__setattr__(self, "refit", Refit(self.refit))


@dataclass
class RansacResult:
    rotation: np.ndarray
    t_dir: np.ndarray
    essential: np.ndarray
    inliers: np.ndarray
    iterations: int
    wall_time: float
    hypothesis: Hypothesis
    # hypotheses with the same final support, ``hypothesis`` first; planar
    # scenes admit two decompositions that no epipolar score separates
    alternatives: list = field(default_factory=list)

    @property
    def inlier_count(self) -> int:
        return int(np.count_nonzero(self.inliers))

    @property
    def normal(self) -> np.ndarray | None:
        return self.hypothesis.normal

    @property
    def pose(self):
        """The planar solver candidate when available, else ``(R, t_dir)``."""
        c = self.hypothesis.candidate
        return c.pose if c is not None else (self.rotation, self.t_dir)


def required_iterations(inlier_ratio: float, sample_size: int, confidence: float) -> float:
    """``log(1 - confidence) / log(1 - w^m)``, rounded up."""
    pm = inlier_ratio ** sample_size
    if pm <= 0.0:
        return math.inf
    if pm >= 1.0:
        return 1
    return math.ceil(math.log(1.0 - confidence) / math.log1p(-pm))


def _score(hyp: Hypothesis, x1, x2, threshold):
    E = hyp.essential_matrix()
    if E is None:
        return -1, None
    mask = sampson_distances(E, x1, x2) < threshold
    return int(np.count_nonzero(mask)), mask


def _best_of(hyps, x1, x2, threshold, ties=None):
    best = (-1, None, None)
    scored = [(h, *_score(h, x1, x2, threshold)) for h in hyps]
    for h, count, mask in scored:
        if count > best[0]:
            best = (count, h, mask)
    if ties is not None:
        ties.extend(h for h, count, _ in scored if count == best[0] and h is not best[1])
    return best


def ransac_pose(acs, cfg: RansacConfig = RansacConfig()) -> RansacResult:
    start = time.perf_counter()
    arr = as_ac_array(acs)
    method = get_method(cfg.solver)
    m = method.sample_size
    n = len(arr)
    if n < m or n == 0:
        raise NoModelFound(f"{n} correspondences, {cfg.solver} needs {m}")
    x1, x2 = arr[:, :2], arr[:, 2:4]
    rng = np.random.default_rng(cfg.seed)

    def fit(rows, select):
        try:
            return method.fit(rows, select=select)
        except GeometryError:
            return []

    best_count, best_hyp, best_mask = -1, None, None
    needed = math.inf
    it = 0
    while it < cfg.max_iterations and it < needed:
        it += 1
        sample = rng.choice(n, m, replace=False) if m < n else np.arange(n)
        count, hyp, mask = _best_of(fit(arr[sample], False), x1, x2, cfg.threshold)
        if count <= best_count:
            continue
        best_count, best_hyp, best_mask = count, hyp, mask
        if cfg.local_optimization and count > m:
            c2, h2, mk2 = _best_of(fit(arr[mask], True), x1, x2, cfg.threshold)
            if c2 > best_count:
                best_count, best_hyp, best_mask = c2, h2, mk2
        needed = required_iterations(best_count / n, m, cfg.confidence)

    if best_hyp is None or best_count < m:
        raise NoModelFound("no hypothesis reached minimal support")

    inl = arr[best_mask]
    refit_hyps: list[Hypothesis] = []
    if cfg.refit is Refit.OVERDETERMINED_AC:
        refit_hyps = fit(inl, True)
    elif cfg.refit is Refit.EIGHT_POINT and len(inl) >= 8:
        try:
            E = eight_point_essential(inl[:, :2], inl[:, 2:4])
            if not E.degenerate:
                R, t = decompose_essential(E, inl[:, :2], inl[:, 2:4])
                refit_hyps = [Hypothesis(R, t, essential=E.e)]
        except GeometryError:
            pass
    ties: list[Hypothesis] = []
    c2, h2, mk2 = _best_of(refit_hyps, x1, x2, cfg.threshold, ties)
    if h2 is not None and c2 >= best_count:
        best_count, best_hyp, best_mask = c2, h2, mk2
    else:
        ties = []

    E = best_hyp.essential_matrix()
    R, t = best_hyp.rotation, best_hyp.t_dir
    if R is None:
        inl = arr[best_mask]
        R, t = decompose_essential(E, inl[:, :2], inl[:, 2:4])
        best_hyp = Hypothesis(R, t, essential=E)
    mask = sampson_distances(E, x1, x2) < cfg.threshold
    return RansacResult(R, t, E, mask, it, time.perf_counter() - start, best_hyp,
                        [best_hyp, *ties])

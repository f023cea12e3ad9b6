"""Relative pose under planar motion from affine correspondences."""
from .errors import GeometryError, NoModelFound
from .geometry import (AffineCorrespondence, CameraIntrinsics, Homography, PlanarPose, PlaneClass,
                       PlaneHypothesis, affine_from_homography, compose_homography)
from .ransac import RansacConfig, RansacResult, ransac_pose
from .solvers import (intersect_unit_circle_ellipse, solve_ground_optimal, solve_ground_rapid,
                      solve_vertical_general, solve_vertical_special)
from .validation import cheirality_select, essential_from_pose, pose_errors, sampson_distance

__all__ = [
    "AffineCorrespondence", "CameraIntrinsics", "GeometryError", "Homography", "NoModelFound",
    "PlanarPose", "PlaneClass", "PlaneHypothesis", "RansacConfig", "RansacResult",
    "affine_from_homography", "cheirality_select", "compose_homography", "essential_from_pose",
    "intersect_unit_circle_ellipse", "pose_errors", "ransac_pose", "sampson_distance",
    "solve_ground_optimal", "solve_ground_rapid", "solve_vertical_general",
    "solve_vertical_special",
]

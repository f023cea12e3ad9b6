import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planar_ac.errors import Degenerate, DegenerateCircle, NoRealIntersection
from planar_ac.geometry import (PlaneClass, affine_rows_from_homography, compose_homography,
                                planar_rotation, pose_and_plane_from_params)
from planar_ac.solvers import (algebraic_objective, build_general_vertical_system,
                               build_ground_system, build_vertical_special_system,
                               ground_stationarity_quartic, intersect_unit_circle_ellipse,
                               solve_ground_optimal, solve_ground_rapid, solve_vertical_general,
                               solve_vertical_special, svd2x2)
from planar_ac.validation import plausible_candidates

from conftest import angle_diff, random_instance
from oracles import circle_walk, grid_minimize

AXIS = [PlaneClass.GROUND, PlaneClass.FRONTAL, PlaneClass.SIDE]


def _rows_from_params(kind, alpha, p, q, pts, delta=None):
    pose, plane = pose_and_plane_from_params(kind, alpha, p, q, delta)
    H = compose_homography(pose.rotation, math.hypot(p, q) * pose.t_dir, plane.normal)
    return affine_rows_from_homography(H, pts)


def _system(kind, rows):
    if kind is PlaneClass.GROUND:
        return build_ground_system(rows)
    return build_vertical_special_system(rows, kind)


def _noisy(rows, rng, point=1e-3, affine=1e-2):
    out = rows.copy()
    out[:, 2:4] += point * rng.normal(size=(len(rows), 2))
    out[:, 4:] += affine * rng.normal(size=(len(rows), 4))
    return out


# ---------------------------------------------------------------- systems

def test_ground_system_symbolic_entries():
    x, y, xp, yp, a1, a2, a3, a4 = 0.3, -0.2, 0.5, 0.1, 1.1, 0.2, -0.3, 0.9
    s = build_ground_system(np.array([x, y, xp, yp, a1, a2, a3, a4]))
    expected = np.array([
        [x - xp, -xp * x - 1, y, -xp * y],
        [-yp, -yp * x, 0, -yp * y],
        [1 - a1, -xp - a1 * x, 0, -a1 * y],
        [-a2, -a2 * x, 1, -xp - a2 * y],
        [-a3, -yp - a3 * x, 0, -a3 * y],
        [-a4, -a4 * x, 0, -yp - a4 * y],
    ])
    assert np.allclose(s.A, expected, atol=0)
    assert np.array_equal(s.b, [0, -y, 0, 0, 0, -1])


def test_identity_ac_at_origin():
    s = build_ground_system(np.array([0, 0, 0, 0, 1, 0, 0, 1.0]))
    assert np.allclose(s.A[2], [0, 0, 0, 0])
    assert np.allclose(s.A @ [1, 0, 0, 0], s.b)


@pytest.mark.parametrize("kind", AXIS)
def test_truth_satisfies_axis_aligned_system(kind, rng):
    pts = rng.uniform(-0.8, 0.8, size=(3, 2))
    rows = _rows_from_params(kind, 0.1, 0.05, -0.02, pts)
    s = _system(kind, rows)
    assert s.A.shape == (18, 4) and s.blocks == 3
    r = s.A @ [math.cos(0.1), math.sin(0.1), 0.05, -0.02] - s.b
    assert np.max(np.abs(r)) < 1e-10
    # each 6-row block on its own
    for i in range(3):
        si = _system(kind, rows[i])
        assert np.allclose(si.A, s.A[6 * i:6 * i + 6]) and np.allclose(si.b, s.b[6 * i:6 * i + 6])


def test_truth_is_null_vector_of_general_system(rng):
    alpha, delta, p, q = 0.1, 0.7, 0.04, -0.03
    pts = rng.uniform(-0.5, 0.5, size=(2, 2))
    rows = _rows_from_params(PlaneClass.GENERAL_VERTICAL, alpha, p, q, pts, delta)
    s = build_general_vertical_system(rows)
    assert s.A.shape == (12, 5) and not np.any(s.b)
    cd, sd, c, sn = math.cos(delta), math.sin(delta), math.cos(alpha), math.sin(alpha)
    h = [c - p * cd, -sn - p * sd, 1.0, sn - q * cd, c - q * sd]
    assert np.max(np.abs(s.A @ h)) < 1e-10


def test_special_system_rejects_other_planes():
    with pytest.raises(ValueError):
        build_vertical_special_system(np.zeros(8), PlaneClass.GROUND)
    with pytest.raises(ValueError):
        solve_vertical_special(np.zeros(8), PlaneClass.GENERAL_VERTICAL)


# ---------------------------------------------------------------- axis-aligned solvers

@pytest.mark.parametrize("solve", [solve_ground_rapid, solve_ground_optimal])
def test_ground_exact_recovery(solve):
    rows = _rows_from_params(PlaneClass.GROUND, 0.1, 0.05, -0.02, np.array([[0.2, 0.4]]))
    c = solve(rows).best
    assert angle_diff(c.pose.alpha, 0.1) < 1e-8
    assert c.p == pytest.approx(0.05, abs=1e-8) and c.q == pytest.approx(-0.02, abs=1e-8)


@pytest.mark.parametrize("kind", AXIS)
@pytest.mark.parametrize("method", ["rapid", "optimal"])
def test_identity_motion(kind, method):
    rows = np.array([0.3, 0.2, 0.3, 0.2, 1, 0, 0, 1.0])
    rep = (solve_ground_rapid(rows) if method == "rapid" and kind is PlaneClass.GROUND
           else solve_vertical_special(rows, kind, method) if kind is not PlaneClass.GROUND
           else solve_ground_optimal(rows))
    c = rep.best
    assert angle_diff(c.pose.alpha, 0) < 1e-10 and abs(c.p) < 1e-10 and abs(c.q) < 1e-10
    assert rep.normal_undetermined


@pytest.mark.parametrize("kind", [PlaneClass.FRONTAL, PlaneClass.SIDE])
@pytest.mark.parametrize("method", ["rapid", "optimal"])
def test_special_vertical_exact_recovery(kind, method, rng):
    # forward motion towards the wall
    inst = random_instance(rng, kind, alpha=0.15, t_angle=0.0)
    c = solve_vertical_special(inst.rows, kind, method).best
    assert angle_diff(c.pose.alpha, 0.15) < 1e-8
    assert np.allclose(c.pose.t_dir, inst.t_dir, atol=1e-8)
    assert np.allclose(c.plane.normal, inst.n)


@pytest.mark.parametrize("kind", AXIS)
def test_axis_aligned_random_recovery(kind, rng):
    for _ in range(200):
        inst = random_instance(rng, kind)
        for method in ("rapid", "optimal"):
            rep = (solve_ground_rapid(inst.rows) if method == "rapid" else solve_ground_optimal(inst.rows)) \
                if kind is PlaneClass.GROUND else solve_vertical_special(inst.rows, kind, method)
            c = rep.best
            assert len(rep.candidates) == 1
            assert angle_diff(c.pose.alpha, inst.alpha) < 1e-7
            assert np.allclose(c.pose.t_dir, inst.t_dir, atol=1e-7)
            assert np.allclose(c.plane.normal, inst.n)


@pytest.mark.parametrize("kind", AXIS)
def test_overdetermined_consistency(kind, rng):
    inst = random_instance(rng, kind, k=10)
    one = solve_vertical_special(inst.rows[:1], kind) if kind is not PlaneClass.GROUND \
        else solve_ground_optimal(inst.rows[:1])
    for k in range(2, 11):
        rep = solve_vertical_special(inst.rows[:k], kind) if kind is not PlaneClass.GROUND \
            else solve_ground_optimal(inst.rows[:k])
        assert angle_diff(rep.best.pose.alpha, one.best.pose.alpha) < 1e-8
        assert abs(rep.best.p - one.best.p) < 1e-8 and abs(rep.best.q - one.best.q) < 1e-8
        assert rep.system.blocks == k


def test_rapid_zero_residual_with_several_acs(rng):
    inst = random_instance(rng, PlaneClass.GROUND, k=4)
    assert solve_ground_rapid(inst.rows).best.residual < 1e-9


def test_optimal_dominates_rapid_on_noisy_data(rng):
    for _ in range(200):
        inst = random_instance(rng, PlaneClass.GROUND, k=int(rng.integers(1, 4)))
        rows = _noisy(inst.rows, rng)
        try:
            r = solve_ground_rapid(rows).best
        except Degenerate:
            continue
        o = solve_ground_optimal(rows).best
        fo = algebraic_objective(PlaneClass.GROUND, rows, o.pose.alpha, o.p, o.q)
        fr = algebraic_objective(PlaneClass.GROUND, rows, r.pose.alpha, r.p, r.q)
        assert fo <= fr + 1e-12


def test_optimal_matches_grid_oracle(rng):
    for _ in range(10):
        inst = random_instance(rng, PlaneClass.GROUND)
        rows = _noisy(inst.rows, rng)
        s = build_ground_system(rows)
        a_ref, f_ref = grid_minimize(s.A, s.b, n=10**5)
        c = solve_ground_optimal(rows).best
        f = algebraic_objective(PlaneClass.GROUND, rows, c.pose.alpha, c.p, c.q)
        assert abs(f - f_ref) < 1e-9
        assert angle_diff(c.pose.alpha, a_ref) < 1e-6


def test_optimal_angle_is_root_of_stationarity_quartic(rng):
    for _ in range(20):
        inst = random_instance(rng, PlaneClass.GROUND)
        rows = _noisy(inst.rows, rng)
        alpha = solve_ground_optimal(rows).best.pose.alpha
        coeffs = ground_stationarity_quartic(rows)
        roots = np.roots(coeffs)
        real = roots[np.abs(roots.imag) < 1e-6].real
        angles = 2 * np.arctan(real)
        assert min(angle_diff(alpha, a) for a in angles) < 1e-6


def test_degenerate_translation_columns():
    # an all-zero AC leaves the translation columns rank deficient
    for solve in (solve_ground_optimal, solve_ground_rapid):
        with pytest.raises(Degenerate):
            solve(np.zeros(8))


# ---------------------------------------------------------------- general vertical

def test_general_recovers_wall_example(rng):
    pts = np.array([[0.1, 0.3]])
    rows = _rows_from_params(PlaneClass.GENERAL_VERTICAL, 0.1, 0.05, 0.03, pts, 0.7)
    rep = solve_vertical_general(rows)
    match = [c for c in rep.candidates
             if angle_diff(c.pose.alpha, 0.1) < 1e-7 and angle_diff(c.plane.delta, 0.7) < 1e-7
             and abs(c.p - 0.05) < 1e-7 and abs(c.q - 0.03) < 1e-7]
    assert match and match[0].residual < 1e-9


def test_general_candidates_reproduce_null_vector(rng):
    for _ in range(100):
        inst = random_instance(rng, PlaneClass.GENERAL_VERTICAL)
        rows = _noisy(inst.rows, rng, 1e-4, 1e-4)
        try:
            rep = solve_vertical_general(rows)
        except Degenerate:
            continue
        _, _, vt = np.linalg.svd(build_general_vertical_system(rows).A)
        h = vt[-1] / vt[-1][2]
        for c in rep.candidates:
            cd, sd = math.cos(c.plane.delta), math.sin(c.plane.delta)
            ca, sa = math.cos(c.pose.alpha), math.sin(c.pose.alpha)
            rec = [ca - c.p * cd, -sa - c.p * sd, 1.0, sa - c.q * cd, ca - c.q * sd]
            assert np.max(np.abs(np.array(rec) - h)) < 1e-6


def test_general_truth_among_plausible(rng):
    for _ in range(300):
        inst = random_instance(rng, PlaneClass.GENERAL_VERTICAL)
        cands = plausible_candidates(solve_vertical_general(inst.rows).candidates, inst.rows)
        assert any(angle_diff(c.pose.alpha, inst.alpha) < 1e-7
                   and angle_diff(c.plane.delta, inst.delta) < 1e-7
                   and np.allclose(c.pose.t_dir, inst.t_dir, atol=1e-7) for c in cands)


@pytest.mark.parametrize("kind", [PlaneClass.SIDE, PlaneClass.FRONTAL])
def test_general_reduces_to_special_walls(kind, rng):
    for _ in range(20):
        inst = random_instance(rng, kind)
        special = solve_vertical_special(inst.rows, kind).best
        general = solve_vertical_general(inst.rows).candidates
        assert any(angle_diff(c.pose.alpha, special.pose.alpha) < 1e-7
                   and np.allclose(c.pose.t_dir, special.pose.t_dir, atol=1e-7)
                   and np.allclose(c.plane.normal, special.plane.normal, atol=1e-7)
                   for c in general)


def test_general_identity_motion_flags_normal():
    rep = solve_vertical_general(np.array([0.2, -0.1, 0.2, -0.1, 1, 0, 0, 1.0]))
    assert rep.normal_undetermined
    c = rep.best
    assert angle_diff(c.pose.alpha, 0) < 1e-10 and c.plane.delta is None
    assert c.pose.is_pure_rotation


def test_general_overdetermined_consistency(rng):
    inst = random_instance(rng, PlaneClass.GENERAL_VERTICAL, k=6)
    ref = {(round(c.pose.alpha, 6), round(c.plane.delta, 6))
           for c in solve_vertical_general(inst.rows[:1]).candidates}
    for k in range(2, 7):
        got = {(round(c.pose.alpha, 6), round(c.plane.delta, 6))
               for c in solve_vertical_general(inst.rows[:k]).candidates}
        assert got == ref


def test_general_degenerate_null_space():
    with pytest.raises(Degenerate):
        solve_vertical_general(np.zeros(8))


# ---------------------------------------------------------------- circle and ellipse

def test_intersection_closed_form_example():
    pairs = intersect_unit_circle_ellipse(2.0, 0.5)
    assert len(pairs) == 4
    got = sorted((round(v[0], 12), round(v[1], 12)) for v, _ in pairs)
    a, b = math.sqrt(0.2), math.sqrt(0.8)
    assert got == sorted((round(sa * a, 12), round(sb * b, 12)) for sa in (1, -1) for sb in (1, -1))
    for v1, v2 in pairs:
        assert abs(math.hypot(*v1) - 1) < 1e-10 and abs(math.hypot(*v2) - 1) < 1e-10


def test_intersection_tangency_and_failures():
    pairs = intersect_unit_circle_ellipse(1.0, 0.3)
    assert sorted(v for v, _ in pairs) == [(-1.0, 0.0), (1.0, 0.0)]
    with pytest.raises(DegenerateCircle):
        intersect_unit_circle_ellipse(1.0, 1.0)
    with pytest.raises(NoRealIntersection):
        intersect_unit_circle_ellipse(3.0, 2.0)
    with pytest.raises(NoRealIntersection):
        intersect_unit_circle_ellipse(0.9, 0.5)
    # slight overshoot is clamped
    assert len(intersect_unit_circle_ellipse(1.0 - 1e-8, 0.5)) == 2
    with pytest.raises(ValueError):
        intersect_unit_circle_ellipse(0.5, 2.0)


def test_intersection_matches_circle_walk(rng):
    for _ in range(20):
        s1, s2 = sorted(rng.uniform(0.2, 2.0, size=2), reverse=True)
        ref = circle_walk(s1, s2, n=10**5)
        try:
            got = [v for v, _ in intersect_unit_circle_ellipse(s1, s2)]
        except NoRealIntersection:
            got = []
        assert len(got) == len(ref)
        for v in ref:
            assert min(math.hypot(v[0] - g[0], v[1] - g[1]) for g in got) < 1e-6


@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4))
@settings(max_examples=200)
def test_svd2x2_reconstructs(m):
    sx, sy, theta, phi = svd2x2(*m)
    assert sx >= abs(sy) - 1e-12

    def rot(a):
        return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])

    M = rot(phi) @ np.diag([sx, sy]) @ rot(theta)
    assert np.allclose(M, np.reshape(m, (2, 2)), atol=1e-9)
    assert np.allclose(sorted([sx, abs(sy)]), sorted(np.linalg.svd(np.reshape(m, (2, 2)))[1]),
                       atol=1e-9)


@given(st.floats(-math.pi / 4, math.pi / 4), st.floats(0.01, 0.3), st.floats(-math.pi, math.pi),
       st.integers(0, 2**31))
@settings(max_examples=100, deadline=None)
def test_ground_rapid_exact_property(alpha, rho, ta, seed):
    inst = random_instance(np.random.default_rng(seed), PlaneClass.GROUND, alpha=alpha, rho=rho,
                           t_angle=ta)
    c = solve_ground_rapid(inst.rows).best
    assert angle_diff(c.pose.alpha, alpha) < 1e-6
    assert np.allclose(c.pose.rotation, planar_rotation(alpha), atol=1e-6)

import math

import numpy as np
import pytest

from heislab import core, equilateral, measures as M, uniformity as U
from heislab.ball import ball_measure

SQUARE = M.make_polygon_counting(4)
AXIS = M.make_vertical_axis(1)
CIRCLE = M.make_circle_measure()


def multiset_oracle(points) -> bool:
    P = np.asarray(points, dtype=float)
    D = np.sort(core.dist_H(P[:, None, :], P[None, :, :]), axis=1)
    return bool(np.all(np.abs(D - D[0]) <= 1e-9 * max(1.0, D.max())))


@pytest.mark.parametrize("m", range(3, 9))
def test_regular_polygons_exact(m):
    rep = U.check_uniformly_distributed(M.make_polygon_counting(m))
    assert rep.verdict == "uniformly-distributed" and rep.max_rel_deviation == 0.0


def test_collinear_uneven_atoms_neither():
    spec = M.Atomic(((0.0, 0, 0), (1.0, 0, 0), (3.0, 0, 0)))
    assert U.check_uniformly_distributed(spec).verdict == "neither"


def test_cylinder_uniformly_distributed():
    rep = U.check_uniformly_distributed(M.make_cylinder())
    assert rep.verdict == "uniformly-distributed"
    assert rep.max_rel_deviation < 1e-3


def _random_configs(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = i % 5
        if kind == 0:
            m = int(rng.integers(3, 9))
            out.append(M.polygon_vertices(m, rng.uniform(0, 1), rng.uniform(-1, 1)))
        elif kind == 1:
            m = int(rng.integers(2, 6))
            out.append(np.vstack([M.polygon_vertices(m, 0.0, 0.0),
                                  M.polygon_vertices(m, rng.uniform(0, 1), rng.uniform(-2, 2))]))
        elif kind == 2:
            out.append(rng.normal(size=(int(rng.integers(2, 7)), 3)))
        elif kind == 3:
            out.append(equilateral.family_ii_triangle(rng.uniform(equilateral.THETA_MIN,
                                                                  equilateral.THETA_MAX)))
        else:
            pts = M.polygon_vertices(int(rng.integers(3, 7)))
            pts[0] += 1e-3 * rng.normal(size=3)
            out.append(pts)
    return out


def test_agrees_with_multiset_oracle():
    agree, positives = 0, 0
    for pts in _random_configs(200):
        spec = M.Atomic(tuple(map(tuple, pts)))
        verdict = U.check_uniformly_distributed(spec).verdict
        oracle = multiset_oracle(pts)
        positives += oracle
        agree += (verdict == "uniformly-distributed") == oracle
    assert agree == 200
    assert positives > 40


def test_four_point_equilateral_set_is_uniformly_distributed():
    spec = M.Atomic(tuple(map(tuple, equilateral.four_point_set())))
    assert U.check_uniformly_distributed(spec).verdict == "uniformly-distributed"


def test_vertical_axis_two_uniform():
    rep = U.check_s_uniform(AXIS)
    assert rep.verdict.startswith("s-uniform")
    assert rep.s == pytest.approx(2.0, abs=1e-9)
    assert rep.fitted_constant == pytest.approx(2.0, rel=1e-9)


@pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (2, 2), (3, 3)])
def test_horizontal_subgroup_exponent(n, k):
    spec = M.make_subgroup_haar(np.eye(2 * n)[:k], "horizontal", n)
    rep = U.check_s_uniform(spec, num_points=3)
    assert rep.s == pytest.approx(k, abs=0.01)


@pytest.mark.parametrize("dim_w", [1, 2])
def test_vertical_subgroup_exponent(dim_w):
    spec = M.make_subgroup_haar(np.eye(4)[:dim_w], "vertical", 2)
    rep = U.check_s_uniform(spec, num_points=3)
    assert rep.s == pytest.approx(dim_w + 2, abs=0.01)


def test_s_uniform_needs_two_decades():
    with pytest.raises(ValueError):
        U.check_s_uniform(AXIS, radii=[0.1, 0.2, 0.5])


def test_circle_not_s_uniform_over_wide_grid():
    rep = U.check_s_uniform(CIRCLE, num_points=4)
    assert rep.verdict == "uniformly-distributed"


def test_density_vertical_axis():
    est = U.density(AXIS, [0, 0, 5], 2.0, np.geomspace(1, 1e-3, 10))
    assert est.upper == pytest.approx(2.0) and est.lower == pytest.approx(2.0)
    assert est.trend == "converged"
    assert U.density(AXIS, [0, 0, 5], 1.5, np.geomspace(1, 1e-3, 10)).trend == "to-zero"
    assert U.density(AXIS, [0, 0, 5], 2.5, np.geomspace(1, 1e-3, 10)).trend == "to-infinity"


def test_density_circle():
    est = U.density(CIRCLE, [1, 0, 0], 2.0, np.geomspace(1e-1, 1e-3, 8))
    assert est.upper == pytest.approx(1.0, rel=1e-3) and est.lower <= est.upper


def test_density_radius_floor():
    with pytest.raises(ValueError):
        U.density(AXIS, [0, 0, 0], 2.0, [1e-3, 1e-5])
    with pytest.raises(ValueError):
        U.density(AXIS, [0, 0, 0], 2.0, [1e-3, 1e-2])


def test_blowup_trivial_and_self_similar():
    nu = U.blowup(CIRCLE, np.zeros(3), 1.0, 2.0)
    for r in (0.3, 1.2):
        assert ball_measure(nu, [1, 0, 0], r).value == pytest.approx(
            ball_measure(CIRCLE, [1, 0, 0], r).value, rel=1e-12)
    for k in (0.5, 3.0, 40.0):
        nu = U.blowup(AXIS, [0, 0, 1.5], k, 2.0)
        for N in (0.2, 1.0, 5.0):
            assert ball_measure(nu, [0, 0, 0.7], N).value == pytest.approx(2 * N * N, rel=1e-12)


def test_blowup_identity_random():
    rng = np.random.default_rng(4)
    x0 = np.array([1.0, 0, 0])
    for _ in range(20):
        k, N = rng.uniform(0.5, 50), rng.uniform(0.1, 3)
        nu = U.blowup(CIRCLE, x0, k, 2.0)
        lhs = ball_measure(nu, np.zeros(3), N)
        rhs = ball_measure(CIRCLE, x0, N / k).scaled(k ** 2)
        assert abs(lhs.value - rhs.value) <= lhs.abs_error + rhs.abs_error + 1e-12


def test_tangent_transform_maps_balls():
    rng = np.random.default_rng(8)
    a, r, R = np.array([0.3, -1.0, 2.0]), 0.25, 1.5
    T = U.tangent_map(a, r)
    p = core.multiply(a, core.dilate(r * R, rng.uniform(-0.6, 0.6, size=(1000, 3))))
    inside = core.dist_H(a, p) <= r * R
    assert inside.sum() > 100
    assert np.all(core.dist_H(np.zeros(3), T(p[inside])) <= R * (1 + 1e-12))
    assert np.allclose(core.dist_H(np.zeros(3), T(p)), core.dist_H(a, p) / r)
    ident = U.tangent_transform(CIRCLE, np.zeros(3), 1.0, 1.0)
    assert ball_measure(ident, [1, 0, 0], 0.4).value == pytest.approx(
        ball_measure(CIRCLE, [1, 0, 0], 0.4).value, rel=1e-12)


def test_tangent_then_inverse_blowup_recovers_masses():
    a, r = np.array([1.0, 0, 0]), 0.1
    tan = U.tangent_transform(CIRCLE, a, r, 1.0)
    back = M.transform_measure(tan, tan.similarity.inverse())
    for R in (0.05, 0.3):
        assert ball_measure(back, a, R).value == pytest.approx(
            ball_measure(CIRCLE, a, R).value, rel=1e-9)


def test_support_functional_single_atom():
    atom = M.Atomic(((0.0, 0, 0),))
    x = np.array([0.4, -0.2, 0.3])
    for s in (0.5, 2.0):
        assert U.support_functional(atom, x, np.zeros(3), s) == pytest.approx(
            math.exp(-s * core.koranyi_norm4(x)) - 1, rel=1e-14)
    assert U.support_functional(atom, np.zeros(3), np.zeros(3), 1.0) == 0.0


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_support_functional_vanishes_on_polygon(m):
    spec = M.make_polygon_counting(m)
    for s in (0.5, 1, 2, 4):
        for v in spec.array[1:]:
            assert abs(U.support_functional(spec, v, spec.array[0], s)) < 1e-10


def test_support_functional_negative_off_support():
    x = np.array([1.0, 0, 0.09])  # Korányi distance 0.3 from the vertex (1,0,0)
    vals = [U.support_functional(SQUARE, x, SQUARE.array[0], s) for s in (1, 4, 16, 64)]
    assert max(vals) < 0 and min(vals) < -1e-3


def test_support_functional_on_circle_and_unbounded_rejected():
    th = 1.1
    x = [math.cos(th), math.sin(th), 0.0]
    assert abs(U.support_functional(CIRCLE, x, [1, 0, 0], 2.0)) < 1e-10
    assert U.support_functional(CIRCLE, [1, 0, 0.3], [1, 0, 0], 20.0) < 0
    with pytest.raises(ValueError):
        U.support_functional(AXIS, [0, 0, 1], [0, 0, 0], 1.0)
    with pytest.raises(ValueError):
        U.moment_polynomial(M.make_cylinder(), 1, [1, 0, 0], [1, 0, 0])


def test_moment_polynomials():
    atom = M.Atomic(((0.0, 0, 0),))
    x = np.array([0.7, 0.1, -0.4])
    for j in (1, 2, 3):
        assert U.moment_polynomial(atom, j, x, np.zeros(3)) == pytest.approx(
            core.koranyi_norm4(x) ** j, rel=1e-14)
    for j in (1, 2, 3):
        assert abs(U.moment_polynomial(SQUARE, j, SQUARE.array[2], SQUARE.array[0])) < 1e-10
    p1 = U.moment_polynomial(SQUARE, 1, np.zeros(3), SQUARE.array[0])
    expected = 4 * 1.0 - (0 + 8 + 16 + 8)
    assert p1 == pytest.approx(expected)


def test_exponential_series_of_moments_reproduces_F():
    rng = np.random.default_rng(2)
    # small configuration keeps the alternating series well conditioned
    spec = M.Atomic(tuple(map(tuple, 0.3 * rng.normal(size=(5, 3)))))
    x, x0 = 0.3 * rng.normal(size=3), spec.array[0]
    for s in (0.25, 0.5, 1.0):
        series = sum((-s) ** j / math.factorial(j) * U.moment_polynomial(spec, j, x, x0)
                     for j in range(1, 40))
        assert series == pytest.approx(U.support_functional(spec, x, x0, s), abs=1e-10)


def test_layer_cake_cross_check():
    rng = np.random.default_rng(6)
    spec = M.Atomic(tuple(map(tuple, rng.normal(size=(6, 3)))))
    x = rng.normal(size=3)
    direct = U.integrate_measure(
        spec, lambda z: np.exp(-1.3 * core.koranyi_norm4(core.multiply(-x, z))))[0]
    assert U.layer_cake_integral(spec, x, 1.3) == pytest.approx(direct, abs=1e-9)


def test_verdict_scale_invariance():
    spec = M.make_polygon_counting(5)
    heavy = M.Atomic(spec.points, tuple([3.5] * 5))
    a, b = U.check_uniformly_distributed(spec), U.check_uniformly_distributed(heavy)
    assert a.verdict == b.verdict
    assert b.fitted_constant == pytest.approx(3.5 * a.fitted_constant, rel=1e-12)
    assert b.fitted_exponent == pytest.approx(a.fitted_exponent, rel=1e-12)


def test_verdict_similarity_invariance():
    rng = np.random.default_rng(1)
    S = core.Similarity(rng.normal(size=3), core.rotation_2d(0.7), True, 1.0)
    for spec in (M.make_polygon_counting(6), M.Atomic(((0.0, 0, 0), (1.0, 0, 0), (3.0, 0, 0))),
                 AXIS):
        moved = M.transform_measure(spec, S)
        pts = S(M.sample_support(spec, 4, seed=0))
        radii = U.DEFAULT_RADII
        a = U.check_uniformly_distributed(spec, 4, radii)
        b = U.check_uniformly_distributed(moved, 4, radii, points=pts)
        assert a.verdict == b.verdict
    D = core.Similarity.dilation(3.0, 1)
    a = U.check_s_uniform(AXIS, 4)
    b = U.check_s_uniform(M.transform_measure(AXIS, D), 4)
    assert b.fitted_exponent == pytest.approx(a.fitted_exponent, abs=1e-9)
    assert b.fitted_constant == pytest.approx(a.fitted_constant * 3.0 ** -2, rel=1e-9)


def test_unconverged_is_inconclusive():
    rep = U.check_uniformly_distributed(CIRCLE, 3, ball_tol=1e-30)
    assert rep.verdict == "inconclusive" and not rep.converged


def test_doubling_bound_on_examples():
    rng = np.random.default_rng(3)
    for spec in (SQUARE, CIRCLE, AXIS, M.make_cylinder()):
        for _ in range(10):
            x = M.sample_support(spec, 1, seed=int(rng.integers(1 << 20)))[0]
            s = rng.uniform(0.01, 1.0)
            r = s * rng.uniform(1.01, 20)
            y = x + rng.normal(size=3)
            assert U.doubling_bound(spec, y, x, s, r)["holds"]


def test_report_serialization():
    rep = U.check_uniformly_distributed(SQUARE)
    d = rep.to_json()
    assert d["verdict"] == "uniformly-distributed"
    lines = rep.to_csv().splitlines()
    assert lines[0] == "point_index,r,value,abs_error"
    assert len(lines) == 1 + len(rep.points) * len(rep.radii)
    est = U.density(AXIS, [0, 0, 0], 2.0, [0.1, 0.01])
    assert est.to_json()["upper"] == pytest.approx(2.0)

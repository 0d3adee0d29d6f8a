import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from natmaplab import hypcore
from natmaplab.errors import NearBoundary, UnsupportedDimension
from tests.strategies import ball_points, unit_vectors


def test_busemann_zero_at_origin():
    theta = np.array([0.0, 0.6, 0.8])
    assert hypcore.busemann(theta, np.zeros(3)) == 0.0


def test_busemann_along_ray_is_minus_distance():
    theta = np.array([1.0, 0.0, 0.0])
    for r in (0.5, 2.0, 5.0):
        x = hypcore.point_at_distance(theta, r)
        assert hypcore.busemann(theta, x) == pytest.approx(-r, abs=1e-12)


def test_distance_oracle_on_diameter():
    # d(0, t e_1) = 2 artanh t
    for t in (0.1, 0.5, 0.9):
        x = np.array([t, 0.0])
        assert hypcore.hyp_distance(np.zeros(2), x) == pytest.approx(2 * math.atanh(t), rel=1e-14)


def test_near_boundary_raises():
    with pytest.raises(NearBoundary):
        hypcore.busemann(np.array([1.0, 0.0]), np.array([1.0 - 1e-15, 0.0]))
    with pytest.raises(NearBoundary):
        hypcore.BallPoint(np.array([1.0, 0.0]))


def test_dimension_check():
    with pytest.raises(UnsupportedDimension):
        hypcore.check_dimension(1)


@given(ball_points(), unit_vectors())
def test_busemann_gradient_has_unit_norm(x, theta):
    g = hypcore.busemann_dx(theta, x)
    assert np.linalg.norm(g) / hypcore.conformal_factor(x) == pytest.approx(1.0, abs=1e-9)


@given(ball_points(), unit_vectors(), unit_vectors())
def test_busemann_dx_matches_finite_difference(x, theta, v):
    h = 1e-6
    fd = (hypcore.busemann(theta, x + h * v) - hypcore.busemann(theta, x - h * v)) / (2 * h)
    assert hypcore.busemann_dx(theta, x) @ v == pytest.approx(fd, abs=1e-5 * hypcore.conformal_factor(x) ** 2)


@given(ball_points(), unit_vectors())
def test_poisson_is_exp_minus_busemann(x, theta):
    assert hypcore.poisson_kernel(x, theta) == pytest.approx(math.exp(-hypcore.busemann(theta, x)), rel=1e-10)


@given(ball_points(max_radius=0.7), ball_points(max_radius=0.7), ball_points(max_radius=0.7))
def test_triangle_inequality(p, q, r):
    d = hypcore.hyp_distance
    assert d(p, r) <= d(p, q) + d(q, r) + 1e-10


@given(ball_points(max_radius=0.6), ball_points(max_radius=0.6), st.integers(0, 2**31))
def test_isometries_preserve_distance(p, q, seed):
    gam = hypcore.MobiusIsometry.random(3, np.random.default_rng(seed))
    a, b = gam.apply(p), gam.apply(q)
    assert hypcore.hyp_distance(a, b) == pytest.approx(hypcore.hyp_distance(p, q), abs=1e-9)
    assert np.allclose(gam.inverse().apply(a), p, atol=1e-10)


@given(ball_points(max_radius=0.6), unit_vectors(), st.integers(0, 2**31))
def test_busemann_cocycle(x, theta, seed):
    # B_{g theta}(g x) = B_theta(x) + B_{g theta}(g o)
    gam = hypcore.MobiusIsometry.random(3, np.random.default_rng(seed), max_radius=0.5)
    gt = gam.apply(theta)
    lhs = hypcore.busemann(gt, gam.apply(x))
    rhs = hypcore.busemann(theta, x) + hypcore.busemann(gt, gam.origin_image())
    assert lhs == pytest.approx(rhs, abs=1e-9)


@given(ball_points(max_radius=0.6), unit_vectors(), st.floats(0.0, 4.0))
def test_geodesic_toward_is_unit_speed_and_lowers_busemann(x, theta, s):
    y = hypcore.geodesic_toward(x, theta, s)
    assert hypcore.hyp_distance(x, y) == pytest.approx(s, abs=1e-8)
    assert hypcore.busemann(theta, y) == pytest.approx(hypcore.busemann(theta, x) - s, abs=1e-8)


@given(ball_points(max_radius=0.6), unit_vectors(), st.floats(0.01, 2.0))
def test_exp_map_distance(x, v, s):
    lam = hypcore.conformal_factor(x)
    y = hypcore.exp_map(x, v * s / lam)
    assert hypcore.hyp_distance(x, y) == pytest.approx(s, rel=1e-9)


def test_mobius_add_maps_sphere_to_sphere(rng):
    a = np.array([0.3, -0.2, 0.1])
    th = rng.standard_normal((50, 3))
    th /= np.linalg.norm(th, axis=1, keepdims=True)
    assert np.allclose(np.linalg.norm(hypcore.mobius_add(a, th), axis=1), 1.0)


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(-1.0, 3.0))
def test_cusp_roundtrip_and_horosphere(y0, y1, t):
    y = np.array([y0, y1])
    x = hypcore.cusp_to_ball(y, t)
    y2, t2 = hypcore.ball_to_cusp(x)
    assert np.allclose(y2, y, atol=1e-8) and t2 == pytest.approx(t, abs=1e-8)
    # t is minus the Busemann function of the cusp point
    assert hypcore.busemann(np.eye(3)[-1], x) == pytest.approx(-t, abs=1e-8)


def test_cusp_metric_matches_ball_pullback():
    y, t = np.array([0.3, -0.4]), 0.7
    h = 1e-6
    J = np.stack([(hypcore.cusp_to_ball(*_shift(y, t, k, h)) - hypcore.cusp_to_ball(*_shift(y, t, k, -h))) / (2 * h)
                  for k in range(3)])
    x = hypcore.cusp_to_ball(y, t)
    G = J @ hypcore.metric_tensor(x) @ J.T
    model = hypcore.CuspModel.unit(3)
    assert np.allclose(G, np.diag(model.metric(y, t)), atol=1e-7)


def _shift(y, t, k, h):
    if k < 2:
        y = y.copy()
        y[k] += h
        return y, t
    return y, t + h


def test_slice_volume_and_shift():
    model = hypcore.CuspModel(3, [[2.0, 0.5], [0.0, 1.0]])
    assert hypcore.cusp_slice_volume(model, 0.0) == pytest.approx(2.0)
    ts = np.linspace(0, 6, 13)
    v = hypcore.cusp_slice_volume(model, ts)
    assert np.all(np.diff(v) < 0)
    assert np.allclose(v, 2.0 * np.exp(-2 * ts), rtol=1e-15)
    y, t = hypcore.cusp_shift(model, 1.5, np.zeros(2), 0.5)
    assert t == 2.0
    with pytest.raises(ValueError):
        hypcore.cusp_shift(model, -1.0, np.zeros(2), 0.0)


def test_cusp_shift_contracts_slices():
    # on a slice the shift scales horizontal lengths by e^{-r}
    model = hypcore.CuspModel.unit(3)
    r, t = 0.8, 0.3
    g0 = model.metric(np.zeros(2), t)[0]
    g1 = model.metric(np.zeros(2), t + r)[0]
    assert math.sqrt(g1 / g0) == pytest.approx(math.exp(-r), rel=1e-14)


def test_isometry_serialization_roundtrip(rng):
    gam = hypcore.MobiusIsometry.random(3, rng)
    back = hypcore.MobiusIsometry.from_list(gam.to_list(), 3)
    x = np.array([0.1, 0.2, -0.3])
    assert np.allclose(gam.apply(x), back.apply(x))

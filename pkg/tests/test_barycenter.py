import numpy as np
import pytest
from hypothesis import given, strategies as st

from natmaplab import barycenter, bmeasure, calib, hypcore
from natmaplab.errors import SingularHessian
from natmaplab.natmap.maps import phi0
from tests.strategies import ball_points


def test_constant_function_goes_to_origin(grid3):
    sol = barycenter.solve_barycenter(grid3.constant(1.0))
    assert sol.residual <= barycenter.TOL_BAR
    assert np.linalg.norm(sol.point) < 1e-12


@given(ball_points(max_radius=0.8))
def test_bar_inverts_phi0(p):
    g = bmeasure.make_grid(3)
    assert hypcore.hyp_distance(barycenter.bar(phi0(p, g)), p) < 1e-4


@given(st.floats(1e-3, 1e3), st.integers(0, 10**6))
def test_scale_invariance(c, seed):
    g = bmeasure.make_grid(3, "product_gauss", 24)
    f = calib.random_positive(g, np.random.default_rng(seed))
    assert barycenter.bar_scale_invariance_check(f, c, tol=1e-8)


@given(st.integers(0, 10**6))
def test_rotation_equivariance(seed):
    g = bmeasure.make_grid(3)
    rng = np.random.default_rng(seed)
    gam = hypcore.MobiusIsometry.random(3, rng, max_radius=0.0)
    f = lambda th: np.exp(0.8 * th[:, 0] - 0.5 * th[:, 1] * th[:, 2])
    moved = bmeasure.isom_action_exact(gam, f, g)
    assert np.allclose(barycenter.bar(moved), gam.apply(barycenter.bar(g.function(f))), atol=1e-6)


def test_mobius_equivariance(grid3):
    gam = hypcore.MobiusIsometry.random(3, np.random.default_rng(3), max_radius=0.3)
    f = lambda th: np.exp(0.5 * th[:, 2])
    moved = bmeasure.isom_action_exact(gam, f, grid3)
    assert hypcore.hyp_distance(barycenter.bar(moved), gam.apply(barycenter.bar(grid3.function(f)))) < 1e-4


def test_residual_is_first_order_condition(grid3, rng):
    f = calib.random_positive(grid3, rng)
    sol = barycenter.solve_barycenter(f)
    assert barycenter.residual_at(sol.point, f) == pytest.approx(sol.residual, abs=1e-15)
    assert sol.residual <= barycenter.TOL_BAR


def test_dbar_matches_finite_difference(grid3, rng):
    f = calib.random_positive(grid3, rng)
    d = calib.smooth_random_function(grid3, rng)
    h = 1e-5
    fd = (barycenter.bar(f + d * h) - barycenter.bar(f - d * h)) / (2 * h)
    assert np.allclose(barycenter.dbar(f, d).vec, fd, atol=1e-6)


def test_dbar_kills_scaling(grid3, rng):
    f = calib.random_positive(grid3, rng)
    assert np.allclose(barycenter.dbar(f, f).vec, 0.0, atol=1e-12)


def test_concentrated_mass_is_singular():
    g = bmeasure.make_grid(2, "circle_uniform", 64)
    vals = np.full(g.size, 1e-9)
    vals[0] = 1.0
    with pytest.raises(SingularHessian):
        barycenter.solve_barycenter(bmeasure.BoundaryFunction(g, vals), max_iter=30)


def test_nonpositive_rejected(grid3):
    with pytest.raises(ValueError):
        barycenter.bar(grid3.function(lambda th: th[:, 0]))

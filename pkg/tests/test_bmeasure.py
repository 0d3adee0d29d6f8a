import numpy as np
import pytest
from hypothesis import given, strategies as st

from natmaplab import bmeasure, hypcore
from natmaplab.errors import GridMismatch, UnsupportedDimension, ZeroFunction
from tests.strategies import ball_points


@pytest.mark.parametrize("n,scheme,res", [(2, "circle_uniform", 64), (3, "fibonacci_sphere", 2000),
                                          (3, "product_gauss", 24), (4, "product_gauss", 16)])
def test_degree_two_moments(n, scheme, res):
    # normalized sphere measure: int x_i x_j = delta_ij / n
    g = bmeasure.make_grid(n, scheme, res)
    assert g.weights.sum() == pytest.approx(1.0)
    M = (g.nodes * g.weights[:, None]).T @ g.nodes
    tol = 1e-3 if scheme == "fibonacci_sphere" else 1e-12
    assert np.allclose(M, np.eye(n) / n, atol=tol)
    assert np.allclose(g.weights @ g.nodes, 0.0, atol=tol)


def test_unknown_scheme_and_dimension():
    with pytest.raises(ValueError):
        bmeasure.make_grid(3, "lebedev", 50)
    with pytest.raises(UnsupportedDimension):
        bmeasure.make_grid(3, "circle_uniform", 64)


def test_visual_density_integrates_to_one(grid3):
    # the Poisson kernel to the power n-1 is a probability density
    for x in ([0.0, 0.0, 0.0], [0.3, -0.2, 0.4], [0.0, 0.0, 0.7]):
        d = bmeasure.visual_density(np.array(x), grid3)
        assert grid3.integrate(d.values) == pytest.approx(1.0, rel=1e-6)


def test_grid_mismatch(grid3, grid3_coarse):
    with pytest.raises(GridMismatch):
        bmeasure.l2_inner(grid3.constant(), grid3_coarse.constant())
    with pytest.raises(GridMismatch):
        bmeasure.BoundaryFunction(grid3, np.ones(3))


def test_radial_projection(grid3):
    f = grid3.function(lambda th: 2.0 + th[:, 0])
    p = bmeasure.radial_project(f)
    assert p.on_unit_sphere()
    with pytest.raises(ZeroFunction):
        bmeasure.radial_project(grid3.constant(0.0))


@given(st.floats(0.5, 5.0), st.floats(0.5, 5.0), st.integers(0, 10**6))
def test_radial_projection_two_lipschitz(a, b, seed):
    # outside the ball of radius 1/2 the projection is 2-Lipschitz
    g = bmeasure.make_grid(3, "product_gauss", 16)
    rng = np.random.default_rng(seed)
    f = bmeasure.BoundaryFunction(g, np.exp(rng.standard_normal(g.size) * 0.3))
    k = bmeasure.BoundaryFunction(g, np.exp(rng.standard_normal(g.size) * 0.3))
    f, k = f * (a / f.norm()), k * (b / k.norm())
    lhs = (bmeasure.radial_project(f) - bmeasure.radial_project(k)).norm()
    assert lhs <= 2.0 * (f - k).norm() + 1e-12


@given(ball_points(max_radius=0.5), st.integers(0, 10**6))
def test_isometry_action_preserves_norm(p, seed, ):
    g = bmeasure.make_grid(3, "product_gauss", 48)
    gam = hypcore.MobiusIsometry.random(3, np.random.default_rng(seed), max_radius=0.5)
    f = lambda th: np.exp(0.5 * th[:, 0]) + 0.2 * th[:, 2] ** 2
    phi = g.function(f)
    moved = bmeasure.isom_action_exact(gam, f, g)
    assert moved.norm() == pytest.approx(phi.norm(), rel=2e-3)


def test_isometry_action_on_phi0(grid3):
    # gamma . Phi_0(p) = Phi_0(gamma p)
    from natmaplab.natmap.maps import phi0
    rng = np.random.default_rng(5)
    gam = hypcore.MobiusIsometry.random(3, rng, max_radius=0.4)
    p = np.array([0.2, -0.1, 0.3])
    f = lambda th: np.exp(-hypcore.busemann(th, p))
    moved = bmeasure.isom_action_exact(gam, f, grid3)
    assert np.allclose(moved.values, phi0(gam.apply(p), grid3).values, rtol=1e-10)


def test_interpolated_action_rotation(grid3):
    gam = hypcore.MobiusIsometry.random(3, np.random.default_rng(2), max_radius=0.0)
    f = lambda th: 1.0 + 0.3 * th[:, 0] * th[:, 1]
    exact = bmeasure.isom_action_exact(gam, f, grid3)
    interp = bmeasure.isom_action(gam, grid3.function(f))
    assert np.max(np.abs(exact.values - interp.values)) < bmeasure.TAU_ACT * 10


def test_dump_csv(tmp_path, grid2):
    f = grid2.function(lambda th: 1.0 + th[:, 0])
    path = tmp_path / "phi.csv"
    bmeasure.dump_csv(path, f, {"extra": np.arange(grid2.size)})
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,weight,value,extra"
    assert len(lines) == grid2.size + 1

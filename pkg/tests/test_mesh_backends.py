import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from natmaplab import hypcore
from natmaplab.natmap import backends as nb
from natmaplab.natmap.mesh import Mesh, primitive_offsets, stencil_defect
from natmaplab.errors import NoLevelsFound
from tests.strategies import ball_points, unit_vectors


def flat(x):
    return np.ones(x.shape)


def test_primitive_offsets_counts():
    assert len(primitive_offsets(2, 1)) == 8
    assert len(primitive_offsets(2, 3)) == 32
    assert len(primitive_offsets(3, 1)) == 26


def test_stencil_defect_oracle():
    # 8-neighbour stencil: worst direction is 22.5 deg off an axis, defect 1/cos(22.5)... exactly
    # (cos t + (sqrt2 - 1) sin t) maximised at t = pi/8
    oracle = math.cos(math.pi / 8) + (math.sqrt(2) - 1) * math.sin(math.pi / 8) - 1.0
    assert stencil_defect(2, 1, trials=2000) == pytest.approx(oracle, rel=1e-2)
    assert stencil_defect(2, 3) < 0.014


def test_flat_mesh_axis_distance_exact():
    m = Mesh([0, 0], [1, 1], (11, 11), flat, stencil=1)
    d = m.distances_from_nodes([0])
    assert d.reshape(11, 11)[10, 0] == pytest.approx(1.0)
    assert d.reshape(11, 11)[10, 10] == pytest.approx(math.sqrt(2.0))


def test_flat_mesh_overestimate_bounded():
    m = Mesh([0, 0], [1, 1], (41, 41), flat, stencil=3)
    d = m.distances_from_nodes([0])
    true = np.linalg.norm(m.nodes, axis=1)
    ratio = d[1:] / true[1:]
    assert ratio.min() >= 1.0 - 1e-12
    # the certificate samples directions, so allow a sliver above it
    assert ratio.max() <= (1.0 + stencil_defect(2, 3)) * (1.0 + 1e-4)


def test_level_set_circle_length():
    m = Mesh([-1, -1], [1, 1], (161, 161), flat)
    field = np.linalg.norm(m.nodes, axis=1)
    ls = m.level_set(field, 0.5)
    assert ls.volume == pytest.approx(math.pi, rel=1e-3)
    with pytest.raises(NoLevelsFound):
        m.level_set(field, 5.0)


def test_level_set_sphere_area():
    m = Mesh([-1] * 3, [1] * 3, (41,) * 3, lambda x: np.ones(x.shape))
    ls = m.level_set(np.linalg.norm(m.nodes, axis=1), 0.6)
    assert ls.volume == pytest.approx(4 * math.pi * 0.36, rel=1e-2)


def test_periodic_mesh_interpolation():
    m = Mesh([0, 0], [1, 1], (8, 9), flat, periodic=(0,))
    field = np.sin(2 * np.pi * m.nodes[:, 0])
    # wrap-around cell between the last node and the first
    val = m.interpolate(field, np.array([[0.99, 0.5]]))
    assert abs(val[0]) < 0.5


@given(st.floats(0.0, 3.0), st.floats(-1.0, 1.0), st.floats(0.0, 8.0))
def test_polar_excess_matches_cosine_law(rho, ca, r):
    d = math.acosh(max(math.cosh(rho) * math.cosh(r) - math.sinh(rho) * math.sinh(r) * ca, 1.0))
    assert nb.polar_excess(rho, ca, r) == pytest.approx(d - r, abs=1e-7)


@given(ball_points(max_radius=0.7), unit_vectors(), st.floats(0.1, 6.0))
def test_exact_excess(p, omega, r):
    be = nb.ExactBackend(3)
    y = hypcore.point_at_distance(omega, r)
    assert float(be.excess(p, r, omega)) == pytest.approx(hypcore.hyp_distance(p, y) - r, abs=1e-7)


def test_numba_kernel_matches_numpy(rng):
    be = nb.ExactBackend(3)
    p = np.array([0.2, -0.3, 0.1])
    thetas = rng.standard_normal((7, 3))
    thetas /= np.linalg.norm(thetas, axis=1, keepdims=True)
    r = rng.uniform(0, 10, 500)
    om = rng.standard_normal((500, 3))
    om /= np.linalg.norm(om, axis=1, keepdims=True)
    fast = be.kernel_sum(p, thetas, r, om, 2.5)
    slow = nb.MetricBackend.kernel_sum(be, p, thetas, r, om, 2.5)
    assert np.allclose(fast, slow, rtol=1e-10)


def test_householders_send_e1_to_theta(rng):
    th = rng.standard_normal((5, 4))
    th /= np.linalg.norm(th, axis=1, keepdims=True)
    th[0] = np.eye(4)[0]
    v, s = nb.householders(th)
    assert np.allclose(nb.apply_householders(v, s, np.eye(4)[0]), th)


@pytest.mark.parametrize("n", [2, 3])
def test_ball_volume_oracle(n):
    # closed form for n = 3: pi (sinh 2R - 2R)
    R = 3.0
    be = nb.ExactBackend(n)
    ref = nb.closed_form_ball_volume(n, R)
    if n == 3:
        assert ref == pytest.approx(math.pi * (math.sinh(2 * R) - 2 * R), rel=1e-10)
    assert be.ball_volume(np.zeros(n), R) == pytest.approx(ref, rel=1e-9)
    mc = nb.MetricBackend.ball_volume(be, np.zeros(n), R, count=4000, seed=1)
    assert mc == pytest.approx(ref, rel=1e-9)  # stratified radii, every sample inside


def test_flat_grid_backend_matches_exact_2d():
    be = nb.ConformalBallBackend(2, amplitude=0.0)
    rng = np.random.default_rng(0)
    p = np.array([0.1, -0.2])
    worst = 0.0
    for _ in range(40):
        q = rng.uniform(-0.9, 0.9, 2)
        if np.linalg.norm(q) > 0.95:
            continue
        d0 = hypcore.hyp_distance(p, q)
        worst = max(worst, abs(be.distance(p, q) - d0) / d0)
    assert worst < 0.02


def test_bump_backend_lengthens_distances():
    flat_be = nb.ConformalBallBackend(2, amplitude=0.0)
    bump = nb.ConformalBallBackend(2, amplitude=0.5)
    p, q = np.array([-0.4, 0.05]), np.array([0.4, 0.0])
    assert bump.distance(p, q) > flat_be.distance(p, q)
    assert np.all(np.linalg.eigvalsh(bump.metric(np.zeros(2))) >= np.linalg.eigvalsh(hypcore.metric_tensor(np.zeros(2))))


def test_bump_must_fit_in_box():
    with pytest.raises(ValueError):
        nb.ConformalBallBackend(2, amplitude=0.5, width=3.0)
    with pytest.raises(ValueError):
        nb.ConformalBallBackend(2, amplitude=-0.1)


def test_cusp_backend_base_distance_is_height():
    model = hypcore.CuspModel.unit(2)
    be = nb.CuspGridBackend(model, height=4.0)
    d = be.base_distance()
    assert np.allclose(d, be.mesh.nodes[:, -1], atol=1e-12)
    assert np.allclose(be.to_ball(np.array([0.0, 0.0])), 0.0)

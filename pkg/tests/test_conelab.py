import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natmaplab import conelab, hypcore
from natmaplab.errors import NearBoundary

NORTH = np.eye(3)[-1]


def horosphere():
    return conelab.ConeChart(lambda u: hypcore.cusp_to_ball(u, 0.0), NORTH)


def sheet():
    def base(u):
        return np.array([0.4 * u[0] + 0.1 * u[1] ** 2, 0.4 * u[1], 0.15 * np.sin(u.sum())])
    return conelab.ConeChart(base, np.array([0.6, 0.0, 0.8]))


def test_cone_map_at_zero_is_base():
    ch = sheet()
    x = np.array([0.2, -0.3])
    assert np.allclose(conelab.cone_map(ch, x, 0.0), ch.base(x))


@given(st.floats(0.0, 5.0))
def test_cone_moves_by_sigma_and_lowers_busemann(s):
    ch = sheet()
    x = np.array([0.1, 0.4])
    b = ch.base(x)
    z = conelab.cone_map(ch, x, s)
    assert hypcore.hyp_distance(b, z) == pytest.approx(s, abs=1e-8)
    assert hypcore.busemann(ch.theta, z) == pytest.approx(hypcore.busemann(ch.theta, b) - s, abs=1e-8)


def test_tan_reparametrisation():
    ch = conelab.ConeChart(sheet().base, np.array([0.6, 0.0, 0.8]), eps=1.0, reparam="tan")
    assert ch.sigma(0.5) == pytest.approx(1.0)
    with pytest.raises(NearBoundary):
        ch.sigma(1.0)
    with pytest.raises(NearBoundary):
        ch.sigma(1.0 - 1e-6)
    with pytest.raises(ValueError):
        conelab.ConeChart(sheet().base, NORTH, reparam="log")


@settings(max_examples=10)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.sampled_from([0.0, 0.5, 1.0, 2.0]))
def test_decay_pointwise(u0, u1, s):
    for ch in (horosphere(), sheet()):
        rep = conelab.cone_jacobian_decay_check(ch, [(np.array([u0, u1]), s)])
        assert rep.ok
        assert rep.speed_error < 1e-6


def test_horosphere_decay_is_equality():
    rep = conelab.cone_jacobian_decay_check(horosphere(), [(np.array([0.1, 0.2]), s) for s in (0.5, 1.0, 2.0)])
    assert np.allclose(rep.ratio, rep.bound, rtol=1e-5)
    assert np.allclose(rep.orth_ratio, 1.0, atol=1e-6)


def test_degenerate_base_skipped():
    ch = conelab.ConeChart(lambda u: np.array([0.5 * np.tanh(u.sum()), 0.0, 0.0]), NORTH)
    rep = conelab.cone_jacobian_decay_check(ch, [(np.array([0.1, 0.1]), 1.0)])
    assert rep.skipped == 1 and rep.ratio.size == 0
    assert conelab.degenerate_jacobian(ch, np.array([0.1, 0.1]), 1.0) == pytest.approx(0.0, abs=1e-6)


def test_integral_horosphere_equality():
    # the cone over a horosphere piece of area A has volume exactly A/(n-1)
    lhs, rhs = conelab.cone_integral_inequality(horosphere(), [-0.5, -0.5], [0.5, 0.5], cells=6)
    assert rhs == pytest.approx(1.0, rel=1e-6)  # the cusp chart is isometric, slice t = 0 has metric |dy|^2
    assert lhs == pytest.approx(rhs / 2, rel=1e-6)


def test_integral_generic_below_bound():
    lhs, rhs = conelab.cone_integral_inequality(sheet(), [-1, -1], [1, 1], cells=6)
    assert lhs <= rhs / 2 * 1.05


def test_constant_base_gives_zero():
    ch = conelab.ConeChart(lambda u: np.full(3, 0.1), NORTH)
    lhs, rhs = conelab.cone_integral_inequality(ch, [-1, -1], [1, 1], cells=2, s_nodes=6)
    assert lhs == pytest.approx(0.0, abs=1e-8) and rhs == pytest.approx(0.0, abs=1e-8)


def test_downstairs_cone():
    model = hypcore.CuspModel(3, np.diag([1.0, 2.0]))
    flat = conelab.downstairs_cone_check(model, lambda u: np.r_[model.lattice @ u, 0.3])
    # a flat slice at height t has area e^{-2t} Vol(L); its cone adds exactly area/2
    assert flat.rhs == pytest.approx(math.exp(-0.6) * 2.0 / 2, rel=1e-6)
    assert flat.lhs == pytest.approx(flat.rhs, rel=1e-6)
    assert flat.equivariance_error == 0.0
    wavy = conelab.downstairs_cone_check(model, lambda u: np.r_[model.lattice @ u, 0.3 + 0.2 * np.sin(2 * np.pi * u[0])])
    assert wavy.lhs <= wavy.rhs * 1.05
    assert wavy.equivariance_error < 1e-12

"""Coning a map toward an ideal point.

``C(x, s)`` is the point at distance ``sigma(s)`` from ``phi(x)`` on the ray
to ``theta``, with ``sigma(s) = s`` (unit speed) or ``tan(s pi / 2 eps)``.
In ``H^n`` the orthogonal part of a Jacobi field along rays toward a common
ideal point decays exactly like ``e^{-s}``, so coning contracts
``(n-1)``-volumes by ``e^{-(n-1)s}``.  Two ambient spaces are supported: the
ball chart and the cusp chart ``(y, t)`` where coning toward the cusp point
is the shift ``t -> t + s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import hypcore
from .errors import DegenerateFrame, NearBoundary

FD_STEP = 1e-3
S_MAX = 10.0


class BallSpace:
    name = "ball"

    def metric(self, x):
        return hypcore.metric_tensor(x)

    def cone(self, x, theta, sigma):
        return hypcore.geodesic_toward(x, theta, sigma)

    def busemann(self, theta, x):
        return hypcore.busemann(theta, x)


class CuspSpace:
    """Cusp chart ``(y, t)``; the ideal point is the cusp itself."""

    name = "cusp"

    def __init__(self, model):
        self.model = model

    def metric(self, x):
        x = np.asarray(x, dtype=float)
        return np.diag(self.model.metric(x[:-1], x[-1]))

    def cone(self, x, theta, sigma):
        x = np.array(x, dtype=float)
        x[..., -1] = x[..., -1] + sigma
        return x

    def busemann(self, theta, x):
        return -np.asarray(x, dtype=float)[..., -1]


@dataclass
class ConeChart:
    """Base map ``phi`` on the parameter box ``[lower, upper]`` of dimension ``n - 1``."""

    base: callable
    theta: np.ndarray
    eps: float = 1.0
    reparam: str = "unit"
    space: object = field(default_factory=BallSpace)
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        if self.reparam not in ("unit", "tan"):
            raise ValueError("reparam must be 'unit' or 'tan'")
        self.theta = np.asarray(self.theta, dtype=float)
        if self.space.name == "ball":
            self.theta = self.theta / np.linalg.norm(self.theta)

    @property
    def n(self):
        return self.theta.size

    def sigma(self, s):
        s = float(s)
        if s < 0:
            raise ValueError("cone parameter must be >= 0")
        if self.reparam == "unit":
            return s
        if s >= self.eps:
            raise NearBoundary("tan reparametrization needs s < eps")
        val = math.tan(s * math.pi / (2.0 * self.eps))
        if not math.isfinite(val) or val > 700.0:
            raise NearBoundary("cone parameter too close to eps")
        return val


def cone_map(chart, x, s):
    sigma = chart.sigma(s)
    base = np.asarray(chart.base(np.asarray(x, dtype=float)), dtype=float)
    out = chart.space.cone(base, chart.theta, sigma)
    if chart.space.name == "ball":
        hypcore._guard(out)
    return out


def _richardson(f, x, v, step):
    return (8.0 * (f(x + step * v) - f(x - step * v)) - (f(x + 2 * step * v) - f(x - 2 * step * v))) / (12.0 * step)


def base_differential(chart, x, step=FD_STEP):
    """``(n-1, n)`` rows ``dphi(e_k)``."""
    x = np.asarray(x, dtype=float)
    k = x.size
    return np.stack([_richardson(chart.base, x, np.eye(k)[i], step) for i in range(k)])


def cone_differential(chart, x, s, step=FD_STEP):
    """Rows ``dC(e_k)`` for the parameter axes, then ``dC/ds`` (unit-speed chart)."""
    x = np.asarray(x, dtype=float)
    k = x.size
    f = lambda y: cone_map(chart, y, s)
    rows = [_richardson(f, x, np.eye(k)[i], step) for i in range(k)]
    hs = min(step, 0.5 * s) if s > 0 else step
    g = lambda t: cone_map(chart, x, float(t[0]))
    if s >= 2 * hs:
        ds = _richardson(g, np.array([s]), np.ones(1), hs)
    else:
        # one-sided second-order difference at the base
        ds = (-3.0 * g(np.array([s])) + 4.0 * g(np.array([s + hs])) - g(np.array([s + 2 * hs]))) / (2 * hs)
    rows.append(ds)
    return np.stack(rows)


def gram_volume(vectors, metric):
    G = vectors @ metric @ vectors.T
    return math.sqrt(max(np.linalg.det(G), 0.0))


@dataclass
class DecayReport:
    s: np.ndarray
    ratio: np.ndarray
    bound: np.ndarray
    orth_ratio: np.ndarray
    speed_error: float
    skipped: int

    @property
    def max_excess(self):
        """Largest ``ratio / bound``; at most 1 + 5e-2 when the decay holds."""
        return float(np.max(self.ratio / self.bound)) if self.ratio.size else 0.0

    @property
    def ok(self):
        return self.max_excess <= 1.05 and (self.orth_ratio.size == 0 or self.orth_ratio.max() <= 1.05)


def cone_jacobian_decay_check(chart, samples, rank_tol=1e-6):
    """Pointwise ``|Jac C(x, s)| <= e^{-(n-1)s} |Jac phi(x)|`` at ``(x, s)`` samples.

    The frame ``v_i`` is chosen by QR so that ``dphi(v_i)`` is orthonormal;
    ``orth_ratio`` is ``|pi dC(v_i)| / e^{-s}`` with ``pi`` the projection
    orthogonal to the cone direction.
    """
    if chart.reparam != "unit":
        raise ValueError("the decay check uses the unit-speed chart")
    n = chart.n
    ss, ratios, bounds, orth, speed = [], [], [], [], 0.0
    skipped = 0
    for x, s in samples:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        base = np.asarray(chart.base(x), dtype=float)
        Db = base_differential(chart, x)
        gb = chart.space.metric(base)
        jphi = gram_volume(Db, gb)
        scale = math.sqrt(float(np.prod(np.einsum("ki,ij,kj->k", Db, gb, Db))))
        Dc = cone_differential(chart, x, s)
        z = cone_map(chart, x, s)
        gz = chart.space.metric(z)
        jcone = gram_volume(Dc, gz)
        T = Dc[-1]
        tnorm = math.sqrt(T @ gz @ T)
        speed = max(speed, abs(tnorm - 1.0))
        if jphi <= rank_tol * scale:
            skipped += 1
            continue
        ss.append(s)
        ratios.append(jcone / jphi)
        bounds.append(math.exp(-(n - 1) * s))
        # frame with dphi(v_i) orthonormal: L^T L = Gram, v = e L^{-1}
        L = np.linalg.cholesky(Db @ gb @ Db.T).T
        Linv = np.linalg.inv(L)
        V = Linv.T @ Dc[:-1]
        u = T / tnorm
        for v in V:
            perp = v - (v @ gz @ u) * u
            orth.append(math.sqrt(max(perp @ gz @ perp, 0.0)) / math.exp(-s))
    return DecayReport(np.array(ss), np.array(ratios), np.array(bounds), np.array(orth), speed, skipped)


def degenerate_jacobian(chart, x, s):
    """``|Jac C|`` at a point where ``dphi`` may be rank deficient (no frame needed)."""
    Dc = cone_differential(chart, np.atleast_1d(x), s)
    return gram_volume(Dc, chart.space.metric(cone_map(chart, np.atleast_1d(x), s)))


def _mesh(lower, upper, cells):
    """Cell midpoints and cell measure of a regular parameter mesh."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    cells = np.broadcast_to(np.atleast_1d(cells), lower.shape)
    axes = [lower[k] + (np.arange(cells[k]) + 0.5) * (upper[k] - lower[k]) / cells[k] for k in range(lower.size)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lower.size)
    return pts, float(np.prod((upper - lower) / cells))


def cone_integral_inequality(chart, lower, upper, cells=16, s_nodes=24, s_max=S_MAX):
    """``(lhs, rhs)`` with ``lhs = int_U int_0^inf |Jac C|`` and ``rhs = int_U |Jac phi|``.

    The claimed inequality is ``lhs <= rhs / (n - 1)``.  ``s`` is integrated
    by Gauss-Legendre on ``[0, s_max]`` (tail below ``e^{-(n-1) s_max}``).
    """
    if chart.reparam != "unit":
        raise ValueError("the integral check uses the unit-speed chart")
    pts, cell = _mesh(lower, upper, cells)
    t, w = leggauss(s_nodes)
    s = 0.5 * s_max * (t + 1.0)
    w = 0.5 * s_max * w
    lhs = rhs = 0.0
    for x in pts:
        base = np.asarray(chart.base(x), dtype=float)
        rhs += cell * gram_volume(base_differential(chart, x), chart.space.metric(base))
        inner = 0.0
        for sk, wk in zip(s, w):
            Dc = cone_differential(chart, x, sk)
            inner += wk * gram_volume(Dc, chart.space.metric(cone_map(chart, x, sk)))
        lhs += cell * inner
    return lhs, rhs


@dataclass
class DownstairsReport:
    lhs: float
    rhs: float
    equivariance_error: float

    @property
    def bound(self):
        return self.rhs


def downstairs_cone_check(model, base, cells=8, s_nodes=24, shift=None):
    """Cone a torus map into the cusp toward the cusp point.

    ``base(u)`` maps ``u in [0, 1)^{n-1}`` (lattice coordinates) to cusp
    coordinates ``(y, t)`` and must satisfy ``base(u + k) = base(u) + (L k, 0)``.
    Returns ``lhs``, ``rhs = (1/(n-1)) int |Jac phi|`` and the largest
    discrepancy between the cones of ``base`` and of a lattice translate,
    compared in the quotient.
    """
    n = model.n
    chart = ConeChart(base, np.eye(n)[-1], space=CuspSpace(model))
    lower, upper = np.zeros(n - 1), np.ones(n - 1)
    lhs, rhs = cone_integral_inequality(chart, lower, upper, cells=cells, s_nodes=s_nodes)
    k = np.ones(n - 1, dtype=float) if shift is None else np.asarray(shift, dtype=float)
    moved = ConeChart(lambda u: np.asarray(base(u)) + np.r_[model.lattice @ k, 0.0], chart.theta,
                      space=chart.space)
    pts, _ = _mesh(lower, upper, cells)
    err = 0.0
    for x in pts:
        for s in (0.0, 0.7, 2.0):
            a = cone_map(chart, x, s)
            b = cone_map(moved, x, s)
            dy = model.reduce(a[:-1]) - model.reduce(b[:-1])
            dy = dy - np.round(np.linalg.solve(model.lattice, dy)) @ model.lattice.T
            err = max(err, float(np.max(np.abs(dy))), abs(a[-1] - b[-1]))
    return DownstairsReport(lhs, rhs / (n - 1), err)

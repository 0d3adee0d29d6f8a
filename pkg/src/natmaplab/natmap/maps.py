"""The maps ``Phi_0``, ``Phi^b_c`` into the unit sphere of ``L^2`` and the natural maps.

``Psi^b_c(p, theta)^2 = int e^{-c d_b(p, y)} P(y, theta)^h dvol_b(y)`` is
estimated with one shared cloud of polar samples per configuration: radii
from the law ``e^{-cr} sinh^{n-1} r`` on ``[0, R]`` and, for the reference
node ``e_1``, directions from the visual measure seen from ``tanh(r/2) e_1``
(the Poisson kernel is symmetric, ``P(t w, theta) = P(t theta, w)``).  Node
``theta_i`` reuses the cloud through a Householder reflection.  The
importance weight left over is ``exp(-c (d_b(p, y) - r))``, bounded by
``e^{c d(o, p)}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .. import hypcore
from ..barycenter import solve_barycenter
from ..bmeasure import BoundaryFunction
from ..errors import InsufficientRadii, NearBoundary, StencilOutOfDomain, TailNotConverged
from .backends import ExactBackend, closed_form_ball_volume, sphere_area

FD_STEP = 1e-3
TAIL_TOL = 1e-4
TAIL_TARGET = 1e-6


@dataclass(frozen=True)
class NaturalMapConfig:
    c: float
    h: float | None = None
    mc_count: int = 200_000
    seed: int = 0
    r_trunc: float | None = None
    chunk: int = 16384

    def resolve(self, n):
        h = float(n - 1) if self.h is None else float(self.h)
        if not self.c > h:
            raise ValueError(f"need c > h, got c={self.c}, h={h}")
        if self.mc_count < 1:
            raise ValueError("mc_count must be positive")
        R = math.log(1.0 / TAIL_TARGET) / (self.c - h) if self.r_trunc is None else float(self.r_trunc)
        return h, R


@dataclass(frozen=True, eq=False)
class PulledBackTensor:
    base: np.ndarray
    matrix: np.ndarray

    def is_psd(self, tol=1e-10):
        return bool(np.linalg.eigvalsh(self.matrix)[0] >= -tol)


# ---------------------------------------------------------------------------
# Phi_0

def phi0(p, grid, h=None):
    """``theta -> exp(-(h/2) B_theta(p))`` on the grid nodes."""
    p = np.asarray(p, dtype=float)
    h = grid.n - 1 if h is None else h
    return BoundaryFunction(grid, np.exp(-0.5 * h * hypcore.busemann(grid.nodes, p)))


def dphi0(p, grid, v, h=None):
    """Analytic differential ``dPhi_0(v) = -(h/2) dB(v) Phi_0``; ``v`` of shape (n,) or (k, n)."""
    p = np.asarray(p, dtype=float)
    h = grid.n - 1 if h is None else h
    e = hypcore.busemann_dx(grid.nodes, p)
    base = np.exp(-0.5 * h * hypcore.busemann(grid.nodes, p))
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return BoundaryFunction(grid, -0.5 * h * (e @ v) * base)
    return [BoundaryFunction(grid, -0.5 * h * (e @ vi) * base) for vi in v]


def visual_nodes(p, grid):
    """Grid pushed to the visual measure from ``p`` by ``theta -> p (+) theta``.

    ``sum_k w_k f(xi_k)`` approximates ``int f(theta) P(p, theta)^{n-1} dtheta``.
    """
    p = np.asarray(p, dtype=float)
    xi = hypcore.mobius_add(p, grid.nodes)
    return xi / np.linalg.norm(xi, axis=1, keepdims=True)


def g_phi0(p, grid=None, h=None, adapted=True):
    """``g_{Phi_0}(e_i, e_j) = <dPhi_0(e_i), dPhi_0(e_j)>`` in chart coordinates.

    With ``adapted`` the pairing integrates over the grid pushed to the
    visual measure from ``p``; otherwise on the fixed grid.
    """
    from ..bmeasure import make_grid

    p = np.asarray(p, dtype=float)
    hypcore._guard(p)
    n = p.size
    grid = make_grid(n) if grid is None else grid
    h = n - 1 if h is None else h
    if adapted:
        xi = visual_nodes(p, grid)
        e = hypcore.busemann_dx(xi, p)
        dens = hypcore.poisson_kernel(p, xi) ** (h - (n - 1))
        w = grid.weights * dens
    else:
        e = hypcore.busemann_dx(grid.nodes, p)
        w = grid.weights * np.exp(-h * hypcore.busemann(grid.nodes, p))
    G = 0.25 * h * h * (e * w[:, None]).T @ e
    return PulledBackTensor(p, 0.5 * (G + G.T))


# ---------------------------------------------------------------------------
# Phi^b_c by Monte Carlo

@dataclass(frozen=True, eq=False)
class SampleCloud:
    radii: np.ndarray
    omega_ref: np.ndarray
    norm: float
    tail: float
    r_trunc: float


def _radial_log_density(n, c, r):
    return -c * r + (n - 1) * np.log(np.maximum(-np.expm1(-2.0 * r), 1e-300)) + (n - 1) * (r - math.log(2.0))


@lru_cache(maxsize=16)
def sample_cloud(n, c, mc_count, seed, r_trunc):
    """Shared polar cloud for ``(n, c, mc_count, seed, R)``; Philox keyed by ``seed``."""
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = (np.arange(mc_count) + rng.random(mc_count)) / mc_count
    dirs = rng.standard_normal((mc_count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    r = np.linspace(0.0, r_trunc, 1 << 15)
    logd = _radial_log_density(n, c, r)
    dens = np.exp(logd - logd.max())
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(r))])
    radii = np.interp(u, cdf / cdf[-1], r)

    t = np.tanh(radii / 2.0)
    a = np.zeros((mc_count, n))
    a[:, 0] = t
    omega = hypcore.mobius_add(a, dirs)
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)

    f = lambda s: math.exp(-c * s) * math.sinh(s) ** (n - 1)
    body, _ = integrate.quad(f, 0.0, r_trunc, limit=400, epsabs=0.0, epsrel=1e-12)
    g = lambda s: math.exp(_radial_log_density(n, c, s))
    tail, _ = integrate.quad(g, r_trunc, np.inf, limit=400)
    area = sphere_area(n)
    radii.setflags(write=False)
    omega.setflags(write=False)
    return SampleCloud(radii, omega, area * body, area * tail, r_trunc)


def psi_c(backend, cfg, p, grid, check_tail=True):
    """Unnormalized ``Psi^b_c(p, .)`` on the grid nodes (Monte-Carlo estimate)."""
    p = np.asarray(p, dtype=float)
    n = backend.n
    h, R = cfg.resolve(n)
    cloud = sample_cloud(n, float(cfg.c), int(cfg.mc_count), int(cfg.seed), float(R))
    acc = np.zeros(grid.size)
    N = cloud.radii.size
    for lo in range(0, N, cfg.chunk):
        hi = min(lo + cfg.chunk, N)
        r = cloud.radii[lo:hi]
        om = cloud.omega_ref[lo:hi]
        acc += backend.kernel_sum(p, grid.nodes, r, om, cfg.c)
    psi2 = cloud.norm * acc / N
    if check_tail:
        _check_tail(backend, cfg, p, cloud, psi2, grid)
    if not np.all(psi2 > 0) or not np.all(np.isfinite(psi2)):
        raise TailNotConverged("Monte-Carlo estimate is not strictly positive and finite")
    return BoundaryFunction(grid, np.sqrt(psi2))


def _check_tail(backend, cfg, p, cloud, psi2, grid):
    # d_b(p, y) - r decreases in r to a limit >= B_omega(p) (bumps only lengthen
    # curves), and tail directions concentrate on theta, so the integrand past R
    # is at most exp(-c B_theta(p)) per unit radial mass.
    limit = np.exp(-cfg.c * hypcore.busemann(grid.nodes, p))
    ratio = float(np.max(cloud.tail * limit / psi2))
    if ratio > TAIL_TOL:
        raise TailNotConverged(f"tail bound {ratio:.2e} of the estimate exceeds {TAIL_TOL:g}")
    return ratio


def phi_c(backend, cfg, p, grid):
    psi = psi_c(backend, cfg, p, grid)
    return psi / psi.norm()


def natural_map_Fc(backend, cfg, p, grid, **kw):
    """``F_c(p) = bar(Phi^b_c(p))``."""
    return solve_barycenter(phi_c(backend, cfg, p, grid), **kw).point


# ---------------------------------------------------------------------------
# finite differences

def richardson(f, p, direction, step=FD_STEP):
    """Central difference with one Richardson level: ``(8 D_h - D_2h) / 12h``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(direction, dtype=float)
    f1, g1 = f(p + step * v), f(p - step * v)
    f2, g2 = f(p + 2 * step * v), f(p - 2 * step * v)
    return (8.0 * (f1 - g1) - (f2 - g2)) / (12.0 * step)


def _check_stencil(p, step):
    p = np.asarray(p, dtype=float)
    if np.linalg.norm(p) + 2 * step >= 1.0 - hypcore.BOUNDARY_GUARD:
        raise StencilOutOfDomain("finite-difference stencil leaves the ball")


def _values(phi):
    return phi.values


def dphi_fd(phi_map, p, directions, step=FD_STEP):
    """``(k, m)`` finite-difference differentials of a map ``p -> BoundaryFunction``."""
    _check_stencil(p, step)
    return np.stack([richardson(lambda x: phi_map(x).values, p, v, step) for v in np.atleast_2d(directions)])


def pulled_back_tensor(phi_map, p, grid, step=FD_STEP):
    """``g_Phi`` in chart coordinates from finite-difference differentials."""
    n = np.asarray(p).size
    D = dphi_fd(phi_map, p, np.eye(n), step)
    G = (D * grid.weights) @ D.T
    return PulledBackTensor(np.asarray(p, dtype=float), 0.5 * (G + G.T))


def rayleigh_quotients(tensor, metric, vectors):
    V = np.atleast_2d(vectors)
    num = np.einsum("ki,ij,kj->k", V, tensor.matrix, V)
    den = np.einsum("ki,ij,kj->k", V, metric, V)
    return num / den


def jacobian_from_tensor(tensor, metric):
    """Gram-determinant Jacobian ``sqrt(det g_Phi / det b)``."""
    det = np.linalg.det(tensor.matrix) / np.linalg.det(metric)
    return math.sqrt(max(det, 0.0))


def derivative_Fc(backend, cfg, p, grid, step=FD_STEP):
    """Chart derivative matrix ``DF_c(p)`` (columns = images of chart axes)."""
    p = np.asarray(p, dtype=float)
    _check_stencil(p, step)
    n = p.size
    F = lambda x: natural_map_Fc(backend, cfg, x, grid)
    cols = [richardson(F, p, np.eye(n)[k], step) for k in range(n)]
    return np.stack(cols, axis=1)


def jacobian_Fc(backend, cfg, p, grid, step=FD_STEP, signed=False):
    """``|Jac F_c(p)|`` measured with ``b`` on the domain and ``g_0`` on the target."""
    p = np.asarray(p, dtype=float)
    D = derivative_Fc(backend, cfg, p, grid, step)
    q = natural_map_Fc(backend, cfg, p, grid)
    lam_q = hypcore.conformal_factor(q)
    jac = np.linalg.det(D) * lam_q ** p.size / math.sqrt(np.linalg.det(backend.metric(p)))
    return float(jac if signed else abs(jac))


# ---------------------------------------------------------------------------
# entropy

def entropy_estimate(backend, radii, basepoint=None, **kw):
    """Least-squares slope of ``log Vol(B(x, R))`` over the upper half of ``radii``."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 3:
        raise InsufficientRadii("need at least three radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise InsufficientRadii("radii must be positive and strictly increasing")
    x = np.zeros(backend.n) if basepoint is None else np.asarray(basepoint, dtype=float)
    window = radii[radii.size // 2:] if radii.size >= 6 else radii
    vols = np.array([backend.ball_volume(x, R, **kw) for R in window])
    slope = np.polyfit(window, np.log(vols), 1)[0]
    return float(slope)


def entropy_oracle(n, radii):
    """Same slope fit applied to the closed-form sinh-integral volumes."""
    radii = np.asarray(radii, dtype=float)
    window = radii[radii.size // 2:] if radii.size >= 6 else radii
    vols = np.array([closed_form_ball_volume(n, R) for R in window])
    return float(np.polyfit(window, np.log(vols), 1)[0])

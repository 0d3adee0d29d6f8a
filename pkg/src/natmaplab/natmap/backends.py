"""Domain geometries ``(M, b)`` for the natural-map constructions.

Every backend lives on the Poincare ball chart.  Sample points ``y`` are
handled in polar form ``(r, omega)`` about the origin, ``r`` the hyperbolic
(``g_0``) radius, and the backends report the *excess* ``d_b(p, y) - r``.
The excess stays bounded by ``d(o, p)`` as ``r -> inf``, which keeps the
Monte-Carlo weights ``exp(-c * excess)`` bounded.
"""
from __future__ import annotations

import math

import numba
import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .. import hypcore
from ..errors import UnsupportedDimension
from .mesh import Mesh, stencil_defect


def sphere_area(n):
    """Area of the unit sphere ``S^{n-1}`` in ``R^n``."""
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def closed_form_ball_volume(n, R):
    """``omega_{n-1} int_0^R sinh^{n-1}`` (hyperbolic ball volume)."""
    val, _ = integrate.quad(lambda t: math.sinh(t) ** (n - 1), 0.0, R, limit=200)
    return sphere_area(n) * val


def polar_excess(rho, cos_a, r):
    """``d(q, y) - r`` for ``|q| = rho`` (hyperbolic), ``y`` at radius ``r`` and angle ``alpha``.

    From ``cosh d = cosh rho cosh r - sinh rho sinh r cos alpha`` solved for
    ``exp(d - r)`` without overflow.
    """
    e2 = np.exp(-2.0 * r)
    A = np.cosh(rho) * (1.0 + e2) - np.sinh(rho) * cos_a * (1.0 - e2)
    return np.log(0.5 * A + np.sqrt(np.maximum(0.25 * A * A - e2, 0.0)))


@numba.njit(cache=True, fastmath=True)
def _polar_kernel_sum(q, omega, r, rho, c, out):
    # fused polar_excess + exp(-c .) + sum over samples, fixed summation order
    m, n = q.shape
    N = omega.shape[0]
    ch = math.cosh(rho)
    sh = math.sinh(rho)
    e2 = np.empty(N)
    a = np.empty(N)
    b = np.empty(N)
    for j in range(N):
        e2[j] = math.exp(-2.0 * r[j])
        a[j] = ch * (1.0 + e2[j])
        b[j] = sh * (1.0 - e2[j])
    for i in range(m):
        s = 0.0
        for j in range(N):
            cos_a = 0.0
            for k in range(n):
                cos_a += q[i, k] * omega[j, k]
            A = a[j] - b[j] * cos_a
            disc = 0.25 * A * A - e2[j]
            if disc < 0.0:
                disc = 0.0
            s += math.exp(-c * math.log(0.5 * A + math.sqrt(disc)))
        out[i] += s


def householders(thetas):
    """Reflection vectors ``v_i`` of the Householder maps sending ``e_1`` to ``theta_i``.

    Returns ``(v, scale)``: ``H x = x - scale * v (v.x)``.
    """
    thetas = np.atleast_2d(thetas)
    v = -thetas.copy()
    v[:, 0] += 1.0
    vv = np.einsum("ij,ij->i", v, v)
    scale = np.where(vv > 1e-28, 2.0 / np.where(vv > 1e-28, vv, 1.0), 0.0)
    return v, scale


def apply_householders(v, scale, x):
    """``H_i x`` for every reflection; ``x`` of shape ``(n,)`` or ``(N, n)``."""
    if x.ndim == 1:
        return x[None, :] - scale[:, None] * v * (v @ x)[:, None]
    return x[None, :, :] - scale[:, None, None] * v[:, None, :] * (x @ v.T).T[:, :, None]


class MetricBackend:
    """Base class; subclasses provide ``distance``, ``excess`` and the chart metric."""

    n: int
    name = "abstract"

    def distance(self, p, q):
        raise NotImplementedError

    def excess(self, p, r, omega):
        raise NotImplementedError

    def excess_rotated(self, p, thetas, r, omega_ref):
        """``(m, N)`` array of excesses at ``y_ij = (r_j, H_i omega_ref_j)``."""
        v, scale = householders(thetas)
        omega = apply_householders(v, scale, omega_ref)
        return self.excess(p, r[None, :], omega)

    def log_density_rotated(self, thetas, r, omega_ref):
        """``log(dvol_b / dvol_0)`` at the rotated samples, or None when identically zero."""
        return None

    def kernel_sum(self, p, thetas, r, omega_ref, c):
        """``sum_j exp(-c excess_ij) (dvol_b/dvol_0)(y_ij)`` for every node ``i``."""
        logw = -c * self.excess_rotated(p, thetas, r, omega_ref)
        dens = self.log_density_rotated(thetas, r, omega_ref)
        if dens is not None:
            logw = logw + dens
        return np.exp(logw).sum(axis=1)

    def metric(self, p):
        return hypcore.metric_tensor(p)

    def max_log_density(self):
        return 0.0

    def sample_volume(self, center, radius, count, seed):
        """Weighted cloud ``(points, weights)`` with ``sum w f ~ int_{B_b(center, radius)} f dvol_b``.

        Radii are stratified under the ``g_0`` shell law on ``[0, radius]``
        and directions drawn uniformly.  Requires ``d_b >= d_0`` about
        ``center`` (true for every backend here since bumps are ``>= 0``).
        """
        center = np.asarray(center, dtype=float)
        n = center.size
        rng = np.random.Generator(np.random.Philox(key=int(seed)))
        u = (np.arange(count) + rng.random(count)) / count
        rr = _shell_inverse_cdf(n, radius, u)
        dirs = rng.standard_normal((count, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts0 = hypcore.point_at_distance(dirs, rr)
        pts = hypcore.mobius_add(center, pts0)
        w = np.full(count, closed_form_ball_volume(n, radius) / count)
        w = w * np.exp(self._log_density_points(pts))
        inside = self.distance(center, pts) <= radius
        return pts, np.where(inside, w, 0.0)

    def _log_density_points(self, pts):
        return np.zeros(len(pts))

    def ball_volume(self, center, radius, count=20000, seed=0):
        _, w = self.sample_volume(center, radius, count, seed)
        return float(math.fsum(w))


def _shell_inverse_cdf(n, R, u, nodes=8193):
    r = np.linspace(0.0, R, nodes)
    logd = (n - 1) * np.log(np.maximum(np.sinh(r), 1e-300))
    d = np.exp(logd - logd.max())
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(r))])
    return np.interp(u, cdf / cdf[-1], r)


class ExactBackend(MetricBackend):
    """``(H^n, g_0)`` itself, with closed-form distances."""

    name = "exact"

    def __init__(self, n):
        self.n = hypcore.check_dimension(n)

    def distance(self, p, q):
        return hypcore.hyp_distance(p, q)

    def excess(self, p, r, omega):
        p = np.asarray(p, dtype=float)
        rho = float(hypcore.distance_from_origin(p))
        if rho == 0.0:
            return np.zeros(np.broadcast_shapes(np.shape(r), np.shape(omega)[:-1]))
        cos_a = omega @ (p / np.linalg.norm(p))
        return polar_excess(rho, cos_a, r)

    def excess_rotated(self, p, thetas, r, omega_ref):
        p = np.asarray(p, dtype=float)
        rho = float(hypcore.distance_from_origin(p))
        if rho == 0.0:
            return np.zeros((len(np.atleast_2d(thetas)), len(r)))
        v, scale = householders(thetas)
        q = apply_householders(v, scale, p / np.linalg.norm(p))
        # d(p, H y) = d(H p, y) since each H is an isometry fixing o
        return polar_excess(rho, q @ omega_ref.T, r[None, :])

    def kernel_sum(self, p, thetas, r, omega_ref, c):
        p = np.asarray(p, dtype=float)
        rho = float(hypcore.distance_from_origin(p))
        thetas = np.atleast_2d(thetas)
        if rho == 0.0:
            return np.full(len(thetas), float(len(r)))
        v, scale = householders(thetas)
        q = apply_householders(v, scale, p / np.linalg.norm(p))
        out = np.zeros(len(thetas))
        _polar_kernel_sum(np.ascontiguousarray(q), np.ascontiguousarray(omega_ref),
                          np.ascontiguousarray(r), rho, float(c), out)
        return out

    def ball_volume(self, center, radius, count=None, seed=None):
        """Exact volume by radial integration of ``lambda^n`` in the ball chart."""
        n = self.n
        top = math.tanh(radius / 2.0)
        val, _ = integrate.quad(lambda s: (2.0 / (1.0 - s * s)) ** n * s ** (n - 1), 0.0, top,
                                limit=400, epsabs=0.0, epsrel=1e-12)
        return sphere_area(n) * val


def bump_profile(s):
    """Smooth bump on ``[0, 1)`` with value 1 at 0 and all derivatives vanishing at 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


class ConformalBallBackend(MetricBackend):
    """``b = e^{2u} g_0`` with a compactly supported bump ``u >= 0``, on a meshed box.

    Distances inside the box ``[-half, half]^n`` come from the mesh; points
    outside reach the box through boundary portals where ``u = 0``.  The
    distance from an off-node point ``p`` is the multilinear interpolation
    over ``p``'s cell corners of the corner-sourced distance fields, which
    keeps ``p -> d_b(p, y)`` continuous for finite differences.
    """

    name = "conformal_bump"

    def __init__(self, n, amplitude=0.5, center=None, width=0.8, half=0.55, shape=None,
                 stencil=None, r_table_max=80.0, table_radii=160, table_angles=1024):
        self.n = hypcore.check_dimension(n)
        if n > 3:
            raise UnsupportedDimension("the mesh backend supports n = 2, 3")
        if half * math.sqrt(n) >= 0.98:
            raise ValueError("box must sit well inside the ball")
        self.amplitude = float(amplitude)
        if self.amplitude < 0:
            raise ValueError("the bump must be nonnegative")
        self.center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
        self.width = float(width)
        self.half = float(half)
        if shape is None:
            shape = (81,) * n if n == 2 else (25,) * n
        if stencil is None:
            stencil = 3
        self.mesh = Mesh(-half * np.ones(n), half * np.ones(n), shape, self._mesh_metric,
                         stencil=stencil)
        # the bump support must clear the box faces
        face_gap = float(hypcore.distance_from_origin(np.r_[half, np.zeros(n - 1)]))
        reach = float(hypcore.distance_from_origin(self.center)) + self.width
        if self.amplitude > 0 and reach >= face_gap:
            raise ValueError("bump support leaks out of the meshed box")
        self.portals = self.mesh.boundary_nodes()
        self.r_inner = 2.0 * math.atanh(half)
        self.r_table_max = float(r_table_max)
        self._table_radii = table_radii
        self._table_angles = table_angles
        self._tables = {}

    @property
    def tau_geo(self):
        """Worst-direction relative overestimate of the mesh distance (flat-stencil certificate)."""
        return stencil_defect(self.n, self.mesh.stencil)

    def u(self, x):
        x = np.asarray(x, dtype=float)
        if self.amplitude == 0.0:
            return np.zeros(x.shape[:-1])
        d = hypcore.hyp_distance(x, self.center)
        return self.amplitude * bump_profile(d / self.width)

    def _mesh_metric(self, x):
        lam = 2.0 / (1.0 - np.einsum("...i,...i->...", x, x))
        f = (np.exp(self.u(x)) * lam) ** 2
        return np.repeat(f[..., None], self.n, axis=-1)

    def metric(self, p):
        p = np.asarray(p, dtype=float)
        return np.exp(2.0 * self.u(p)) * hypcore.metric_tensor(p)

    def max_log_density(self):
        return self.n * self.amplitude

    def _log_density_points(self, pts):
        return self.n * self.u(pts)

    def _corner_fields(self, p):
        p = np.asarray(p, dtype=float)
        if not self.mesh.inside(p)[0]:
            raise ValueError("base point must lie inside the meshed box")
        c, w = self.mesh.cell_weights(p)
        return c[0], w[0]

    def _portal_excess(self, field, rr, omega):
        """``min_z field[z] + d_0(z, y) - r`` over portal nodes ``z``."""
        z = self.mesh.nodes[self.portals]
        rho = hypcore.distance_from_origin(z)
        zh = z / np.linalg.norm(z, axis=1, keepdims=True)
        best = np.full(np.broadcast_shapes(rr.shape, omega.shape[:-1]), np.inf)
        base = field[self.portals]
        for k in range(len(z)):
            cand = base[k] + polar_excess(rho[k], omega @ zh[k], rr)
            np.minimum(best, cand, out=best)
        return best

    def _table(self, node):
        """Outside-box excess on an ``(r, angle)`` lattice for the field sourced at ``node`` (n = 2)."""
        if node in self._tables:
            return self._tables[node]
        field = self.mesh.distances_from_nodes([node])
        s = np.linspace(0.0, 1.0, self._table_radii)
        radii = self.r_inner + (self.r_table_max - self.r_inner) * s ** 2
        ang = 2.0 * np.pi * np.arange(self._table_angles) / self._table_angles
        omega = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        tab = self._portal_excess(field, radii[:, None], omega[None, :, :])
        self._tables[node] = (radii, tab)
        return self._tables[node]

    def _outside_from_table(self, node, r, omega):
        radii, tab = self._table(node)
        m = self._table_angles
        a = np.mod(np.arctan2(omega[..., 1], omega[..., 0]), 2.0 * np.pi) * m / (2.0 * np.pi)
        i0 = np.floor(a).astype(int) % m
        fa = a - np.floor(a)
        i1 = (i0 + 1) % m
        rc = np.clip(r, radii[0], radii[-1])
        j = np.clip(np.searchsorted(radii, rc) - 1, 0, len(radii) - 2)
        fr = (rc - radii[j]) / (radii[j + 1] - radii[j])
        v0 = (1 - fa) * tab[j, i0] + fa * tab[j, i1]
        v1 = (1 - fa) * tab[j + 1, i0] + fa * tab[j + 1, i1]
        return (1 - fr) * v0 + fr * v1

    def excess(self, p, r, omega):
        r = np.asarray(r, dtype=float)
        omega = np.asarray(omega, dtype=float)
        shape = np.broadcast_shapes(r.shape, omega.shape[:-1])
        r = np.broadcast_to(r, shape)
        omega = np.broadcast_to(omega, shape + (self.n,))
        y = hypcore.point_at_distance(omega, np.minimum(r, 30.0))
        inside = self.mesh.inside(y.reshape(-1, self.n)).reshape(shape)
        corners, weights = self._corner_fields(p)
        out = np.zeros(shape)
        for node, w in zip(corners, weights):
            if w == 0.0:
                continue
            val = np.empty(shape)
            if inside.any():
                field = self.mesh.distances_from_nodes([node])
                val[inside] = self.mesh.interpolate(field, y[inside]) - r[inside]
            out_mask = ~inside
            if out_mask.any():
                if self.n == 2:
                    val[out_mask] = self._outside_from_table(node, r[out_mask], omega[out_mask])
                else:
                    field = self.mesh.distances_from_nodes([node])
                    val[out_mask] = self._portal_excess(field, r[out_mask], omega[out_mask])
            out += w * val
        return out

    def log_density_rotated(self, thetas, r, omega_ref):
        if self.amplitude == 0.0:
            return None
        v, scale = householders(thetas)
        omega = apply_householders(v, scale, omega_ref)
        near = r < self.r_inner
        out = np.zeros(omega.shape[:-1])
        if near.any():
            y = hypcore.point_at_distance(omega[:, near, :], r[near][None, :])
            out[:, near] = self.n * self.u(y)
        return out

    def distance(self, p, q):
        q = np.asarray(q, dtype=float)
        single = q.ndim == 1
        q = np.atleast_2d(q)
        rq = hypcore.distance_from_origin(q)
        nq = np.linalg.norm(q, axis=1, keepdims=True)
        omega = np.where(nq > 0, q / np.where(nq > 0, nq, 1.0), np.eye(self.n)[0])
        out = self.excess(p, rq, omega) + rq
        return out[0] if single else out

    def exact_distance(self, p, q):
        return hypcore.hyp_distance(p, q)


class CuspGridBackend:
    """Meshed cusp ``T^{n-1} x [0, T]`` with metric ``e^{-2t}|dy|^2 + dt^2``.

    The proper function is the distance to the base slice ``t = 0``, which the
    mesh reproduces exactly along vertical edges.
    """

    name = "cusp_grid"

    def __init__(self, model, height=6.0, shape=None, stencil=1):
        self.model = model
        self.n = model.n
        L = model.lattice
        if not np.allclose(L, np.diag(np.diag(L))):
            raise UnsupportedDimension("the cusp mesh needs an axis-aligned lattice")
        periods = np.diag(L)
        if shape is None:
            shape = (48, 121) if self.n == 2 else (24, 24, 61)
        lower = np.zeros(self.n)
        upper = np.r_[periods, height]
        self.height = float(height)
        self.mesh = Mesh(lower, upper, shape, self._metric, periodic=tuple(range(self.n - 1)),
                         stencil=stencil)

    def _metric(self, x):
        return self.model.metric(x[..., :-1], x[..., -1])

    def base_distance(self):
        idx = self.mesh.node_index_grid()
        base = np.flatnonzero(idx[:, -1] == 0)
        return self.mesh.distances_from_nodes(base)

    def distance(self, p, q):
        """Mesh distance between chart points (multilinear in both ends)."""
        cp, wp = self.mesh.cell_weights(p)
        out = 0.0
        for node, w in zip(cp[0], wp[0]):
            out = out + w * self.mesh.interpolate(self.mesh.distances_from_nodes([node]), q)
        return out

    def to_ball(self, x):
        x = np.asarray(x, dtype=float)
        return hypcore.cusp_to_ball(x[..., :-1], x[..., -1])

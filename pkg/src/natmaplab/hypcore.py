"""Closed-form geometry of the Poincare ball model of real hyperbolic space.

Points are numpy arrays in ball coordinates.  Every function broadcasts over
leading axes, so ``busemann(thetas, x)`` with ``thetas`` of shape ``(m, n)``
returns ``m`` values.  The metric is ``lambda(x)^2 |dx|^2`` with
``lambda(x) = 2 / (1 - |x|^2)``; sectional curvature is -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import special_ortho_group

from .errors import NearBoundary, UnsupportedDimension

#: ops refuse points with |x| >= 1 - BOUNDARY_GUARD
BOUNDARY_GUARD = 1e-9
#: construction of BallPoint refuses |x| >= 1 - CONSTRUCTION_GUARD
CONSTRUCTION_GUARD = 1e-12


def check_dimension(n):
    n = int(n)
    if n < 2:
        raise UnsupportedDimension(f"dimension must be >= 2, got {n}")
    return n


def _guard(x):
    x = np.asarray(x, dtype=float)
    r2 = np.einsum("...i,...i->...", x, x)
    if np.any(r2 >= (1.0 - BOUNDARY_GUARD) ** 2):
        raise NearBoundary(f"point within {BOUNDARY_GUARD:g} of the ideal boundary")
    return x, r2


@dataclass(frozen=True, eq=False)
class BallPoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1:
            raise ValueError("BallPoint needs a 1-d coordinate vector")
        check_dimension(c.size)
        if np.linalg.norm(c) >= 1.0 - CONSTRUCTION_GUARD:
            raise NearBoundary("BallPoint must lie strictly inside the unit ball")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    @property
    def n(self):
        return self.coords.size


@dataclass(frozen=True, eq=False)
class IdealPoint:
    dir: np.ndarray

    def __post_init__(self):
        d = np.array(self.dir, dtype=float)
        norm = np.linalg.norm(d)
        if d.ndim != 1 or norm == 0.0:
            raise ValueError("IdealPoint needs a nonzero 1-d direction")
        d = d / norm
        d.setflags(write=False)
        object.__setattr__(self, "dir", d)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.dir, dtype=dtype)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Chart-coordinate vector ``vec`` based at ``base``."""

    base: np.ndarray
    vec: np.ndarray

    def hyperbolic_norm(self):
        return hyperbolic_norm(self.base, self.vec)


def conformal_factor(x):
    _, r2 = _guard(x)
    return 2.0 / (1.0 - r2)


def hyperbolic_norm(x, v):
    return conformal_factor(x) * np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


def metric_tensor(x):
    """Ball-model metric at ``x`` as an ``(n, n)`` matrix."""
    x = np.asarray(x, dtype=float)
    return conformal_factor(x) ** 2 * np.eye(x.shape[-1])


def hyp_distance(p, q):
    p, rp = _guard(p)
    q, rq = _guard(q)
    diff = np.linalg.norm(p - q, axis=-1)
    return 2.0 * np.arcsinh(diff / np.sqrt((1.0 - rp) * (1.0 - rq)))


def distance_from_origin(x):
    _, r2 = _guard(x)
    return 2.0 * np.arctanh(np.sqrt(r2))


def point_at_distance(direction, r):
    """Ball point at hyperbolic distance ``r`` from the origin along ``direction``."""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction, axis=-1, keepdims=True)
    return np.tanh(np.asarray(r, dtype=float) / 2.0)[..., None] * direction


def busemann(theta, x):
    """``B_theta(x) = log(|x - theta|^2 / (1 - |x|^2))``, zero at the origin."""
    theta = np.asarray(theta, dtype=float)
    x, r2 = _guard(x)
    d2 = np.einsum("...i,...i->...", x - theta, x - theta)
    return np.log(d2) - np.log1p(-r2)


def busemann_dx(theta, x):
    """Chart gradient (covector components) of ``B_theta`` at ``x``."""
    theta = np.asarray(theta, dtype=float)
    x, r2 = _guard(x)
    u = x - theta
    d2 = np.einsum("...i,...i->...", u, u)
    return 2.0 * u / d2[..., None] + 2.0 * x / (1.0 - r2)[..., None]


def busemann_grad(theta, x):
    """Riemannian gradient of ``B_theta`` at a single point, as a TangentVector."""
    x = np.asarray(x, dtype=float)
    lam = conformal_factor(x)
    return TangentVector(x, busemann_dx(theta, x) / lam**2)


def busemann_hess(theta, x):
    """Riemannian Hessian ``g - dB (x) dB`` as a chart matrix.

    Broadcasts over ``theta``: shape ``(..., n, n)``.
    """
    x = np.asarray(x, dtype=float)
    e = busemann_dx(theta, x)
    lam2 = conformal_factor(x) ** 2
    n = x.shape[-1]
    return lam2 * np.eye(n) - e[..., :, None] * e[..., None, :]


def poisson_kernel(x, theta):
    theta = np.asarray(theta, dtype=float)
    x, r2 = _guard(x)
    d2 = np.einsum("...i,...i->...", x - theta, x - theta)
    return (1.0 - r2) / d2


def mobius_add(a, b):
    """Mobius addition ``a (+) b``; ``b -> a (+) b`` is an isometry taking 0 to a.

    ``b`` may lie on the unit sphere, in which case so does the result.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = np.einsum("...i,...i->...", a, b)[..., None]
    aa = np.einsum("...i,...i->...", a, a)[..., None]
    bb = np.einsum("...i,...i->...", b, b)[..., None]
    num = (1.0 + 2.0 * ab + bb) * a + (1.0 - aa) * b
    den = 1.0 + 2.0 * ab + aa * bb
    return num / den


def exp_map(x, v):
    """Riemannian exponential at ``x`` of the chart vector ``v``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    lam = conformal_factor(x)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(nv > 0, nv, 1.0)
    step = np.tanh(lam[..., None] * nv / 2.0) * v / safe
    return mobius_add(x, step)


def geodesic_toward(x, theta, s):
    """Point at distance ``s`` from ``x`` on the geodesic ray from ``x`` to ``theta``."""
    x, _ = _guard(x)
    theta = np.asarray(theta, dtype=float)
    s = np.asarray(s, dtype=float)
    direction = mobius_add(-x, theta)
    direction = direction / np.linalg.norm(direction, axis=-1, keepdims=True)
    return mobius_add(x, np.tanh(s / 2.0)[..., None] * direction)


def geodesic_velocity_toward(x, theta):
    """Unit chart velocity at ``x`` of the geodesic heading to ``theta`` (= -grad B)."""
    x = np.asarray(x, dtype=float)
    lam = conformal_factor(x)
    return -busemann_dx(theta, x) / lam[..., None] ** 2


def _as_factor(rotation, translation, n):
    R = np.eye(n) if rotation is None else np.array(rotation, dtype=float)
    a = np.zeros(n) if translation is None else np.array(translation, dtype=float)
    R.setflags(write=False)
    a.setflags(write=False)
    return R, a


@dataclass(frozen=True, eq=False)
class MobiusIsometry:
    """Orientation-preserving isometry stored as lazily composed factors.

    Each factor ``(R, a)`` is the map ``x -> a (+) R x``; the factors are
    applied right to left, so ``factors[0]`` is applied last.
    """

    n: int
    factors: tuple = field(default_factory=tuple)

    @classmethod
    def identity(cls, n):
        return cls(check_dimension(n), ())

    @classmethod
    def from_parts(cls, rotation=None, translation=None, n=None):
        if n is None:
            src = rotation if rotation is not None else translation
            n = np.shape(src)[-1]
        n = check_dimension(n)
        R, a = _as_factor(rotation, translation, n)
        if not np.allclose(R @ R.T, np.eye(n), atol=1e-10) or np.linalg.det(R) < 0:
            raise ValueError("rotation part must be orthogonal with det +1")
        if np.linalg.norm(a) >= 1.0 - CONSTRUCTION_GUARD:
            raise NearBoundary("translation part must be an interior point")
        return cls(n, ((R, a),))

    @classmethod
    def translation(cls, a):
        return cls.from_parts(None, a)

    @classmethod
    def rotation(cls, R):
        return cls.from_parts(R, None)

    @classmethod
    def random(cls, n, rng, max_radius=0.6, rotate=True):
        n = check_dimension(n)
        R = special_ortho_group.rvs(n, random_state=rng) if rotate else np.eye(n)
        d = rng.standard_normal(n)
        a = d / np.linalg.norm(d) * max_radius * rng.uniform() ** (1.0 / n)
        return cls.from_parts(R, a)

    def __matmul__(self, other):
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return MobiusIsometry(self.n, self.factors + other.factors)

    def inverse(self):
        inv = []
        for R, a in reversed(self.factors):
            inv.append(_as_factor(R.T, None, self.n))
            inv.append(_as_factor(None, -a, self.n))
        return MobiusIsometry(self.n, tuple(inv))

    def apply(self, x):
        """Act on interior points or ideal points (unit vectors), batched."""
        y = np.asarray(x, dtype=float)
        for R, a in reversed(self.factors):
            y = y @ R.T
            if np.any(a):
                y = mobius_add(a, y)
        return y

    def origin_image(self):
        return self.apply(np.zeros(self.n))

    def rotation_only(self):
        return all(not np.any(a) for _, a in self.factors)

    def to_list(self):
        return [{"rotation": R.tolist(), "translation": a.tolist()} for R, a in self.factors]

    @classmethod
    def from_list(cls, data, n):
        out = cls.identity(n)
        for item in data:
            out = out @ cls.from_parts(item.get("rotation"), item.get("translation"), n=n)
        return out


def apply_isometry(gamma, x):
    return gamma.apply(x)


# ---------------------------------------------------------------------------
# cusp model

def cusp_to_ball(y, t):
    """Map cusp coordinates ``(y, t)`` (upper half-space height ``e^t``) into the ball.

    The cusp point goes to the north pole ``e_n`` and ``(0, 0)`` to the origin,
    so ``t = -B_{e_n}(x)`` along the slice.
    """
    y = np.asarray(y, dtype=float)
    s = np.exp(np.asarray(t, dtype=float))
    yy = np.einsum("...i,...i->...", y, y)
    den = yy + (s + 1.0) ** 2
    top = (yy + s * s - 1.0) / den
    return np.concatenate([2.0 * y / den[..., None], top[..., None]], axis=-1)


def ball_to_cusp(x):
    x, r2 = _guard(x)
    xp = x[..., :-1]
    den = np.einsum("...i,...i->...", xp, xp) + (1.0 - x[..., -1]) ** 2
    return 2.0 * xp / den[..., None], np.log((1.0 - r2) / den)


@dataclass(frozen=True, eq=False)
class CuspModel:
    """Cusp ``(R^{n-1} / lattice) x [0, inf)`` with metric ``dt^2 + e^{-2t} |dy|^2``.

    ``lattice`` holds the torus basis vectors as columns.
    """

    n: int
    lattice: np.ndarray

    def __post_init__(self):
        check_dimension(self.n)
        L = np.array(self.lattice, dtype=float).reshape(self.n - 1, self.n - 1)
        if abs(np.linalg.det(L)) == 0.0:
            raise ValueError("degenerate lattice")
        L.setflags(write=False)
        object.__setattr__(self, "lattice", L)

    @classmethod
    def unit(cls, n):
        return cls(n, np.eye(n - 1))

    @property
    def base_volume(self):
        return abs(float(np.linalg.det(self.lattice)))

    def metric(self, y, t):
        """Diagonal metric coefficients, shape ``(..., n)``; the last entry is ``dt^2``."""
        t = np.asarray(t, dtype=float)
        horo = np.exp(-2.0 * t)[..., None] * np.ones(self.n - 1)
        return np.concatenate([horo, np.ones(t.shape + (1,))], axis=-1)

    def reduce(self, y):
        """Representative of ``y`` in the fundamental parallelepiped."""
        y = np.asarray(y, dtype=float)
        coeff = np.linalg.solve(self.lattice, y.T if y.ndim > 1 else y)
        coeff = coeff - np.floor(coeff)
        out = self.lattice @ coeff
        return out.T if y.ndim > 1 else out


def cusp_slice_volume(model, t):
    if np.any(np.asarray(t) < 0):
        raise ValueError("slice height must be >= 0")
    return np.exp(-(model.n - 1) * np.asarray(t, dtype=float)) * model.base_volume


def cusp_shift(model, r, y, t):
    if r < 0:
        raise ValueError("shift must be >= 0")
    return np.asarray(y, dtype=float), np.asarray(t, dtype=float) + r

"""Quadrature on the sphere at infinity and functions sampled on it.

The visual measure at the origin is the normalized round measure on the unit
sphere, so a grid is a set of unit vectors with positive weights summing to
one.  A :class:`BoundaryFunction` is a vector of nodal values on a grid;
``L^2`` pairings are weighted sums.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import roots_gegenbauer

from . import hypcore
from .errors import GridMismatch, UnsupportedDimension, ZeroFunction

SCHEMES = ("circle_uniform", "fibonacci_sphere", "product_gauss")
DEFAULT_RESOLUTION = {2: ("circle_uniform", 512), 3: ("product_gauss", 72), 4: ("product_gauss", 26)}
#: exactness tolerance on degree-2 spherical polynomials at default resolution
TAU_GRID = 1e-6
#: interpolation tolerance for the isometry action
TAU_ACT = 1e-3


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str = "custom"
    resolution: int = 0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 2 or weights.shape != (nodes.shape[0],):
            raise ValueError("nodes must be (m, n) and weights (m,)")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        weights = weights / math.fsum(weights)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return self.nodes.shape[0]

    @cached_property
    def tree(self):
        return cKDTree(self.nodes)

    def integrate(self, values):
        return np.asarray(values, dtype=float) @ self.weights

    def constant(self, value=1.0):
        return BoundaryFunction(self, np.full(self.size, float(value)))

    def function(self, f):
        """Sample a callable ``f(nodes) -> values`` on the grid."""
        return BoundaryFunction(self, np.asarray(f(self.nodes), dtype=float))


def _circle(m):
    ang = 2.0 * np.pi * np.arange(m) / m
    return np.stack([np.cos(ang), np.sin(ang)], axis=1), np.full(m, 1.0 / m)


def _fibonacci(m):
    i = np.arange(m) + 0.5
    z = 1.0 - 2.0 * i / m
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(m)
    rho = np.sqrt(1.0 - z * z)
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1), np.full(m, 1.0 / m)


def _product_gauss(n, resolution):
    nodes, weights = _circle(resolution)
    for k in range(3, n + 1):
        t, wt = roots_gegenbauer(max(resolution // 2, 2), (k - 2) / 2.0)
        wt = wt / wt.sum()
        rho = np.sqrt(1.0 - t * t)
        nodes = np.concatenate(
            [(rho[:, None, None] * nodes[None, :, :]),
             np.broadcast_to(t[:, None, None], (t.size, nodes.shape[0], 1))],
            axis=2,
        ).reshape(-1, k)
        weights = (wt[:, None] * weights[None, :]).ravel()
    return nodes, weights


def make_grid(n, scheme=None, resolution=None):
    """Build a quadrature grid for the normalized measure on ``S^{n-1}``.

    ``resolution`` is the node count for ``circle_uniform`` and
    ``fibonacci_sphere``, and the number of azimuthal nodes for
    ``product_gauss`` (each polar factor gets ``resolution // 2`` nodes).
    """
    n = hypcore.check_dimension(n)
    if scheme is None:
        scheme, default_res = DEFAULT_RESOLUTION.get(n, ("product_gauss", 16))
        resolution = default_res if resolution is None else resolution
    if resolution is None or int(resolution) < 8:
        raise ValueError("resolution must be >= 8")
    resolution = int(resolution)
    if scheme == "circle_uniform":
        if n != 2:
            raise UnsupportedDimension("circle_uniform is only defined for n = 2")
        nodes, weights = _circle(resolution)
    elif scheme == "fibonacci_sphere":
        if n != 3:
            raise UnsupportedDimension("fibonacci_sphere is only defined for n = 3")
        nodes, weights = _fibonacci(resolution)
    elif scheme == "product_gauss":
        nodes, weights = _product_gauss(n, resolution) if n > 2 else _circle(resolution)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return QuadratureGrid(nodes, weights, scheme, resolution)


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise GridMismatch(f"expected {self.grid.size} values, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _other(self, other):
        if isinstance(other, BoundaryFunction):
            if other.grid is not self.grid:
                raise GridMismatch("boundary functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return BoundaryFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return BoundaryFunction(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return BoundaryFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return BoundaryFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return BoundaryFunction(self.grid, -self.values)

    def norm(self):
        return math.sqrt(max(l2_inner(self, self), 0.0))

    def is_positive(self):
        return bool(np.all(self.values > 0))

    def on_unit_sphere(self, tol=1e-10):
        return self.is_positive() and abs(self.norm() - 1.0) <= tol


def l2_inner(phi, psi):
    if phi.grid is not psi.grid:
        raise GridMismatch("boundary functions live on different grids")
    return float(np.dot(phi.grid.weights * phi.values, psi.values))


def gram_matrix(funcs):
    """Matrix of pairwise ``L^2`` inner products."""
    grid = funcs[0].grid
    for f in funcs:
        if f.grid is not grid:
            raise GridMismatch("boundary functions live on different grids")
    V = np.stack([f.values for f in funcs])
    return (V * grid.weights) @ V.T


def visual_density(x, grid):
    """Density of the visual measure at ``x`` with respect to the one at the origin."""
    return BoundaryFunction(grid, hypcore.poisson_kernel(x, grid.nodes) ** (grid.n - 1))


def interpolate(phi, points, k=4):
    """Inverse-distance interpolation of nodal values at arbitrary unit vectors."""
    points = np.asarray(points, dtype=float)
    k = min(k, phi.grid.size)
    dist, idx = phi.grid.tree.query(points, k=k)
    dist = np.atleast_2d(dist)
    idx = np.atleast_2d(idx)
    vals = phi.values[idx]
    exact = dist[:, 0] < 1e-12
    w = 1.0 / np.maximum(dist, 1e-300) ** 2
    out = (w * vals).sum(axis=1) / w.sum(axis=1)
    out[exact] = vals[exact, 0]
    return out


def isom_action(gamma, phi, h=None):
    """``(gamma . phi)(theta) = phi(gamma^{-1} theta) exp(-h B_theta(gamma o) / 2)``.

    Pulled-back nodes are evaluated by 4-neighbour inverse-distance
    interpolation, so the result carries an O(grid spacing) error unless
    ``gamma`` permutes the nodes.
    """
    grid = phi.grid
    if gamma.n != grid.n:
        raise GridMismatch("isometry and grid dimensions differ")
    h = grid.n - 1 if h is None else float(h)
    pulled = gamma.inverse().apply(grid.nodes)
    pulled /= np.linalg.norm(pulled, axis=1, keepdims=True)
    vals = interpolate(phi, pulled)
    o_img = gamma.origin_image()
    factor = np.exp(-0.5 * h * hypcore.busemann(grid.nodes, o_img))
    return BoundaryFunction(grid, vals * factor)


def isom_action_exact(gamma, f, grid, h=None):
    """Isometry action on a function given as a callable of unit vectors."""
    h = grid.n - 1 if h is None else float(h)
    pulled = gamma.inverse().apply(grid.nodes)
    pulled /= np.linalg.norm(pulled, axis=1, keepdims=True)
    factor = np.exp(-0.5 * h * hypcore.busemann(grid.nodes, gamma.origin_image()))
    return BoundaryFunction(grid, np.asarray(f(pulled)) * factor)


def radial_project(phi):
    nrm = phi.norm()
    if not nrm > 0.0:
        raise ZeroFunction("cannot project the zero function")
    return phi / nrm


def dump_csv(path, phi, extra=None):
    """Write one row per node: coordinates, weight, value, and optional extra columns."""
    grid = phi.grid
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(grid.n)] + ["weight", "value"] + list(extra))
        cols = [np.asarray(v) for v in extra.values()]
        for i in range(grid.size):
            w.writerow([repr(float(c)) for c in grid.nodes[i]]
                       + [repr(float(grid.weights[i])), repr(float(phi.values[i]))]
                       + [repr(float(c[i])) for c in cols])

"""Proper 1-Lipschitz functions and their small level sets on meshed backends."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import NoLevelsFound
from .backends import CuspGridBackend
from .mesh import Mesh


@dataclass(eq=False)
class ScalarField:
    """``delta`` as a callable on chart points, plus nodal values when meshed."""

    func: callable
    nodal: np.ndarray | None = None
    level_range: tuple | None = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def proper_lipschitz_function(backend, basepoint=None):
    """Distance to a basepoint (or, on the cusp mesh, to the base slice ``t = 0``)."""
    if isinstance(backend, CuspGridBackend):
        field = backend.base_distance()
        return ScalarField(lambda x: backend.mesh.interpolate(field, np.atleast_2d(x)), field,
                           (0.0, backend.height))
    x0 = np.zeros(backend.n) if basepoint is None else np.asarray(basepoint, dtype=float)
    mesh = getattr(backend, "mesh", None)
    if mesh is None:
        return ScalarField(lambda x: backend.distance(x0, x))
    nodal = backend.distance(x0, mesh.nodes)
    edge = nodal[mesh.boundary_nodes()].min()
    return ScalarField(lambda x: backend.distance(x0, x), nodal, (float(nodal.min()), float(edge)))


def lipschitz_violations(backend, delta, points_a, points_b, slack=0.0):
    """Count pairs with ``|delta(a) - delta(b)| > d_b(a, b) (1 + slack)``."""
    da, db = np.atleast_1d(delta(points_a)), np.atleast_1d(delta(points_b))
    d = np.array([float(np.atleast_1d(backend.distance(a, b))[0]) for a, b in zip(points_a, points_b)])
    gap = np.abs(da - db) - d * (1.0 + slack)
    return int(np.sum(gap > 1e-12)), float(np.max(gap))


@dataclass
class Slice:
    level: float
    area: float
    mesh_error: float
    levelset: object


def _coarse(mesh, field):
    """The same field on every other node, or None when the mesh does not halve."""
    sl, shape = [], []
    for k, s in enumerate(mesh.shape):
        if mesh.periodic[k]:
            if s % 2:
                return None
            shape.append(s // 2)
        else:
            if (s - 1) % 2:
                return None
            shape.append((s - 1) // 2 + 1)
        sl.append(slice(None, None, 2))
    coarse = Mesh(mesh.lower, mesh.upper, shape, mesh.metric,
                  periodic=tuple(np.flatnonzero(mesh.periodic)), stencil=mesh.stencil)
    return coarse, np.asarray(field).reshape(mesh.shape)[tuple(sl)].ravel()


def level_ladder(delta, count=40):
    lo, hi = delta.level_range
    # irrational offset keeps levels off the node values
    frac = (np.arange(count) + 0.5 + (math.sqrt(2) - 1.0) * 0.1) / count
    return lo + (hi - lo) * frac


def slice_areas(backend, delta, levels):
    mesh = backend.mesh
    coarse = _coarse(mesh, delta.nodal)
    out = []
    for lev in levels:
        try:
            ls = mesh.level_set(delta.nodal, lev)
        except NoLevelsFound:
            continue
        err = float("nan")
        if coarse is not None:
            try:
                err = abs(ls.volume - coarse[0].level_set(coarse[1], lev).volume)
            except NoLevelsFound:
                pass
        out.append(Slice(float(lev), ls.volume, err, ls))
    return out


def find_small_slices(backend, delta, count, levels=None):
    """Levels whose discrete slice area is below the running median, in increasing ``t``.

    If no level qualifies (areas growing), the ``count`` smallest slices are
    returned instead.
    """
    if delta.nodal is None:
        raise NoLevelsFound("level sets need a meshed backend")
    levels = level_ladder(delta) if levels is None else np.sort(np.asarray(levels, dtype=float))
    slices = slice_areas(backend, delta, levels)
    if not slices:
        raise NoLevelsFound("no level set could be extracted")
    areas = np.array([s.area for s in slices])
    keep = [i for i in range(1, len(slices)) if areas[i] < np.median(areas[: i + 1])]
    if not keep:
        keep = sorted(np.argsort(areas, kind="stable")[:count])
        return [slices[i] for i in keep]
    if len(keep) > count:
        pick = np.unique(np.round(np.linspace(0, len(keep) - 1, count)).astype(int))
        keep = [keep[i] for i in pick]
    return [slices[i] for i in keep]


def coarea_check(backend, delta, levels=None):
    """``(int area(delta = t) dt, Vol{lo <= delta <= hi})`` over the level ladder.

    Node volumes are weighted by a linear ramp of one mesh layer at each end
    so the region volume has no staircase error.
    """
    levels = level_ladder(delta) if levels is None else np.asarray(levels, dtype=float)
    slices = slice_areas(backend, delta, levels)
    t = np.array([s.level for s in slices])
    a = np.array([s.area for s in slices])
    lhs = float(np.sum(0.5 * (a[1:] + a[:-1]) * np.diff(t)))
    lo, hi = t[0], t[-1]
    mesh = backend.mesh
    layer = float(np.max(mesh.spacing * np.sqrt(np.min(mesh.metric(mesh.nodes), axis=0))))
    d = np.asarray(delta.nodal)
    w = np.clip((hi - d) / layer + 0.5, 0, 1) * np.clip((d - lo) / layer + 0.5, 0, 1)
    rhs = float(np.sum(mesh.node_volumes() * w))
    return lhs, rhs

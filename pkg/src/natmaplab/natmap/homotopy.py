"""Straight-line homotopies between maps into the positive unit sphere of ``L^2``.

``H(x, t) = (1 - t) Theta(x) + t Upsilon(x)``.  Positivity keeps it away from
the origin, ``||H||^2 >= (1 - t)^2 + t^2 >= 1/2``, and bounds both the time
derivative ``||Upsilon - Theta||^2 <= 2`` and the space derivative by
``||dTheta||^2 + ||dUpsilon||^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import hypcore
from ..bmeasure import BoundaryFunction
from ..calib import comass_bound
from .maps import FD_STEP, natural_map_Fc, phi0, phi_c, richardson


@dataclass
class HomotopyReport:
    samples: int
    max_time_sq: float
    max_space_ratio: float
    min_norm: float
    min_value: float
    unit_error: float

    @property
    def ok(self):
        return (self.max_time_sq <= 2.0 + 1e-9 and self.max_space_ratio <= 1.0 + 1e-6
                and self.min_norm >= 0.5 and self.min_value > 0.0)


def _l2(grid, v):
    return float(np.dot(grid.weights * v, v))


def homotopy_stretch_bounds(theta_map, upsilon_map, samples, grid, step=FD_STEP):
    """Check the homotopy bounds at sampled ``(x, t, v)``.

    Differentials come from Richardson finite differences of ``Theta`` and
    ``Upsilon`` along the chart axes (shared by all samples at the same
    ``x``); ``dH`` and ``dH/dt`` are finite differences of ``H`` itself,
    which is affine in ``t``.
    """
    by_x = {}
    for x, t, v in samples:
        key = tuple(np.asarray(x, dtype=float))
        by_x.setdefault(key, []).append((float(t), np.asarray(v, dtype=float)))
    max_time = max_ratio = unit_err = 0.0
    min_norm = min_val = math.inf
    count = 0
    for key, items in by_x.items():
        x = np.array(key)
        n = x.size
        th, up = theta_map(x).values, upsilon_map(x).values
        unit_err = max(unit_err, abs(_l2(grid, th) - 1.0), abs(_l2(grid, up) - 1.0))
        min_val = min(min_val, float(th.min()), float(up.min()))
        dth = np.stack([richardson(lambda y: theta_map(y).values, x, e, step) for e in np.eye(n)])
        dup = np.stack([richardson(lambda y: upsilon_map(y).values, x, e, step) for e in np.eye(n)])
        for t, v in items:
            H = lambda s: (1.0 - s) * th + s * up
            dt = richardson(lambda s: H(float(s[0])), np.array([t]), np.ones(1), step)
            a, b = v @ dth, v @ dup
            dh = (1.0 - t) * a + t * b
            max_time = max(max_time, _l2(grid, dt))
            bound = _l2(grid, a) + _l2(grid, b)
            if bound > 0:
                max_ratio = max(max_ratio, _l2(grid, dh) / bound)
            min_norm = min(min_norm, math.sqrt(_l2(grid, H(t))))
            count += 1
    return HomotopyReport(count, max_time, max_ratio, min_norm, min_val, unit_err)


def stokes_lipschitz_bound(c, h):
    return math.sqrt((c * c + h * h) / 4.0 + 2.0)


@dataclass
class StokesReport:
    level: float
    area: float
    lipschitz: float
    lipschitz_bound: float
    comass: float
    error_estimate: float

    @property
    def ok(self):
        return self.lipschitz <= self.lipschitz_bound * (1 + 5e-2)


def stokes_error_experiment(backend, cfg, slice_, grid, model, samples=12, taus=(0.0, 0.5, 1.0),
                            shift=0.0, seed=0, step=FD_STEP):
    """Lipschitz constant of ``H`` on ``L x [0, 1]`` and the resulting error estimate.

    ``slice_`` is a cusp slice (cells in cusp coordinates ``(y, t)``);
    ``Theta = Phi^b_c`` and ``Upsilon = Phi_0 o f`` with ``f`` the cusp shift
    by ``shift``, both evaluated after lifting to the ball.  The Lipschitz
    constant is the largest singular value of ``[dH(w_1), ..., dH(w_{n-1}),
    dH/dtau]`` over samples, ``w_k`` orthonormal tangents of the slice.  The
    error estimate is ``2^n comass * Lip^n * area``.
    """
    n = backend.n
    h, _ = cfg.resolve(n)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    cells = slice_.levelset.cells
    pick = rng.choice(len(cells), size=min(samples, len(cells)), replace=False)
    sw = np.sqrt(grid.weights)

    def lift(z):
        return hypcore.cusp_to_ball(z[:-1], z[-1])

    def theta(z):
        return phi_c(backend, cfg, lift(z), grid).values

    def upsilon(z):
        f = phi0(lift(np.r_[z[:-1], z[-1] + shift]), grid)
        return (f / f.norm()).values

    lip = 0.0
    for i in np.sort(pick):
        z = cells[i].mean(axis=0)
        E = cells[i][1:] - cells[i][:1]
        G = np.diag(model.metric(z[:-1], z[-1]))
        # orthonormal tangent frame of the slice in the cusp metric
        L = np.linalg.cholesky(E @ G @ E.T)
        W = np.linalg.solve(L, E)
        dth = np.stack([richardson(theta, z, w, step) for w in W])
        dup = np.stack([richardson(upsilon, z, w, step) for w in W])
        th, up = theta(z), upsilon(z)
        for tau in taus:
            cols = np.vstack([(1.0 - tau) * dth + tau * dup, (up - th)[None, :]])
            s = np.linalg.svd(cols * sw, compute_uv=False)
            lip = max(lip, float(s[0]))
    comass = 2.0 ** n * comass_bound(n, h)
    return StokesReport(slice_.level, slice_.area, lip, stokes_lipschitz_bound(cfg.c, h), comass,
                        comass * lip ** n * slice_.area)

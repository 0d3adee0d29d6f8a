"""Barycenter of a positive boundary function.

``bar(phi)`` is the critical point of ``x -> sum_i w_i B_{theta_i}(x)`` with
``w_i`` proportional to ``quadrature weight * phi_i^2``.  The objective is
geodesically convex with Riemannian Hessian ``sum_i w_i (g - dB_i (x) dB_i)``,
so damped Riemannian Newton converges from any interior start.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hypcore
from .bmeasure import BoundaryFunction
from .errors import MaxIterExceeded, NearBoundary, SingularHessian

TOL_BAR = 1e-9
DEGENERACY_RATIO = 1e-8


@dataclass(frozen=True, eq=False)
class BarycenterProblem:
    phi: BoundaryFunction
    weights: np.ndarray

    @classmethod
    def from_function(cls, phi):
        vals = phi.values
        if not np.all(vals > 0):
            raise ValueError("barycenter needs a strictly positive function")
        w = phi.grid.weights * vals * vals
        return cls(phi, w / w.sum())

    @property
    def nodes(self):
        return self.phi.grid.nodes


@dataclass(frozen=True)
class BarycenterSolution:
    point: np.ndarray
    residual: float
    iterations: int


def _as_problem(prob):
    return prob if isinstance(prob, BarycenterProblem) else BarycenterProblem.from_function(prob)


def bary_objective(x, prob):
    prob = _as_problem(prob)
    return float(prob.weights @ hypcore.busemann(prob.nodes, x))


def bary_gradient(x, prob):
    """Chart covector ``sum_i w_i dB_i(x)`` (normalized weights)."""
    prob = _as_problem(prob)
    return prob.weights @ hypcore.busemann_dx(prob.nodes, x)


def residual_at(x, prob):
    """Hyperbolic norm of the barycenter gradient field at ``x``."""
    return float(np.linalg.norm(bary_gradient(x, prob)) / hypcore.conformal_factor(x))


def riemannian_hessian(x, prob, e=None):
    prob = _as_problem(prob)
    if e is None:
        e = hypcore.busemann_dx(prob.nodes, x)
    lam2 = hypcore.conformal_factor(x) ** 2
    return lam2 * prob.weights.sum() * np.eye(e.shape[1]) - (e * prob.weights[:, None]).T @ e


def _check_degenerate(H, lam2):
    ev = np.linalg.eigvalsh(H / lam2)
    if ev[0] < DEGENERACY_RATIO * ev[-1]:
        raise SingularHessian(f"barycenter Hessian nearly singular (eigs {ev[0]:.3e}, {ev[-1]:.3e})")


def solve_barycenter(prob, tol_bar=TOL_BAR, max_iter=100, x0=None):
    prob = _as_problem(prob)
    nodes, w = prob.nodes, prob.weights
    if x0 is None:
        x = 0.5 * (w @ nodes)
    else:
        x = np.array(x0, dtype=float)
    f = float(w @ hypcore.busemann(nodes, x))
    for it in range(max_iter + 1):
        e = hypcore.busemann_dx(nodes, x)
        G = w @ e
        lam = hypcore.conformal_factor(x)
        res = float(np.linalg.norm(G) / lam)
        if res <= tol_bar:
            return BarycenterSolution(x, res, it)
        if it == max_iter:
            break
        H = lam * lam * np.eye(x.size) - (e * w[:, None]).T @ e
        _check_degenerate(H, lam * lam)
        step = -np.linalg.solve(H, G)
        slope = float(G @ step)
        t = 1.0
        for _ in range(60):
            try:
                cand = hypcore.exp_map(x, t * step)
                f_new = float(w @ hypcore.busemann(nodes, cand))
            except NearBoundary:
                t *= 0.5
                continue
            if f_new <= f + 1e-4 * t * slope:
                break
            # objective differences drown in rounding near the optimum
            if res < 1e-5 and residual_at(cand, prob) < res:
                break
            t *= 0.5
        else:
            raise NearBoundary("line search failed; mass escaping to the boundary?")
        x, f = cand, f_new
    raise MaxIterExceeded(f"no convergence in {max_iter} Newton steps (residual {res:.3e})")


def bar(phi, **kw):
    """Barycenter point of a positive boundary function."""
    return solve_barycenter(phi, **kw).point


def bar_scale_invariance_check(phi, c, tol=1e-8):
    if c <= 0:
        raise ValueError("scale must be positive")
    a = solve_barycenter(phi).point
    b = solve_barycenter(phi * c).point
    return bool(hypcore.hyp_distance(a, b) <= tol)


def dbar(phi, direction, solution=None):
    """Derivative of ``bar`` at ``phi`` along one or several boundary-function directions.

    Implicit differentiation of ``sum a_i phi_i^2 dB_i(bar) = 0``.  Returns a
    TangentVector for a single direction, otherwise a ``(k, n)`` array of
    chart vectors.
    """
    single = isinstance(direction, BoundaryFunction)
    dirs = [direction] if single else list(direction)
    if solution is None:
        solution = solve_barycenter(phi)
    x = solution.point
    grid = phi.grid
    e = hypcore.busemann_dx(grid.nodes, x)
    a_phi2 = grid.weights * phi.values ** 2
    lam2 = hypcore.conformal_factor(x) ** 2
    H = lam2 * a_phi2.sum() * np.eye(x.size) - (e * a_phi2[:, None]).T @ e
    _check_degenerate(H, lam2)
    D = np.stack([d.values for d in dirs])
    rhs = (D * (2.0 * grid.weights * phi.values)) @ e
    out = -np.linalg.solve(H, rhs.T).T
    if single:
        return hypcore.TangentVector(x, out[0])
    return out

"""The barycentric volume form ``Omega = bar^* dvol_{g_0}`` on positive ``L^2`` functions.

``Omega_phi(psi_1, ..., psi_n) = lambda(x)^n det[dbar_phi(psi_1) ... dbar_phi(psi_n)]``
with ``x = bar(phi)``.  Since ``dbar_phi`` is a linear map ``L^2 -> R^n``, the
supremum of ``|Omega_phi|`` over orthonormal frames in a subspace is the
product of the top ``n`` singular values of ``lambda(x) dbar_phi`` on it,
which gives the pointwise comass exactly (up to quadrature).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hypcore
from .barycenter import dbar, solve_barycenter, _check_degenerate
from .bmeasure import BoundaryFunction, gram_matrix
from .errors import DegenerateFrame


def comass_bound(n, h=None):
    """``(4n / h^2)^{n/2}``, the comass of ``Omega`` on the unit sphere."""
    h = n - 1 if h is None else h
    return (4.0 * n / (h * h)) ** (n / 2.0)


@dataclass(frozen=True, eq=False)
class FormEvaluation:
    phi: BoundaryFunction
    frame: tuple
    value: float


def eval_omega(phi, frame, solution=None):
    frame = tuple(frame)
    n = phi.grid.n
    if len(frame) != n:
        raise ValueError(f"need {n} frame vectors, got {len(frame)}")
    if solution is None:
        solution = solve_barycenter(phi)
    V = dbar(phi, list(frame), solution=solution)
    lam = hypcore.conformal_factor(solution.point)
    return FormEvaluation(phi, frame, float(lam ** n * np.linalg.det(V)))


def dbar_matrix(phi, solution=None):
    """``(n, m)`` matrix ``M`` with ``dbar_phi(psi) = M @ psi.values``."""
    grid = phi.grid
    if solution is None:
        solution = solve_barycenter(phi)
    x = solution.point
    e = hypcore.busemann_dx(grid.nodes, x)
    a_phi2 = grid.weights * phi.values ** 2
    lam2 = hypcore.conformal_factor(x) ** 2
    H = lam2 * a_phi2.sum() * np.eye(grid.n) - (e * a_phi2[:, None]).T @ e
    _check_degenerate(H, lam2)
    return -np.linalg.solve(H, (e * (2.0 * grid.weights * phi.values)[:, None]).T), solution


def pointwise_comass(phi, tangent=True, return_frame=False):
    """Exact ``sup |Omega_phi|`` over ``L^2``-orthonormal frames.

    With ``tangent`` the frames are restricted to ``phi^perp`` (tangent to the
    sphere through ``phi``).  Optionally returns a maximizing frame.
    """
    grid = phi.grid
    M, sol = dbar_matrix(phi)
    lam = hypcore.conformal_factor(sol.point)
    sw = np.sqrt(grid.weights)
    A = lam * M / sw  # acts on Euclidean coordinates z = sqrt(w) psi
    if tangent:
        u = sw * phi.values
        u /= np.linalg.norm(u)
        A = A - np.outer(A @ u, u)
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    val = float(np.prod(s[: grid.n]))
    if not return_frame:
        return val
    frame = [BoundaryFunction(grid, Vt[i] / sw) for i in range(grid.n)]
    # orient so the form is positive
    if eval_omega(phi, frame, sol).value < 0:
        frame[0] = -frame[0]
    return val, frame


# ---------------------------------------------------------------------------
# sampling

def smooth_random_function(grid, rng, terms=6, scale=1.0):
    """Random smooth function ``sum a_k exp(kappa_k (theta . u_k - 1))``."""
    u = rng.standard_normal((terms, grid.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    kappa = rng.uniform(0.5, 4.0, terms)
    a = rng.standard_normal(terms) * scale
    return BoundaryFunction(grid, np.exp(kappa[None, :] * (grid.nodes @ u.T - 1.0)) @ a)


def random_positive(grid, rng, norm=1.0):
    f = smooth_random_function(grid, rng, scale=0.8)
    phi = BoundaryFunction(grid, np.exp(f.values))
    return phi * (norm / phi.norm())


def gram_schmidt(vectors, against=()):
    """``L^2``-orthonormalize ``vectors`` after removing components along ``against``."""
    basis = [a / a.norm() for a in against]
    out = []
    for v in vectors:
        w = v
        for b in basis + out:
            w = w - b * _inner(w, b)
        for b in basis + out:  # second pass for stability
            w = w - b * _inner(w, b)
        nrm = w.norm()
        if nrm < 1e-10:
            raise DegenerateFrame("frame vectors are linearly dependent")
        out.append(w / nrm)
    return out


def _inner(a, b):
    return float(np.dot(a.grid.weights * a.values, b.values))


def random_tangent_frame(phi, rng, tangent=True):
    n = phi.grid.n
    raw = [smooth_random_function(phi.grid, rng) for _ in range(n)]
    return gram_schmidt(raw, against=(phi,) if tangent else ())


def sphere_sampler(grid, seed, phi0_fraction=0.2, max_radius=0.7):
    """Endless stream of ``(phi, frame)`` with ``phi`` positive of unit norm.

    A fraction of draws sit at ``Phi_0(p)`` for random ``p`` with random
    tangent frames; the rest at random smooth positive functions.
    """
    from .natmap.maps import phi0

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    while True:
        if rng.random() < phi0_fraction:
            p = rng.standard_normal(grid.n)
            p *= rng.uniform(0, max_radius) / np.linalg.norm(p)
            phi = phi0(p, grid)
            phi = phi / phi.norm()
        else:
            phi = random_positive(grid, rng)
        yield phi, random_tangent_frame(phi, rng)


@dataclass
class ComassReport:
    trials: int
    max_value: float
    max_exact: float
    bound: float
    values: np.ndarray
    norms: np.ndarray

    @property
    def ok(self):
        return max(self.max_value, self.max_exact) <= self.bound * (1 + 1e-2)


def comass_estimate(sampler, trials, exact=False, h=None):
    """Running maximum of ``|Omega|`` over ``trials`` sampled ``(phi, frame)`` pairs.

    With ``exact`` each ``phi`` also contributes its pointwise comass over
    tangent frames (the frame maximizer), a sharper probe of the bound.
    """
    values, norms = np.empty(trials), np.empty(trials)
    best_exact = 0.0
    n = None
    for k in range(trials):
        phi, frame = next(sampler)
        n = phi.grid.n
        sol = solve_barycenter(phi)
        values[k] = abs(eval_omega(phi, frame, sol).value)
        norms[k] = phi.norm()
        if exact:
            best_exact = max(best_exact, pointwise_comass(phi))
    return ComassReport(trials, float(values.max()), best_exact, comass_bound(n, h), values, norms)


def bounded_comass_check(grid, trials, seed=0, norm_range=(0.5, 10.0), h=None, exact=True):
    """Comass samples off the unit sphere, ``||phi|| in norm_range``, on all of ``L^2``.

    The bound is ``2^n`` times the unit-sphere comass.
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    n = grid.n
    vals, norms = np.empty(trials), np.empty(trials)
    best_exact = 0.0
    for k in range(trials):
        s = rng.uniform(*norm_range)
        phi = random_positive(grid, rng, norm=s)
        frame = random_tangent_frame(phi, rng, tangent=False)
        vals[k] = abs(eval_omega(phi, frame).value)
        norms[k] = s
        if exact:
            best_exact = max(best_exact, pointwise_comass(phi, tangent=False))
    bound = 2.0 ** n * comass_bound(n, h)
    return ComassReport(trials, float(vals.max()), best_exact, bound, vals, norms)


# ---------------------------------------------------------------------------
# calibration of the immersion Phi_0

def calibration_sides(theta_map, dtheta, p, h=None):
    """``(lhs, rhs)`` of the calibration identity for an immersion ``Theta`` at ``p``.

    ``dtheta(p, vs)`` returns the differentials of ``Theta`` along the chart
    vectors ``vs``.  The domain frame is ``e_i / lambda(p)`` (orthonormal).
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    vs = np.eye(n) / hypcore.conformal_factor(p)
    image = dtheta(p, vs)
    lhs = eval_omega(theta_map(p), image).value
    G = gram_matrix(image)
    rhs = comass_bound(n, h) * math.sqrt(max(np.linalg.det(G), 0.0))
    return lhs, rhs


def calibration_identity_check(p, grid, tolerance=2e-2, squeeze=None):
    """Does ``Theta`` satisfy ``Omega(dTheta v_1, ..., dTheta v_n) = comass * Gram^{1/2}``?

    ``Theta = Phi_0`` by default.  With ``squeeze`` (a positive diagonal),
    ``Theta(p) = normalize(Phi_0(p) o S)`` where ``S`` squeezes the sphere at
    infinity, ``S(theta) = normalize(squeeze * theta)``: a non-isometric
    reparametrization that should break the identity.
    """
    lhs, rhs = calibration_values(p, grid, squeeze)
    return bool(abs(lhs - rhs) <= tolerance * abs(rhs))


def calibration_values(p, grid, squeeze=None):
    from .natmap.maps import dphi0, dphi_fd, phi0

    if squeeze is None:
        return calibration_sides(lambda x: phi0(x, grid), lambda x, vs: dphi0(x, grid, vs), p)
    S = np.asarray(squeeze, dtype=float)
    pulled = grid.nodes * S
    pulled /= np.linalg.norm(pulled, axis=1, keepdims=True)

    def theta_map(x):
        vals = np.exp(-0.5 * (grid.n - 1) * hypcore.busemann(pulled, x))
        f = BoundaryFunction(grid, vals)
        return f / f.norm()

    def dtheta(x, vs):
        D = dphi_fd(theta_map, x, vs)
        return [BoundaryFunction(grid, d) for d in D]

    return calibration_sides(theta_map, dtheta, p)

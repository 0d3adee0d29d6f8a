"""Named experiments.  Each returns check rows and plot tables for one config."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import barycenter, bmeasure, calib, conelab, hypcore
from .errors import NatMapError
from .natmap import backends as nb
from .natmap import exhaustion, homotopy, maps


@dataclass
class CheckRow:
    name: str
    claim: str
    measured: float
    bound: float
    relation: str  # le, ge, close, rclose
    tolerance: float
    passed: bool = False
    error: str | None = None

    def evaluate(self):
        m, b, tol = self.measured, self.bound, self.tolerance
        if self.error is not None or m is None or not math.isfinite(m):
            self.passed = False
        elif self.relation == "le":
            self.passed = m <= b * (1.0 + tol) if b >= 0 else m <= b + tol
        elif self.relation == "ge":
            self.passed = m >= b * (1.0 - tol)
        elif self.relation == "close":
            self.passed = abs(m - b) <= tol
        elif self.relation == "rclose":
            self.passed = abs(m - b) <= tol * abs(b)
        else:
            raise ValueError(f"unknown relation {self.relation}")
        return self

    def to_dict(self):
        return {
            "name": self.name,
            "claim": self.claim,
            "measured": _num(self.measured),
            "bound": _num(self.bound),
            "relation": self.relation,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
            "error": self.error,
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


@dataclass
class Outcome:
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    def check(self, cfg, name, claim, fn, bound, relation, tolerance):
        """Run ``fn() -> measured``; module errors are recorded on the row."""
        tol = float(cfg.tolerances.get(name, tolerance))
        try:
            measured = float(fn())
            row = CheckRow(name, claim, measured, float(bound), relation, tol)
        except NatMapError as exc:
            row = CheckRow(name, claim, None, float(bound), relation, tol,
                           error=f"{type(exc).__name__}: {exc}")
        self.rows.append(row.evaluate())
        return row

    def table(self, name, header, rows):
        self.tables[name] = (list(header), [list(r) for r in rows])


def _rng(cfg, stream=0):
    return np.random.Generator(np.random.Philox(key=[int(cfg.seed), int(stream)]))


def _ball_points(rng, n, count, max_radius):
    x = rng.standard_normal((count, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * (max_radius * rng.random(count) ** (1.0 / n))[:, None]


def _grid(cfg):
    g = cfg.grid or {}
    return bmeasure.make_grid(cfg.n, g.get("scheme"), g.get("resolution"))


def make_backend(cfg):
    opts = dict(cfg.backend or {"kind": "exact"})
    kind = opts.pop("kind", "exact")
    if kind == "exact":
        return nb.ExactBackend(cfg.n)
    if kind == "conformal_bump":
        if "shape" in opts:
            opts["shape"] = tuple(opts["shape"])
        return nb.ConformalBallBackend(cfg.n, **opts)
    if kind == "cusp_grid":
        model = hypcore.CuspModel(cfg.n, np.asarray(opts.pop("lattice", np.eye(cfg.n - 1))))
        if "shape" in opts:
            opts["shape"] = tuple(opts["shape"])
        return nb.CuspGridBackend(model, **opts)
    raise ValueError(f"unknown backend kind {kind!r}")


def _c_schedule(cfg):
    h = cfg.n - 1
    return list(cfg.c_schedule) if cfg.c_schedule else [h + 1.0, h + 0.5, h + 0.25]


def _samples(cfg, default):
    return int(cfg.samples) if cfg.samples else default


# ---------------------------------------------------------------------------

def exp_g_phi0_identity(cfg):
    """Pull-back of Phi_0 against (h^2/4n) g_0 at random points."""
    out = Outcome()
    n, h = cfg.n, cfg.n - 1
    grid = _grid(cfg)
    pts = _ball_points(_rng(cfg), n, _samples(cfg, 100), 0.9)
    rel, spread, rows = [], [], []
    for p in pts:
        G = maps.g_phi0(p, grid).matrix
        target = (h * h / (4.0 * n)) * hypcore.metric_tensor(p)
        rel.append(np.abs(G - target).max() / np.abs(target).max())
        ev = np.linalg.eigvalsh(G)
        spread.append((ev[-1] - ev[0]) / ev[-1])
        rows.append([*p, rel[-1], spread[-1]])
    out.check(cfg, "g_phi0_relative_error", "pull-back of Phi_0 is (h^2/4n) g_0", lambda: max(rel),
              1e-6, "le", 0.0)
    out.check(cfg, "g_phi0_isotropy", "pull-back of Phi_0 is isotropic", lambda: max(spread), 1e-6, "le", 0.0)
    out.table("g_phi0", [f"x{i}" for i in range(n)] + ["rel_error", "eig_spread"], rows)
    return out


def _phi_c_tensors(cfg, c):
    n = cfg.n
    backend = make_backend(cfg)
    grid = _grid(cfg)
    mc = maps.NaturalMapConfig(c=c, mc_count=cfg.mc_count, seed=cfg.seed)
    pts = _ball_points(_rng(cfg), n, _samples(cfg, 10), 0.6)
    for p in pts:
        T = maps.pulled_back_tensor(lambda x: maps.phi_c(backend, mc, x, grid), p, grid)
        yield p, T, backend.metric(p)


def exp_derivative_bound(cfg):
    """Rayleigh quotients of the Phi_c pull-back against c^2/4."""
    out = Outcome()
    c = _c_schedule(cfg)[1]
    rng = _rng(cfg, 1)
    worst, rows = [0.0], []

    def run():
        for p, T, b in _phi_c_tensors(cfg, c):
            V = rng.standard_normal((20, cfg.n))
            q = maps.rayleigh_quotients(T, b, V)
            worst[0] = max(worst[0], float(q.max()))
            rows.extend([[*p, *v, qq] for v, qq in zip(V, q)])
        return worst[0]

    out.check(cfg, "rayleigh_quotient_max", "|dPhi_c(v)|^2 <= (c^2/4) b(v,v)", run, c * c / 4.0, "le", 1e-2)
    out.table("rayleigh", [f"p{i}" for i in range(cfg.n)] + [f"v{i}" for i in range(cfg.n)] + ["quotient"], rows)
    return out


def exp_jacobian_bound_phi(cfg):
    """Gram-determinant Jacobian of Phi_c against (c^2/4n)^{n/2}."""
    out = Outcome()
    n = cfg.n
    c = _c_schedule(cfg)[1]
    rows = []

    def run():
        for p, T, b in _phi_c_tensors(cfg, c):
            rows.append([*p, maps.jacobian_from_tensor(T, b), float(np.linalg.eigvalsh(T.matrix)[0])])
        return max(r[n] for r in rows)

    bound = (c * c / (4.0 * n)) ** (n / 2.0)
    out.check(cfg, "phi_c_jacobian_max", "|Jac Phi_c| <= (c^2/4n)^{n/2}", run, bound, "le", 5e-2)
    out.check(cfg, "phi_c_tensor_psd", "pull-back tensor is positive semi-definite",
              lambda: min(r[n + 1] for r in rows), -1e-10, "ge", 0.0)
    out.table("jacobian_phi", [f"p{i}" for i in range(n)] + ["jacobian", "min_eig"], rows)
    return out


def exp_comass(cfg):
    """Sampled and exact comass of Omega, on and off the unit sphere."""
    out = Outcome()
    n = cfg.n
    grid = _grid(cfg)
    trials = _samples(cfg, 10000)
    bound = calib.comass_bound(n)
    rep = {}

    def sampled():
        rep["r"] = calib.comass_estimate(calib.sphere_sampler(grid, cfg.seed), trials)
        return rep["r"].max_value

    def exact():
        rng = _rng(cfg, 2)
        best = 0.0
        for _ in range(max(trials // 50, 20)):
            best = max(best, calib.pointwise_comass(calib.random_positive(grid, rng)))
        for p in _ball_points(rng, n, 10, 0.6):
            f = maps.phi0(p, grid)
            best = max(best, calib.pointwise_comass(f / f.norm()))
        return best

    def calibrated():
        f = maps.phi0(np.zeros(n), grid)
        frame = calib.gram_schmidt(maps.dphi0(np.zeros(n), grid, np.eye(n)))
        return abs(calib.eval_omega(f, frame).value)

    def off_sphere():
        rep["b"] = calib.bounded_comass_check(grid, max(trials // 20, 50), seed=cfg.seed)
        return max(rep["b"].max_value, rep["b"].max_exact)

    out.check(cfg, "comass_sampled_max", "comass of Omega on the unit sphere is (4n/h^2)^{n/2}",
              sampled, bound, "le", 1e-2)
    out.check(cfg, "comass_frame_max", "comass of Omega on the unit sphere is (4n/h^2)^{n/2}",
              exact, bound, "le", 1e-2)
    out.check(cfg, "comass_calibrated_frame", "Omega calibrates the immersion Phi_0",
              calibrated, bound, "ge", 5e-2)
    out.check(cfg, "comass_off_sphere", "comass bounded off the L^2 ball of radius 1/2",
              off_sphere, 2.0 ** n * bound, "le", 1e-2)
    if "r" in rep:
        r = rep["r"]
        out.table("comass", ["sample", "norm", "value", "bound"],
                  [[i, r.norms[i], r.values[i], bound] for i in range(r.trials)])
    return out


def exp_calibration(cfg):
    """Phi_0 calibrated by Omega, with a squeezed negative control."""
    out = Outcome()
    n = cfg.n
    grid = _grid(cfg)
    pts = _ball_points(_rng(cfg), n, _samples(cfg, 20), 0.6)
    rows = []

    def run():
        worst = 0.0
        for p in pts:
            lhs, rhs = calib.calibration_values(p, grid)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
            rows.append([*p, lhs, rhs])
        return worst

    def squeezed():
        S = np.ones(n)
        S[-1] = 0.4
        lhs, rhs = calib.calibration_values(np.zeros(n), grid, squeeze=S)
        return abs(lhs - rhs) / abs(rhs)

    out.check(cfg, "calibration_identity", "Omega(dPhi_0 v_1..v_n) = comass * Gram^{1/2}", run, 0.0,
              "close", 2e-2)
    out.check(cfg, "calibration_negative_control", "a squeezed immersion is not calibrated",
              squeezed, 2e-2, "ge", 0.0)
    out.table("calibration", [f"p{i}" for i in range(n)] + ["lhs", "rhs"], rows)
    return out


def exp_barycenter_suite(cfg):
    """Barycenter of constants, scaling, rotations and Phi_0."""
    out = Outcome()
    n = cfg.n
    grid = _grid(cfg)
    rng = _rng(cfg)
    one = grid.constant(1.0)
    sol = {}

    def constant():
        sol["s"] = barycenter.solve_barycenter(one)
        return sol["s"].residual

    out.check(cfg, "bar_constant_residual", "bar of the constant function is the origin", constant,
              1e-9, "le", 0.0)
    out.check(cfg, "bar_constant_point", "bar of the constant function is the origin",
              lambda: hypcore.distance_from_origin(barycenter.bar(one)), 1e-9, "le", 0.0)

    f = calib.random_positive(grid, rng)

    def scale():
        a = barycenter.bar(f)
        return max(hypcore.hyp_distance(a, barycenter.bar(f * c)) for c in (1e-3, 0.37, 7.3, 1e3))

    out.check(cfg, "bar_scale_invariance", "bar(c phi) = bar(phi)", scale, 1e-8, "le", 0.0)

    def rotation():
        u = rng.standard_normal((4, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        func = lambda th: np.exp(1.5 * np.sin(2.0 * th @ u.T).sum(axis=1))
        base = barycenter.bar(grid.function(func))
        worst = 0.0
        for _ in range(3):
            gam = hypcore.MobiusIsometry.random(n, rng, rotate=True, max_radius=0.0)
            R = gam.factors[0][0]
            moved = bmeasure.isom_action_exact(gam, func, grid)
            worst = max(worst, hypcore.hyp_distance(barycenter.bar(moved), R @ base))
        return worst

    out.check(cfg, "bar_rotation_equivariance", "bar is equivariant under rotations", rotation, 1e-6, "le", 0.0)

    rows = []

    def phi0_inverse():
        worst = 0.0
        radii = [0.0, 0.3, 0.6, 0.8]
        for r in radii:
            for _ in range(3):
                d = rng.standard_normal(n)
                p = r * d / np.linalg.norm(d)
                err = float(hypcore.hyp_distance(barycenter.bar(maps.phi0(p, grid)), p))
                rows.append([r, *p, err])
                worst = max(worst, err)
        return worst

    out.check(cfg, "bar_phi0_inverse", "bar(Phi_0(p)) = p", phi0_inverse, 1e-4, "le", 0.0)
    out.table("bar_phi0", ["radius"] + [f"p{i}" for i in range(n)] + ["distance"], rows)
    return out


def exp_natural_map_suite(cfg):
    """Jac F_c <= (c/h)^n along the c-schedule; F_c near the identity."""
    out = Outcome()
    n, h = cfg.n, cfg.n - 1
    backend = make_backend(cfg)
    grid = _grid(cfg)
    sched = _c_schedule(cfg)
    pts = _ball_points(_rng(cfg), n, _samples(cfg, 2), 0.5)
    rows = []
    dist = {}
    exact = isinstance(backend, nb.ExactBackend)
    probe = np.full(n, 0.35 / math.sqrt(n))
    for c in sched:
        mc = maps.NaturalMapConfig(c=c, mc_count=cfg.mc_count, seed=cfg.seed)
        jac = []

        def jacobians():
            for p in pts:
                jac.append(maps.jacobian_Fc(backend, mc, p, grid, signed=True))
                rows.append([c, *p, jac[-1], (c / h) ** n])
            return max(abs(j) for j in jac)

        out.check(cfg, f"jac_Fc_c{c:g}", "Jac F_c <= (c/h)^n", jacobians, (c / h) ** n, "le", 5e-2)
        if exact:
            out.check(cfg, f"jac_Fc_sign_c{c:g}", "F_c preserves orientation",
                      lambda: min(jac) if jac else float("nan"), 0.0, "ge", 0.0)

            def d_fc():
                dist[c] = float(hypcore.hyp_distance(maps.natural_map_Fc(backend, mc, probe, grid), probe))
                return dist[c]

            out.check(cfg, f"Fc_identity_c{c:g}", "F_c tends to the identity as c decreases to h", d_fc,
                      0.0, "close", 2e-2 if c == sched[-1] else 1.0)
            out.check(cfg, f"Fc_origin_c{c:g}", "F_c(o) = o by symmetry",
                      lambda: hypcore.distance_from_origin(maps.natural_map_Fc(backend, mc, np.zeros(n), grid)),
                      0.0, "close", 2e-2)
        else:
            out.check(cfg, f"jac_Fc_l1_c{c:g}", "Jac F_c converges to 1 in L^1",
                      lambda: float(np.mean(np.abs(np.array(jac) - 1.0))), 1.0, "le", 0.0)
    if exact and len(dist) == len(sched):
        ds = [dist[c] for c in sched]
        out.check(cfg, "Fc_identity_monotone", "d(F_c(p), p) decreases along the c-schedule",
                  lambda: float(max(np.diff(ds))), 0.0, "le", 0.0)
    if not exact:
        l1 = [r.measured for r in out.rows if r.name.startswith("jac_Fc_l1_") and r.measured is not None]
        if len(l1) == len(sched):
            out.check(cfg, "jac_Fc_l1_trend", "Jac F_c converges to 1 in L^1",
                      lambda: float(max(np.diff(l1))), 0.0, "le", 0.0)
    out.table("natural_map", ["c"] + [f"p{i}" for i in range(n)] + ["jacobian", "bound"], rows)
    return out


def exp_homotopy_bounds(cfg):
    """Straight-line homotopy stretch bounds between Phi_c and Phi_0 o gamma."""
    out = Outcome()
    n = cfg.n
    backend = make_backend(cfg)
    grid = _grid(cfg)
    c = _c_schedule(cfg)[1]
    mc = maps.NaturalMapConfig(c=c, mc_count=cfg.mc_count, seed=cfg.seed)
    rng = _rng(cfg)
    gam = hypcore.MobiusIsometry.translation(np.r_[0.4, np.zeros(n - 1)])
    theta = lambda x: maps.phi_c(backend, mc, x, grid)

    def upsilon(x):
        f = maps.phi0(gam.apply(x), grid)
        return f / f.norm()

    total = _samples(cfg, 500)
    per = 10
    samples = []
    for x in _ball_points(rng, n, max(total // per, 1), 0.5):
        for _ in range(per):
            samples.append((x, rng.random(), rng.standard_normal(n)))
    rep = {}

    def run():
        rep["r"] = homotopy.homotopy_stretch_bounds(theta, upsilon, samples, grid)
        return rep["r"].max_time_sq

    out.check(cfg, "homotopy_time_derivative", "|dH/dt|^2 <= int[Upsilon^2 + Theta^2] = 2", run, 2.0, "le", 0.0)
    if "r" in rep:
        r = rep["r"]
        out.check(cfg, "homotopy_space_derivative", "|dH(v)|^2 <= |dTheta(v)|^2 + |dUpsilon(v)|^2",
                  lambda: r.max_space_ratio, 1.0, "le", 1e-6)
        out.check(cfg, "homotopy_away_from_origin", "straight-line image avoids the L^2 ball of radius 1/2",
                  lambda: r.min_norm, 0.5, "ge", 0.0)
        out.table("homotopy", ["samples", "max_time_sq", "max_space_ratio", "min_norm"],
                  [[r.samples, r.max_time_sq, r.max_space_ratio, r.min_norm]])
    return out


def exp_stokes_error(cfg):
    """Slice Lipschitz constant of the homotopy and the Stokes error decay."""
    out = Outcome()
    n = cfg.n
    grid = _grid(cfg)
    c = _c_schedule(cfg)[1]
    mc = maps.NaturalMapConfig(c=c, mc_count=cfg.mc_count, seed=cfg.seed)
    backend = nb.ExactBackend(n)
    spec = dict(cfg.backend or {})
    height = float(spec.get("height", 3.5))
    cusp = nb.CuspGridBackend(hypcore.CuspModel.unit(n), height=height)
    delta = exhaustion.proper_lipschitz_function(cusp)
    reps = []

    def run():
        slices = exhaustion.find_small_slices(cusp, delta, 3)
        for s in slices:
            reps.append(homotopy.stokes_error_experiment(backend, mc, s, grid, cusp.model,
                                                         samples=_samples(cfg, 6), shift=1.0, seed=cfg.seed))
        return max(r.lipschitz for r in reps)

    bound = homotopy.stokes_lipschitz_bound(c, n - 1)
    out.check(cfg, "stokes_lipschitz", "H is ((c^2+h^2)/4+2)^{1/2}-Lipschitz on slices", run, bound, "le", 5e-2)
    if len(reps) >= 3:
        out.check(cfg, "stokes_error_decay", "error term vanishes along shrinking slices",
                  lambda: min(reps[i].error_estimate / reps[i + 1].error_estimate for i in range(len(reps) - 1)),
                  10.0, "ge", 0.0)
    cs = sorted(set(_c_schedule(cfg)) | {c, c + 1.0})
    out.check(cfg, "stokes_bound_monotone_in_c", "Lipschitz bound increases with c",
              lambda: float(min(np.diff([homotopy.stokes_lipschitz_bound(x, n - 1) for x in cs]))),
              0.0, "ge", 0.0)
    out.table("stokes", ["level", "area", "lipschitz", "lipschitz_bound", "error_estimate"],
              [[r.level, r.area, r.lipschitz, r.lipschitz_bound, r.error_estimate] for r in reps])
    return out


def _cone_charts(n):
    """A horosphere piece (the equality case) and a generic curved sheet."""
    theta = np.eye(n)[-1]
    horo = conelab.ConeChart(lambda u: hypcore.cusp_to_ball(u, 0.0), theta)

    def sheet(u):
        x = np.zeros(n)
        x[: n - 1] = 0.4 * u
        x[-1] = 0.15 * np.sin(u.sum())
        x[0] += 0.1 * u[-1] ** 2
        return x

    generic = conelab.ConeChart(sheet, np.r_[0.6, np.zeros(n - 2), 0.8])
    return horo, generic


def exp_cone_decay(cfg):
    """Pointwise e^{-(n-1)s} decay of coned Jacobians."""
    out = Outcome()
    n = cfg.n
    rng = _rng(cfg)
    horo, generic = _cone_charts(n)
    svals = [0.0, 0.5, 1.0, 2.0]
    per = max(_samples(cfg, 500) // (2 * len(svals)), 1)
    reps = {}
    for label, chart, box in (("horosphere", horo, 0.5), ("generic", generic, 1.0)):
        samples = [(rng.uniform(-box, box, n - 1), s) for s in svals for _ in range(per)]

        def run(chart=chart, samples=samples, label=label):
            reps[label] = conelab.cone_jacobian_decay_check(chart, samples)
            return reps[label].max_excess

        out.check(cfg, f"cone_jacobian_{label}", "|Jac C(x,s)| <= e^{-(n-1)s} |Jac phi(x)|", run, 1.0, "le", 5e-2)
        if label in reps:
            r = reps[label]
            out.check(cfg, f"cone_orthogonal_{label}", "orthogonal Jacobi components shrink by e^{-s}",
                      lambda r=r: float(r.orth_ratio.max()), 1.0, "le", 5e-2)
            out.check(cfg, f"cone_unit_speed_{label}", "the cone direction is unit speed",
                      lambda r=r: r.speed_error, 1e-6, "le", 0.0)
    degenerate = conelab.ConeChart(lambda u: np.r_[0.5 * np.tanh(u.sum()), np.zeros(n - 1)], np.eye(n)[-1])
    out.check(cfg, "cone_degenerate", "rank-deficient base gives a null cone Jacobian",
              lambda: conelab.degenerate_jacobian(degenerate, np.full(n - 1, 0.1), 1.0), 0.0, "close", 1e-6)
    rows = []
    for label, r in reps.items():
        rows += [[label, s, q, b] for s, q, b in zip(r.s, r.ratio, r.bound)]
    out.table("cone_decay", ["chart", "s", "ratio", "bound"], rows)
    return out


def exp_cone_integral(cfg):
    """Integrated cone volume against (1/(n-1)) of the base volume."""
    out = Outcome()
    n = cfg.n
    horo, generic = _cone_charts(n)
    cells = _samples(cfg, 8)
    res = {}

    def horo_run():
        res["h"] = conelab.cone_integral_inequality(horo, -0.5 * np.ones(n - 1), 0.5 * np.ones(n - 1), cells=cells)
        return res["h"][0]

    out.check(cfg, "cone_integral_horosphere", "int |Jac C| <= (1/(n-1)) int |Jac phi|", horo_run,
              1.0 / (n - 1), "le", 5e-2)
    if "h" in res:
        out.check(cfg, "cone_integral_horosphere_equality", "horosphere cones attain the 1/(n-1) constant",
                  lambda: res["h"][0] * (n - 1) / res["h"][1], 1.0, "close", 5e-2)

    def generic_run():
        res["g"] = conelab.cone_integral_inequality(generic, -np.ones(n - 1), np.ones(n - 1), cells=cells)
        return res["g"][0] * (n - 1) / res["g"][1]

    out.check(cfg, "cone_integral_generic", "int |Jac C| <= (1/(n-1)) int |Jac phi|", generic_run, 1.0, "le", 5e-2)
    const = conelab.ConeChart(lambda u: np.full(n, 0.1), np.eye(n)[-1])
    out.check(cfg, "cone_integral_constant", "constant base map gives a null cone",
              lambda: conelab.cone_integral_inequality(const, -np.ones(n - 1), np.ones(n - 1), cells=2, s_nodes=6)[0],
              0.0, "close", 1e-8)
    out.table("cone_integral", ["chart", "lhs", "rhs"], [[k, v[0], v[1]] for k, v in res.items()])
    return out


def exp_cusp_suite(cfg):
    """Cusp slice volumes, small slices, coarea and the downstairs cone."""
    out = Outcome()
    n = cfg.n
    spec = dict(cfg.backend or {})
    model = hypcore.CuspModel(n, np.asarray(spec.get("lattice", np.eye(n - 1)), dtype=float))
    ts = np.linspace(0.0, 5.0, 11)
    vols = hypcore.cusp_slice_volume(model, ts)

    def roundoff():
        # metric determinant integrated over the torus, independently of the closed form
        worst = 0.0
        for t, v in zip(ts, vols):
            g = model.metric(np.zeros(n - 1), t)[:-1]
            direct = math.sqrt(float(np.prod(g))) * abs(np.linalg.det(model.lattice))
            worst = max(worst, abs(direct - v) / v)
        return worst

    out.check(cfg, "cusp_slice_closed_form", "slice volumes equal e^{-(n-1)t} V_0", roundoff, 0.0, "close", 1e-14)
    out.check(cfg, "cusp_slice_monotone", "slice volumes decrease monotonically to zero",
              lambda: float(np.max(np.diff(vols))), 0.0, "le", 0.0)

    cusp = nb.CuspGridBackend(model, height=float(spec.get("height", 6.0)))
    delta = exhaustion.proper_lipschitz_function(cusp)
    found = []

    def mesh_areas():
        found.extend(exhaustion.find_small_slices(cusp, delta, 5))
        return max(abs(s.area - hypcore.cusp_slice_volume(model, s.level)) / hypcore.cusp_slice_volume(model, s.level)
                   for s in found)

    out.check(cfg, "cusp_mesh_slice_area", "mesh slice areas match the cusp closed form", mesh_areas, 0.1, "le", 0.0)
    out.check(cfg, "cusp_small_slices_decrease", "small slices shrink with t",
              lambda: float(np.max(np.diff([s.area for s in found]))), 0.0, "le", 0.0)
    co = {}

    def coarea():
        co["v"] = exhaustion.coarea_check(cusp, delta)
        return co["v"][0] / co["v"][1]

    out.check(cfg, "cusp_coarea", "Vol >= int |grad delta| = int slice volumes", coarea, 1.0, "le", 2e-2)

    def shift():
        r = 0.7
        y, t = hypcore.cusp_shift(model, r, np.zeros(n - 1), 1.0)
        return hypcore.cusp_slice_volume(model, t) / (hypcore.cusp_slice_volume(model, 1.0) * math.exp(-(n - 1) * r))

    out.check(cfg, "cusp_shift_volume", "shifting by r scales slice volume by e^{-(n-1)r}", shift, 1.0, "close", 1e-12)

    rep = {}

    def flat():
        rep["flat"] = conelab.downstairs_cone_check(model, lambda u: np.r_[model.lattice @ u, 0.3])
        return rep["flat"].lhs / rep["flat"].rhs

    def wavy():
        base = lambda u: np.r_[model.lattice @ u, 0.3 + 0.2 * np.sin(2 * np.pi * u[0])]
        rep["wavy"] = conelab.downstairs_cone_check(model, base)
        return rep["wavy"].lhs / rep["wavy"].rhs

    out.check(cfg, "downstairs_cone_flat", "downstairs cone adds at most Vol(L)/(n-1)", flat, 1.0, "le", 5e-2)
    out.check(cfg, "downstairs_cone_wavy", "downstairs cone adds at most Vol(L)/(n-1)", wavy, 1.0, "le", 5e-2)
    out.check(cfg, "downstairs_cone_equivariance", "coning commutes with lattice translations",
              lambda: max(r.equivariance_error for r in rep.values()), 0.0, "close", 1e-12)
    out.table("cusp_slices", ["t", "mesh_area", "closed_form", "mesh_error"],
              [[s.level, s.area, float(hypcore.cusp_slice_volume(model, s.level)), s.mesh_error] for s in found])
    return out


def exp_entropy(cfg):
    """Volume growth entropy against n - 1."""
    out = Outcome()
    n = cfg.n
    radii = np.linspace(4.0, 8.0, 9)
    exact = nb.ExactBackend(n)
    rows = []

    def run():
        est = maps.entropy_estimate(exact, radii)
        rows.append(["exact", est, maps.entropy_oracle(n, radii)])
        return est

    out.check(cfg, "entropy_exact", "volume growth entropy of H^n is n-1", run, n - 1.0, "rclose", 1e-2)
    out.check(cfg, "entropy_oracle", "volume growth entropy of H^n is n-1",
              lambda: maps.entropy_oracle(n, radii), n - 1.0, "rclose", 1e-2)
    spec = dict(cfg.backend or {})
    if spec.get("kind") == "conformal_bump":
        bump = make_backend(cfg)
        flat = nb.ConformalBallBackend(n, **{**{k: v for k, v in spec.items() if k not in ("kind", "amplitude")},
                                             "amplitude": 0.0})
        vals = {}

        def perturbed():
            for key, be in (("bump", bump), ("flat", flat)):
                vals[key] = maps.entropy_estimate(be, radii, count=cfg.mc_count, seed=cfg.seed)
                rows.append([key, vals[key], maps.entropy_oracle(n, radii)])
            return vals["bump"]

        out.check(cfg, "entropy_bump_vs_flat", "entropy ignores compact perturbations", perturbed,
                  vals.get("flat", n - 1.0), "rclose", 2e-2)
        if "flat" in vals:
            out.rows[-1].bound = vals["flat"]
            out.rows[-1].evaluate()
    out.table("entropy", ["backend", "estimate", "oracle"], rows)
    return out


EXPERIMENTS = {
    "g_phi0_identity": exp_g_phi0_identity,
    "derivative_bound": exp_derivative_bound,
    "jacobian_bound_phi": exp_jacobian_bound_phi,
    "comass": exp_comass,
    "calibration": exp_calibration,
    "barycenter_suite": exp_barycenter_suite,
    "natural_map_suite": exp_natural_map_suite,
    "homotopy_bounds": exp_homotopy_bounds,
    "stokes_error": exp_stokes_error,
    "cone_decay": exp_cone_decay,
    "cone_integral": exp_cone_integral,
    "cusp_suite": exp_cusp_suite,
    "entropy": exp_entropy,
}

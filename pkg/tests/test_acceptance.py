"""Acceptance criteria, run through the experiment runner at their stated settings.

Each test prints one ``PASS``/``FAIL`` line (criterion, measured values,
wall time against the budget) straight to the terminal.
"""
import time

import pytest

from natmaplab import cli

RES24 = {"scheme": "product_gauss", "resolution": 24}


def _run(tmp_path, name, **cfg):
    config = cli.ExperimentConfig(experiment=name, **cfg)
    t0 = time.perf_counter()
    result, outdir = cli.run_experiment(config, tmp_path / f"{name}_n{config.n}")
    return result, outdir, time.perf_counter() - t0


def _rows(result):
    return {r["name"]: r for r in result["checks"]}


def _report(capsys, number, title, ok, detail, wall, budget):
    ok = ok and wall <= budget
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'} {title}: {detail} "
              f"({wall:.1f}s / {budget:.0f}s)")
    return ok


def _all_pass(*results):
    return all(r["verdict"] == "pass" for r in results)


def _failed(*results):
    return [c["name"] for r in results for c in r["checks"] if not c["passed"]]


def test_criterion_01_g_phi0_identity(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "g_phi0_identity", n=3, samples=100)
    rel = _rows(res)["g_phi0_relative_error"]["measured"]
    ok = _report(capsys, 1, "g_Phi0 = (4/12) g_0 at 100 points in H^3", _all_pass(res),
                 f"max relative error {rel:.2e} (tol 1e-6)", wall, 10)
    assert ok, _failed(res)


def test_criterion_02_derivative_bound(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "derivative_bound", n=3, samples=10, mc_count=20000, grid=RES24)
    row = _rows(res)["rayleigh_quotient_max"]
    ok = _report(capsys, 2, "Rayleigh quotients <= c^2/4 (c = h + 1/2, 200 samples)", _all_pass(res),
                 f"max {row['measured']:.4f} vs {row['bound']:.4f}", wall, 120)
    assert ok, _failed(res)


def test_criterion_03_jacobian_bound(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "jacobian_bound_phi", n=3, samples=10, mc_count=20000, grid=RES24)
    row = _rows(res)["phi_c_jacobian_max"]
    ok = _report(capsys, 3, "Jac Phi_c <= (c^2/4n)^{n/2}", _all_pass(res),
                 f"max {row['measured']:.4f} vs {row['bound']:.4f}", wall, 120)
    assert ok, _failed(res)


def test_criterion_04_comass(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "comass", n=3, samples=10000)
    rows = _rows(res)
    ok = _report(capsys, 4, "comass of Omega on the unit sphere = 3^{3/2}", _all_pass(res),
                 f"sampled max {rows['comass_sampled_max']['measured']:.4f}, "
                 f"exact max {rows['comass_frame_max']['measured']:.4f}, "
                 f"calibrated {rows['comass_calibrated_frame']['measured']:.4f} (>= {0.95 * 27 ** 0.5:.4f})",
                 wall, 300)
    assert ok, _failed(res)


def test_criterion_05_calibration(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "calibration", n=3, samples=20)
    rows = _rows(res)
    ok = _report(capsys, 5, "calibration identity at 20 points", _all_pass(res),
                 f"max relative gap {rows['calibration_identity']['measured']:.2e} (tol 2e-2), "
                 f"negative control gap {rows['calibration_negative_control']['measured']:.3f}", wall, 120)
    assert ok, _failed(res)


def test_criterion_06_barycenter(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "barycenter_suite", n=3)
    rows = _rows(res)
    detail = ", ".join(f"{k} {rows[k]['measured']:.1e}" for k in
                       ("bar_constant_residual", "bar_scale_invariance", "bar_rotation_equivariance",
                        "bar_phi0_inverse"))
    ok = _report(capsys, 6, "barycenter properties", _all_pass(res), detail, wall, 30)
    assert ok, _failed(res)


def test_criterion_07_natural_map(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "natural_map_suite", n=3, samples=2, mc_count=200000, grid=RES24)
    rows = _rows(res)
    jac = max(r["measured"] / r["bound"] for k, r in rows.items() if k.startswith("jac_Fc_c"))
    dist = [rows[k]["measured"] for k in rows if k.startswith("Fc_identity_c")]
    ok = _report(capsys, 7, "Jac F_c <= (c/h)^n; F_c -> id", _all_pass(res),
                 f"max Jac/bound {jac:.3f}, d(F_c p, p) = {', '.join(f'{d:.1e}' for d in dist)}", wall, 600)
    assert ok, _failed(res)


def test_criterion_08_homotopy(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "homotopy_bounds", n=3, samples=500, mc_count=4000, grid=RES24)
    rows = _rows(res)
    ok = _report(capsys, 8, "homotopy stretch bounds at 500 samples", _all_pass(res),
                 f"max |dH/dt|^2 {rows['homotopy_time_derivative']['measured']:.3f} (<= 2), "
                 f"space ratio {rows['homotopy_space_derivative']['measured']:.3f} (<= 1), "
                 f"min norm {rows['homotopy_away_from_origin']['measured']:.3f} (>= 0.5)", wall, 60)
    assert ok, _failed(res)


def test_criterion_09_stokes(tmp_path, capsys):
    res, _, wall = _run(tmp_path, "stokes_error", n=3, mc_count=20000, grid=RES24)
    rows = _rows(res)
    ok = _report(capsys, 9, "slice Lipschitz bound and error decay", _all_pass(res),
                 f"Lipschitz {rows['stokes_lipschitz']['measured']:.3f} vs {rows['stokes_lipschitz']['bound']:.3f}, "
                 f"decay factor {rows.get('stokes_error_decay', {}).get('measured', float('nan')):.1f} (>= 10)",
                 wall, 300)
    assert ok, _failed(res)


def test_criterion_10_cone(tmp_path, capsys):
    decay, _, w1 = _run(tmp_path, "cone_decay", n=3, samples=512)
    integral, _, w2 = _run(tmp_path, "cone_integral", n=3)
    cusp, _, w3 = _run(tmp_path, "cusp_suite", n=3)
    d, i, c = _rows(decay), _rows(integral), _rows(cusp)
    downstairs = all(c[k]["passed"] for k in c if k.startswith("downstairs_"))
    ok = _report(capsys, 10, "cone decay, cone integral and downstairs cone",
                 _all_pass(decay, integral) and downstairs,
                 f"decay ratio/bound {max(d['cone_jacobian_horosphere']['measured'], d['cone_jacobian_generic']['measured']):.4f}, "
                 f"horosphere lhs {i['cone_integral_horosphere']['measured']:.4f} (A/(n-1) = 0.5), "
                 f"downstairs wavy {c['downstairs_cone_wavy']['measured']:.3f}",
                 w1 + w2 + w3, 180)
    assert ok, _failed(decay, integral) + [k for k in c if k.startswith("downstairs_") and not c[k]["passed"]]


def test_criterion_11_entropy(tmp_path, capsys):
    e2, _, w2 = _run(tmp_path, "entropy", n=2)
    e3, _, w3 = _run(tmp_path, "entropy", n=3)
    t0 = time.perf_counter()
    from natmaplab import hypcore
    import numpy as np
    slices_ok = True
    worst = 0.0
    for n in (2, 3, 4):
        model = hypcore.CuspModel.unit(n)
        ts = np.linspace(0.0, 8.0, 33)
        vols = hypcore.cusp_slice_volume(model, ts)
        worst = max(worst, float(np.max(np.abs(vols - np.exp(-(n - 1) * ts)) / np.exp(-(n - 1) * ts))))
        slices_ok &= bool(np.all(np.diff(vols) < 0))
    slices_ok &= worst <= 4 * np.finfo(float).eps
    wall = w2 + w3 + time.perf_counter() - t0
    ok = _report(capsys, 11, "entropy n-1 and cusp slice volumes", _all_pass(e2, e3) and slices_ok,
                 f"h(n=2) {_rows(e2)['entropy_exact']['measured']:.4f}, h(n=3) {_rows(e3)['entropy_exact']['measured']:.4f}, "
                 f"slice volume error {worst:.1e}", wall, 30)
    assert ok, _failed(e2, e3)


@pytest.mark.parametrize("name,extra", [("derivative_bound", {"samples": 2, "mc_count": 4000, "grid": RES24}),
                                        ("cusp_suite", {})])
def test_criterion_12_determinism(tmp_path, capsys, name, extra):
    cfg = cli.ExperimentConfig(experiment=name, n=3, **extra)
    t0 = time.perf_counter()
    _, a = cli.run_experiment(cfg, tmp_path / "a")
    from natmaplab.natmap import maps
    maps.sample_cloud.cache_clear()
    _, b = cli.run_experiment(cfg, tmp_path / "b")
    same = (a / "result.json").read_bytes() == (b / "result.json").read_bytes()
    ok = _report(capsys, 12, f"bit-identical result.json ({name})", same,
                 "identical" if same else "bytes differ", time.perf_counter() - t0, 120)
    assert ok

"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a single ``criterion NN ...: PASS|FAIL`` line; the lines are
also collected into the terminal summary (see conftest.py).
"""
import json
import math
import time

import numpy as np
import pytest

from blowup_lab.cli import main
from blowup_lab.data import BumpProfile, bump_data
from blowup_lab.exponents import ProblemParams, h_fujita, p_fujita, p_strauss, rho
from blowup_lab.hypergeom import HypergeomTriple, contiguous_shift, gauss_f, gauss_f_dz, gauss_f_dz2
from blowup_lab.lemmas import h_identity_check, master_inequality_check, s_scaling_check
from blowup_lab.odi import OdiConfig, fit_odi, odi_sweep
from blowup_lab.solver import RadialGrid, Status, detect_blowup, duhamel_solve, solve_fd
from blowup_lab.testfn import TestFunctionSpec, envelope, psi, psi_dt, residual_convergence

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(record_property):
    def _report(num, title, ok, detail):
        line = f"criterion {num:02d} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
        print(line)
        record_property("acceptance", line)
        assert ok, line

    return _report


def test_01_exponent_algebra(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_q = worst_f = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        B = -((n - 2) ** 2) / 4 + rng.uniform(1e-6, 10.0)
        r = rho(n, B)  # A does not enter rho
        q = (r * r + (n - 2) * r - B) / max(1.0, abs(B), r * r)
        worst_q = max(worst_q, abs(q))
        d = n - 1 + r
        worst_f = max(worst_f, abs(h_fujita(d, p_fujita(d))))
    ps_err = abs(p_strauss(3) - (1 + math.sqrt(2)))
    dt = time.perf_counter() - t0
    ok = worst_q < 1e-12 and ps_err < 1e-12 and worst_f < 1e-12 and dt < 1.0
    report(1, "exponent algebra", ok,
           f"rho residual {worst_q:.1e}, p_S(3) error {ps_err:.1e}, h_F residual {worst_f:.1e}, {dt:.2f} s")


def test_02_hypergeometric(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    zs = np.round(np.arange(0.05, 0.951, 0.05), 12)
    ode = contig = 0.0
    for _ in range(60):
        a = rng.uniform(0.2, 4)
        b = rng.uniform(-3, 3)
        c = a + rng.uniform(0.1, 4)
        t = HypergeomTriple(a, b, c)
        f, f1, f2 = gauss_f(t, zs), gauss_f_dz(t, zs), gauss_f_dz2(t, zs)
        res = zs * (1 - zs) * f2 + (c - (a + b + 1) * zs) * f1 - a * b * f
        ode = max(ode, float(np.max(np.abs(res) / np.abs(f))))
        for z in zs[::3]:
            cc = contiguous_shift(t, float(z))
            contig = max(contig, abs(cc.residual) / max(1.0, abs(cc.rhs), abs(cc.lhs)))
    dt = time.perf_counter() - t0
    ok = ode < 1e-7 and contig < 1e-9 and dt < 10
    report(2, "hypergeometric ODE and contiguous relations", ok,
           f"ODE residual {ode:.1e}, contiguous residual {contig:.1e}, {dt:.1f} s")


CONV_SETS = [
    (ProblemParams(3, 1.0, 0.5, 2.0), 0.5),
    (ProblemParams(3, 0.0, 0.75, 2.0), -1.0),
    (ProblemParams(2, 0.5, 0.3, 2.0), 1.5),
    (ProblemParams(4, 1.0, -0.5, 2.0), 2.0),
]
WINDOW = (1.0, 2.0, 0.5, 1.5)


def test_03_adjoint_residual_order(report):
    t0 = time.perf_counter()
    orders = []
    for prm, beta in CONV_SETS:
        orders += residual_convergence(TestFunctionSpec(prm, beta, 2.0), WINDOW, 0.02)["order"]
    prm, beta = CONV_SETS[0]
    neg = residual_convergence(TestFunctionSpec(prm, beta, 2.0), WINDOW, 0.02, operator_B=prm.B + 0.1)
    dt = time.perf_counter() - t0
    neg_fails = all(q < 1.5 for q in neg["ratio"])  # no convergence order to speak of
    ok = all(abs(o - 2.0) <= 0.2 for o in orders) and neg_fails and dt < 30
    report(3, "adjoint residual order", ok,
           f"orders {min(orders):.3f}..{max(orders):.3f}, negative-control orders "
           f"{', '.join(f'{o:.2f}' for o in neg['order'])}, {dt:.1f} s")


def _fd6(f, x, h):
    c = (-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60)
    return sum(ck * f(x + (k - 3) * h) for k, ck in enumerate(c) if ck) / h


def test_04_recurrence(report):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        prm = ProblemParams(int(rng.integers(3, 6)), rng.uniform(0, 1), rng.uniform(-0.2, 2), 3.0)
        spec = TestFunctionSpec(prm, rng.uniform(-2, 3), rng.uniform(1.1, 3))
        t = rng.uniform(0.1, 10)
        r = rng.uniform(0.05, 0.9) * (t + spec.lam - 0.1)
        d = psi_dt(spec, t, r)
        worst = max(worst, abs(d - _fd6(lambda s: psi(spec, s, r), t, 1e-2)) / abs(d))
    report(4, "time recurrence vs 6th-order FD", worst < 1e-6, f"max relative error {worst:.1e}")


def test_05_envelope(report):
    rng = np.random.default_rng(11)
    spreads = []
    for prm in (ProblemParams(3, 0.0, 0.0, 2.0), ProblemParams(3, 1.0, 0.5, 2.0), ProblemParams(4, 0.5, -0.5, 2.0)):
        for offset in (-0.6, 0.0, 1.3):  # below, at and above beta = gamma - alpha
            spec = TestFunctionSpec(prm, prm.gamma - prm.alpha + offset, 2.0)
            t = rng.uniform(0, 100, 10_000)
            r = rng.uniform(0, 1 - 1e-4, 10_000) * (t + 2.0)
            ratio = psi(spec, t, r) / envelope(spec, t, r)
            spreads.append(ratio.max() / ratio.min() if ratio.min() > 0 else math.inf)
    report(5, "envelope comparability", max(spreads) <= 50, f"worst C/c {max(spreads):.2f}")


def test_06_s_scaling(report):
    res = s_scaling_check()
    parts = [f"{r['regime']} {r['fitted']:.3f} vs {r['predicted']:.3f}" for r in res["regimes"]]
    lc = res["log_case"]
    parts.append(f"log case increasing={lc['increasing']} spread={lc['ratio_spread']:.2f}")
    report(6, "S scalings", res["pass"], "; ".join(parts))


def test_07_h_identity(report):
    res = h_identity_check()
    detail = ", ".join(f"{d['G']} residual {d['identity_residual']:.1e}" for d in res["results"])
    report(7, "H identity", res["pass"], detail)


def test_08_master_inequality(report):
    res = master_inequality_check()
    detail = ", ".join(f"case {d['case']}: K_fit {d['K_fit']:.3g}" for d in res["cases"])
    report(8, "master inequality", res["pass"], detail)


def _dalembert_V(t, r):
    from scipy.integrate import quad

    g = BumpProfile(1.0)
    Phi = lambda x: quad(lambda s: s * float(g(np.array(s))), 0.0, min(abs(x), 0.5))[0]
    return np.array([0.5 * (Phi(rr + t) - Phi(rr - t)) for rr in r])


def test_09_solver_cross_validation(report):
    t0 = time.perf_counter()
    prm = ProblemParams(3, 1.0, 0.75, 2.0, 0.3)  # B = B~ for (n, A) = (3, 1)
    data = bump_data(3000.0)
    bl = detect_blowup(prm, data, 0.02, 20.0, levels=3)
    T_half = 0.5 * bl.T_num
    fd = solve_fd(prm, data, RadialGrid.for_horizon(T_half, 0.005, potential=0.75), snapshot_dt=T_half / 8)
    du = duhamel_solve(prm, data, T_half, 0.01)
    worst = 0.0
    for t in fd.times[1:]:
        b = np.interp(du.r[1:], fd.r, fd.u_at(t))
        worst = max(worst, float(np.max(np.abs(du.u_at(t) - b)) / np.max(np.abs(b))))
    free = ProblemParams(3, 0.0, 0.0, 2.0, 1.0)
    errs = []
    for dr in (0.02, 0.01, 0.005):
        sol = solve_fd(free, bump_data(1.0), RadialGrid.for_horizon(1.5, dr), nonlinear=False, snapshot_dt=0.75)
        errs.append(float(np.max(np.abs(sol.V_at(1.5) - _dalembert_V(1.5, sol.r)))))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    dt = time.perf_counter() - t0
    ok = (bl.status == Status.BLEW_UP and du.status == Status.COMPLETED and worst < 0.01
          and all(3.0 < q < 5.5 for q in ratios) and dt < 120)
    report(9, "solver cross-validation", ok,
           f"T_num {bl.T_num:.4f}, FD vs Duhamel {100 * worst:.2f}% on [0, {T_half:.3f}], "
           f"d'Alembert error ratios {', '.join(f'{q:.2f}' for q in ratios)}, {dt:.0f} s")


def test_10_strauss_sweep(report, strauss_sweep):
    recs, fit, dt = strauss_sweep
    conf = [r.confidence for r in recs if r.confidence is not None]
    ok = fit.deviation is not None and fit.deviation <= 0.15 and dt <= 900
    report(10, "subcritical Strauss sweep", ok,
           f"slope {fit.slope:.3f} vs {fit.predicted_slope:.3f} (deviation {100 * fit.deviation:.1f}%), "
           f"r^2 {fit.r_squared:.4f}, {fit.n_points} points, max confidence "
           f"{100 * max(conf):.1f}%, {dt:.0f} s")


def test_11_odi_scalings(report):
    t0 = time.perf_counter()
    decades = np.logspace(-1, -3, 9)
    runs = [
        ("volterra kappa=0.5", "volterra", OdiConfig(kappa=0.5, alpha_odi=1.0, beta_odi=0.0), decades, 0.05),
        ("volterra kappa=0", "volterra", OdiConfig(kappa=0.0, alpha_odi=0.5, beta_odi=0.5, p=3.0), decades, 0.05),
        ("volterra kappa=1", "volterra", OdiConfig(kappa=1.0, alpha_odi=1.0, beta_odi=1.0),
         np.geomspace(0.1, 0.02, 5), 0.08),
        ("strauss-crit p=2", "strauss-crit", OdiConfig(p=2.0), decades, 0.05),
        ("fujita-crit p=2", "fujita-crit", OdiConfig(p=2.0), decades, 0.05),
        ("fujita-crit p=3", "fujita-crit", OdiConfig(p=3.0), decades, 0.05),
    ]
    ok, parts = True, []
    for label, mode, cfg, eps, tol in runs:
        fit = fit_odi(mode, cfg, odi_sweep(mode, cfg, eps))
        ok &= fit.deviation <= tol
        parts.append(f"{label} {fit.slope:.3f} vs {fit.predicted:.3f}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    report(11, "ODI scalings", bool(ok), "; ".join(parts) + f", {dt:.1f} s")


def test_12_determinism(report, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    monkeypatch.setenv("BLOWUP_LAB_THREADS", "1")
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("data.amplitude = 3000\ngrid.dr = 0.05\nt_max = 20\nrefine.levels = 2\n"
                   "sweep.eps_grid = 0.4,0.3,0.2,0.15,0.1\n")
    scfg = tmp_path / "solve.cfg"
    scfg.write_text("epsilon = 0.4\ndata.amplitude = 3000\ngrid.dr = 0.05\nt_max = 20\nsnapshot.dt = 1\n")
    compared = 0
    same = True
    for tag, argv in (
        ("sweep", ["sweep", "--config", str(cfg)]),
        ("solve", ["solve", "--config", str(scfg)]),
        ("odi", ["odi", "--mode", "volterra"]),
        ("lemmas", ["lemmas", "--check", "h-identity"]),
    ):
        outs = []
        for k in range(2):
            d = tmp_path / f"{tag}{k}"
            main(argv + ["--out", str(d)])
            capsys.readouterr()
            outs.append(d)
        for f in sorted(p.name for p in outs[0].iterdir()):
            compared += 1
            same &= (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    json.loads((tmp_path / "sweep0" / "manifest.json").read_text())
    report(12, "determinism", bool(same), f"{compared} output files compared byte for byte")

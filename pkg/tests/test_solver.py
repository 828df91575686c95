import math
import struct

import numpy as np
import pytest
from scipy.integrate import quad

from blowup_lab.data import BumpProfile, InitialData, bump_data, zero_profile
from blowup_lab.exponents import ProblemParams
from blowup_lab.solver import (
    RadialGrid,
    Status,
    detect_blowup,
    duhamel_solve,
    ode_blowup,
    read_snapshots,
    solve_fd,
    write_snapshots,
)
from blowup_lab.solver.duhamel import kernel, linear_part
from blowup_lab.solver.snapshots import MAGIC

FREE = ProblemParams(3, 0.0, 0.0, 2.0, 1.0)
ZERO = InitialData(zero_profile, zero_profile, 0.5, "zero", f_is_zero=True)


# ---- grid


def test_grid_invariants():
    g = RadialGrid.for_horizon(3.0, 0.05)
    assert g.r[0] == 0.5 * g.dr  # origin never a node
    assert g.dt <= g.cfl * g.dr
    assert g.r_max >= 1 + g.t_max + 2 * g.dr
    with pytest.raises(ValueError):
        RadialGrid(r_max=10.0, Nr=100, dt=0.06, t_max=3.0)  # dt > CFL dr
    with pytest.raises(ValueError):
        RadialGrid(r_max=3.0, Nr=100, dt=0.01, t_max=3.0)  # too short for the light cone
    with pytest.raises(ValueError):
        RadialGrid(r_max=10.0, Nr=100, dt=0.01, t_max=3.0, cfl=0.6)
    # positive V-form potential tightens dt
    assert RadialGrid.for_horizon(3.0, 0.05, potential=10.0).dt < g.dt


# ---- finite differences


def test_zero_data_stays_zero():
    sol = solve_fd(FREE, ZERO, RadialGrid.for_horizon(2.0, 0.05), snapshot_dt=0.1)
    assert sol.status == Status.COMPLETED
    assert np.all(sol.V == 0)


def _dalembert(t, r, eps=1.0):
    g = BumpProfile(1.0)
    Phi = lambda x: quad(lambda s: s * float(g(np.array(s))), 0.0, min(abs(x), 0.5))[0]
    return np.array([0.5 * eps * (Phi(rr + t) - Phi(rr - t)) for rr in r])


def test_dalembert_second_order():
    errs = []
    for dr in (0.02, 0.01, 0.005):
        sol = solve_fd(FREE, bump_data(1.0), RadialGrid.for_horizon(1.5, dr), nonlinear=False,
                       snapshot_dt=0.75)
        V = sol.V_at(1.5)
        errs.append(float(np.max(np.abs(V - _dalembert(1.5, sol.r)))))
    scale = float(np.max(np.abs(_dalembert(1.5, np.linspace(0.01, 2.5, 400)))))
    assert errs[-1] < 1e-3 * scale
    for a, b in zip(errs, errs[1:]):
        assert 3.0 < a / b < 5.5


def test_finite_speed_of_propagation():
    sol = solve_fd(FREE, bump_data(1.0), RadialGrid.for_horizon(4.0, 0.02), snapshot_dt=0.25)
    dr = sol.grid.dr
    for t, V in zip(sol.times, sol.V):
        outside = sol.r > 1 + t + 2 * dr
        assert np.all(np.abs(V[outside]) <= 1e-12 * max(np.max(np.abs(V)), 1e-300))


def test_damped_energy_non_increasing():
    prm = ProblemParams(3, 1.0, 0.75, 2.0, 1.0)  # B = B~ for (n, A) = (3, 1)
    sol = solve_fd(prm, bump_data(1.0), RadialGrid.for_horizon(4.0, 0.01, potential=0.75),
                   nonlinear=False, snapshot_dt=0.01)
    r, dr = sol.r, sol.grid.dr
    V = sol.V
    Vt = (V[2:] - V[:-2]) / (sol.times[2:] - sol.times[:-2])[:, None]
    Vr = np.diff(V[1:-1], axis=1) / dr
    E = 0.5 * dr * (np.sum(Vt**2 + 0.75 * V[1:-1] ** 2 / r**2, axis=1) + np.sum(Vr**2, axis=1))
    assert np.all(np.diff(E) <= 2e-3 * E[0])
    assert E[-1] < E[0]


def test_linear_problem_is_censored():
    res = detect_blowup(FREE.replace(epsilon=0.3), bump_data(300.0), 0.05, 10.0, nonlinear=False)
    assert res.status == Status.COMPLETED and res.censored and res.T_num is None


def test_detect_blowup_accepts_and_is_threshold_insensitive():
    prm = FREE.replace(epsilon=0.4)
    a = detect_blowup(prm, bump_data(300.0), 0.02, 30.0, threshold=1e6)
    b = detect_blowup(prm, bump_data(300.0), 0.02, 30.0, threshold=1e8)
    assert a.status == Status.BLEW_UP and a.accepted and a.confidence < 0.02
    assert abs(a.T_num - b.T_num) / a.T_num < 0.02
    assert 7.0 < a.T_num < 9.0


def test_lifespan_monotone_in_epsilon():
    T = [detect_blowup(FREE.replace(epsilon=e), bump_data(300.0), 0.04, 60.0, levels=2).T_levels[0]
         for e in (0.5, 0.4, 0.3)]
    assert T[0] < T[1] < T[2]


@pytest.mark.parametrize("u0,p", [(1.0, 2.0), (0.5, 3.0), (2.0, 1.5), (0.1, 2.0)])
def test_ode_blowup_oracle(u0, p):
    exact = u0 ** (1 - p) / (p - 1)
    assert abs(ode_blowup(u0, p) - exact) < 0.01 * exact


def test_hardy_endpoint_refused():
    prm = ProblemParams(3, 0.0, -0.25, 2.0, 1.0, allow_hardy_endpoint=True)
    with pytest.raises(ValueError):
        solve_fd(prm, bump_data(1.0), RadialGrid.for_horizon(1.0, 0.05))


# ---- Duhamel


def test_kernel_bounded_and_free_value():
    t, r, rho = np.meshgrid(np.linspace(0, 3, 31), np.linspace(0, 3, 31), np.linspace(0, 6, 61))
    inside = (np.abs(r - t) <= rho) & (rho <= r + t)
    assert np.all(kernel(t[inside], r[inside], rho[inside], 0.0) == 0.5)
    for A in (0.5, 1.0, 1.7):
        k = kernel(t[inside], r[inside], rho[inside], A)
        assert np.all(k >= 0) and np.all(k <= 0.5 + 1e-15)


def test_duhamel_zero_data():
    sol = duhamel_solve(FREE, ZERO, 1.0, 0.05)
    assert sol.status == Status.COMPLETED
    assert np.all(sol.W == 0)


def test_duhamel_requires_f_zero():
    data = InitialData(BumpProfile(1.0), zero_profile, 0.5)
    with pytest.raises(ValueError):
        duhamel_solve(FREE, data, 1.0, 0.05)


@pytest.mark.parametrize("A,B", [(0.0, 0.0), (1.0, 0.75)])
def test_duhamel_linear_matches_fd(A, B):
    prm = ProblemParams(3, A, B, 2.0, 1.0)
    du = duhamel_solve(prm, bump_data(1.0), 1.5, 0.02, nonlinear=False)
    fd = solve_fd(prm, bump_data(1.0), RadialGrid.for_horizon(1.5, 0.005, potential=B),
                  nonlinear=False, snapshot_dt=0.25)
    for t in (0.5, 1.0, 1.5):
        a = du.u_at(t)
        b = np.interp(du.r[1:], fd.r, fd.u_at(t))
        assert np.max(np.abs(a - b)) < 0.01 * np.max(np.abs(b))


def test_duhamel_linear_free_is_dalembert():
    # n=3, A=0: K = 1/2 and r u is the d'Alembert solution
    du = duhamel_solve(FREE, bump_data(1.0), 1.5, 0.01, nonlinear=False)
    k = int(round(1.2 / 0.01))
    ref = _dalembert(1.2, du.r[1:])
    got = du.r[1:] * du.u[k, 1:]
    assert np.max(np.abs(got - ref)) < 1e-3 * np.max(np.abs(ref))
    lp = linear_part(FREE, bump_data(1.0), du.t, du.r)
    assert np.allclose(lp, du.W, atol=1e-14)


def test_duhamel_iterates_nonnegative(damped_pair):
    _, _, _, du = damped_pair
    assert du.status == Status.COMPLETED
    assert min(du.min_iterate) >= 0.0
    assert du.kernel_clamped == 0


def test_duhamel_with_potential_correction():
    # B < B~: the (B~ - B) rho^-2 u source is active; it keeps iterates positive and the
    # Duhamel path converges to the FD solution away from the origin
    prm = ProblemParams(3, 1.0, 0.3, 2.0, 0.3)
    data = bump_data(3000.0)
    fd = solve_fd(prm, data, RadialGrid.for_horizon(1.0, 0.0025, potential=0.3), snapshot_dt=0.05)
    errs = []
    for h in (0.04, 0.02):
        du = duhamel_solve(prm, data, 1.0, h)
        assert du.status == Status.COMPLETED and min(du.min_iterate) >= 0
        b = np.interp(du.r[1:], fd.r, fd.u_at(1.0))
        far = du.r[1:] > 0.2
        errs.append(np.max(np.abs(du.u_at(1.0) - b)[far]) / np.max(np.abs(b)))
    assert errs[1] < 0.03
    assert errs[0] / errs[1] > 2.5


def test_duhamel_cross_validates_nonlinear(damped_pair):
    prm, _, fd, du = damped_pair
    for t in (0.4, 0.8, 1.2):
        b = np.interp(du.r[1:], fd.r, fd.u_at(t))
        assert np.max(np.abs(du.u_at(t) - b)) < 0.01 * np.max(np.abs(b))


def test_duhamel_flags_non_convergence():
    du = duhamel_solve(FREE.replace(epsilon=1.0), bump_data(300.0), 6.0, 0.05, k_max=5)
    assert du.status == Status.NOT_CONVERGED


# ---- snapshot dump


def test_snapshot_roundtrip(tmp_path, free_small):
    _, sol = free_small
    path = tmp_path / "v.bin"
    write_snapshots(path, sol)
    dump = read_snapshots(path)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack_from("<III", raw, 4) == (1, sol.grid.Nr, len(sol.times))
    assert dump.version == 1 and dump.dt == sol.grid.dt
    assert np.array_equal(dump.times, sol.times) and np.array_equal(dump.V, sol.V)
    assert len(raw) == 24 + 8 * len(sol.times) * (sol.grid.Nr + 1)


def test_snapshot_rejects_corruption(tmp_path, free_small):
    _, sol = free_small
    path = tmp_path / "v.bin"
    write_snapshots(path, sol)
    raw = path.read_bytes()
    (tmp_path / "bad_magic").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "bad_version").write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    (tmp_path / "short").write_bytes(raw[:-8])
    for name in ("bad_magic", "bad_version", "short"):
        with pytest.raises(ValueError):
            read_snapshots(tmp_path / name)

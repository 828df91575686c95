import pytest

from blowup_lab.data import bump_data
from blowup_lab.exponents import ProblemParams
from blowup_lab.solver import RadialGrid, duhamel_solve, solve_fd

# damped case on the factorizing potential B = B~ = 0.75 (n=3, A=1)
DAMPED = ProblemParams(3, 1.0, 0.75, 2.0, 0.3)
DAMPED_AMP = 3000.0


@pytest.fixture(scope="session")
def free_small():
    """n=3, A=B=0, unit bump, eps=1: global on [0, 6] with snapshots every 0.01."""
    prm = ProblemParams(3, 0.0, 0.0, 2.0, 1.0)
    sol = solve_fd(prm, bump_data(1.0), RadialGrid.for_horizon(6.0, 0.02), snapshot_dt=0.01)
    return prm, sol


@pytest.fixture(scope="session")
def damped_pair():
    """FD (dr = 0.005) and Duhamel (h = 0.02) solutions of the damped case on [0, 1.2]."""
    data = bump_data(DAMPED_AMP)
    fd = solve_fd(DAMPED, data, RadialGrid.for_horizon(1.2, 0.005, potential=0.75), snapshot_dt=0.05)
    du = duhamel_solve(DAMPED, data, 1.2, 0.02)
    return DAMPED, data, fd, du


def pytest_terminal_summary(terminalreporter):
    lines = [v for key in ("passed", "failed") for rep in terminalreporter.stats.get(key, [])
             for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def strauss_sweep():
    """The default (n=3, A=0, B=0, p=2) sweep over eps in [0.05, 0.4]: records, fit, wall time."""
    import time

    from blowup_lab.sweep import SweepConfig, default_eps_grid, fit_exponent, report_for, run_sweep

    t0 = time.perf_counter()
    cfg = SweepConfig()
    recs = run_sweep(cfg, default_eps_grid())
    fit = fit_exponent(recs, report_for(cfg))
    return recs, fit, time.perf_counter() - t0

"""Lifespan estimation: threshold crossing on a refinement ladder, plus an ODE surrogate."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from ..data import InitialData
from ..exponents import ProblemParams
from .fd import adaptive_dt, crossing_time, solve_fd
from .grid import RadialGrid, Status

__all__ = ["BlowupResult", "detect_blowup", "ode_blowup", "potential_coefficient"]

CONFIDENCE_TOL = 0.02


@dataclass
class BlowupResult:
    status: str
    T_num: float | None
    confidence: float | None
    accepted: bool
    T_levels: list = field(default_factory=list)  # T_num per rung (None when censored)
    dr_levels: list = field(default_factory=list)
    richardson: float | None = None
    t_max: float = 0.0
    threshold: float = 1e6
    statuses: list = field(default_factory=list)

    @property
    def censored(self) -> bool:
        return self.status == Status.COMPLETED

    def to_dict(self) -> dict:
        d = asdict(self)
        d["censored"] = self.censored
        return d


def potential_coefficient(params: ProblemParams) -> float:
    """c in the V-form term c r^-2 V."""
    n = params.n
    return (n - 1) * (n - 3) / 4.0 + params.B


def detect_blowup(
    params: ProblemParams,
    data: InitialData,
    dr: float,
    t_max: float,
    threshold: float = 1e6,
    levels: int = 3,
    cfl: float = 0.45,
    nonlinear: bool = True,
    tol: float = CONFIDENCE_TOL,
) -> BlowupResult:
    """Solve at dr, dr/2 (and dr/4 only if the first pair disagrees by ``tol`` or more).

    confidence = |T(h) - T(h/2)| / T(h) for the last pair computed; the
    Richardson value assumes second-order convergence of T_num.
    """
    if levels < 2:
        raise ValueError("the refinement ladder needs at least two rungs")
    c = potential_coefficient(params)
    Ts, drs, statuses = [], [], []
    conf = None
    for k in range(levels):
        h = dr / 2**k
        grid = RadialGrid.for_horizon(t_max, h, cfl=cfl, potential=c)
        sol = solve_fd(params, data, grid, threshold=threshold, nonlinear=nonlinear)
        Ts.append(sol.T_num)
        drs.append(h)
        statuses.append(sol.status)
        if sol.status != Status.BLEW_UP:
            break
        if k >= 1:
            conf = abs(Ts[-2] - Ts[-1]) / Ts[-2]
            if conf < tol:
                break

    base = dict(T_levels=Ts, dr_levels=drs, t_max=t_max, threshold=threshold, statuses=statuses)
    if Status.UNSTABLE in statuses:
        return BlowupResult(Status.UNSTABLE, None, None, False, **base)
    if any(s == Status.COMPLETED for s in statuses):
        # censored: lifespan >= t_max at some rung
        return BlowupResult(Status.COMPLETED, None, None, False, **base)
    rich = Ts[-1] + (Ts[-1] - Ts[-2]) / 3.0
    return BlowupResult(Status.BLEW_UP, Ts[-1], conf, conf < tol, richardson=rich, **base)


def ode_blowup(u0: float, p: float, threshold: float = 1e6, dt0: float = 1e-2,
               t_max: float = math.inf) -> float | None:
    """Blow-up time of the flat mode u' = u^p, u(0) = u0, by RK4 with shrinking steps.

    Uses the same step controller and crossing interpolation as the PDE path;
    the exact answer is u0^(1-p) / (p - 1).
    """
    f = (lambda u: u * u) if p == 2 else (lambda u: abs(u) ** p)
    t, u = 0.0, float(u0)
    scale = u0 ** (1.0 - p)  # natural time unit of the flat mode
    while u < threshold:
        if t >= t_max:
            return None
        dt = adaptive_dt(dt0 * scale, u, p, u_ref=u0, order=1)
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.5 * dt * k2)
        k4 = f(u + dt * k3)
        u_new = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not math.isfinite(u_new):
            return t
        if u_new >= threshold:
            return crossing_time(t, u, t + dt, u_new, threshold)
        t, u = t + dt, u_new
    return t

"""Explicit leapfrog scheme for the radial equation in the variable V = r^((n-1)/2) u.

    V_tt - V_rr + (A/r) V_t + c r^-2 V = r^(-(n-1)(p-1)/2) |V|^p,
    c = (n-1)(n-3)/4 + B.

Central differences in t and r; the damping term uses the centred time
difference (V^{k+1} - V^{k-1}) / (dt_k + dt_{k-1}), i.e. it is averaged
between the outer time levels, which keeps it stable next to the origin.
Potential and nonlinearity are explicit. Nonuniform steps are allowed so the
step can shrink as the solution grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..data import InitialData
from ..exponents import ProblemParams
from .grid import RadialGrid, RadialSolution, Status

__all__ = ["FDState", "FDScheme", "adaptive_dt", "crossing_time", "fd_step", "solve_fd"]

# cells kept active beyond the physical light cone
_CONE_MARGIN = 16


@dataclass
class FDState:
    t: float
    V: np.ndarray
    V_prev: np.ndarray
    dt_prev: float


def adaptive_dt(dt0: float, amplitude: float, p: float, u_ref: float = 1.0, order: int = 2) -> float:
    """Step that resolves the local blow-up time scale ``amplitude^(-(p-1)/order)``."""
    if not math.isfinite(amplitude):
        return dt0
    return dt0 * (1.0 + amplitude / u_ref) ** (-(p - 1.0) / order)


def crossing_time(t0: float, a0: float, t1: float, a1: float, level: float) -> float:
    """Time at which the amplitude reaches ``level``, interpolating log-amplitude linearly."""
    if not (math.isfinite(a1) and a1 > 0 and a0 > 0) or a1 <= a0:
        return t1
    w = (math.log(level) - math.log(a0)) / (math.log(a1) - math.log(a0))
    return t0 + min(max(w, 0.0), 1.0) * (t1 - t0)


class FDScheme:
    """Coefficient arrays and the single-step update for one (params, grid) pair."""

    def __init__(self, params: ProblemParams, grid: RadialGrid, nonlinear: bool = True):
        if params.allow_hardy_endpoint and params.B == -((params.n - 2) ** 2) / 4.0:
            raise ValueError("the solver does not support the Hardy endpoint B = -(n-2)^2/4")
        self.params = params
        self.grid = grid
        self.nonlinear = nonlinear
        n, A, B, p = params.n, params.A, params.B, params.p
        r = grid.r
        self.r = r
        self.dr = grid.dr
        self.damp = A / r
        self.potential = ((n - 1) * (n - 3) / 4.0 + B) / r**2
        self.has_damping = A != 0
        self.has_potential = bool(np.any(self.potential))
        self.nl_coef = r ** (-(n - 1) * (p - 1) / 2.0)
        self.u_weight = r ** (-(n - 1) / 2.0)
        # odd reflection (V(t,0) = 0) for n >= 2, even (d_r V(t,0) = 0) for n = 1
        self.ghost_sign = 1.0 if n == 1 else -1.0

    def active(self, t: float, support: float = 1.0) -> int:
        j = int(math.ceil((support + t) / self.dr)) + _CONE_MARGIN
        return min(j, self.grid.Nr)

    def rhs(self, V: np.ndarray, out_len: int | None = None) -> np.ndarray:
        """-V_rr-part-free spatial operator: D_rr V - c r^-2 V + nonlinearity."""
        m = len(V) if out_len is None else out_len
        pad = np.empty(m + 2)
        pad[1:m + 1] = V[:m]
        pad[0] = self.ghost_sign * V[0]
        pad[m + 1] = V[m] if m < len(V) else 0.0
        out = (pad[2:] - 2.0 * pad[1:-1] + pad[:-2]) / self.dr**2
        if self.has_potential:
            out -= self.potential[:m] * pad[1:-1]
        if self.nonlinear:
            Vm = pad[1:-1]
            p = self.params.p
            mag = Vm * Vm if p == 2.0 else np.abs(Vm) ** p
            out += self.nl_coef[:m] * mag
        return out

    def step(self, state: FDState, dt: float, support: float = 1.0, out: np.ndarray | None = None) -> FDState:
        """One leapfrog step. ``out`` (not aliasing state.V) receives the new level."""
        m = self.active(state.t + dt, support)
        V, Vp = state.V, state.V_prev
        q = dt / state.dt_prev
        acc = self.rhs(V, m)
        acc *= 0.5 * dt * (dt + state.dt_prev)
        acc += (1.0 + q) * V[:m]
        if self.has_damping:
            half_damp = 0.5 * dt * self.damp[:m]
            acc -= (q - half_damp) * Vp[:m]
            acc /= 1.0 + half_damp
        else:
            acc -= q * Vp[:m]
        if out is None:
            out = np.zeros_like(V)
        # a recycled buffer already vanishes beyond m: the active region only grows
        out[:m] = acc
        return FDState(t=state.t + dt, V=out, V_prev=V, dt_prev=dt)

    def amplitude(self, V: np.ndarray, m: int | None = None) -> float:
        """max |u|; nodes beyond ``m`` are known to vanish."""
        m = len(V) if m is None else m
        with np.errstate(over="ignore", invalid="ignore"):
            a = float(np.max(np.abs(V[:m] * self.u_weight[:m])))
        return a if math.isfinite(a) else math.inf

    def initial_state(self, data: InitialData, epsilon: float) -> FDState:
        """Second-order Taylor start V^1 = V^0 + dt V_t + dt^2/2 V_tt."""
        r = self.r
        n = self.params.n
        lift = r ** ((n - 1) / 2.0)
        V0 = epsilon * lift * np.asarray(data.f(r), dtype=float)
        V1t = epsilon * lift * np.asarray(data.g(r), dtype=float)
        dt = self.grid.dt
        Vtt = self.rhs(V0) - self.damp * V1t
        V1 = V0 + dt * V1t + 0.5 * dt * dt * Vtt
        return FDState(t=dt, V=V1, V_prev=V0, dt_prev=dt)


def fd_step(state: FDState, scheme: FDScheme, dt: float | None = None) -> FDState:
    """Advance one leapfrog step (default step: the grid's base dt)."""
    return scheme.step(state, scheme.grid.dt if dt is None else dt)


def solve_fd(
    params: ProblemParams,
    data: InitialData,
    grid: RadialGrid,
    threshold: float = 1e6,
    nonlinear: bool = True,
    snapshot_dt: float | None = None,
    adaptive: bool = True,
    u_ref: float = 1.0,
    max_steps: int = 50_000_000,
) -> RadialSolution:
    """Integrate to ``grid.t_max`` or until max|u| reaches ``threshold``.

    Snapshots are stored every ``snapshot_dt`` (linear interpolation between
    steps when a snapshot time falls inside a step); with ``snapshot_dt=None``
    only the initial and final states are kept.
    """
    scheme = FDScheme(params, grid, nonlinear=nonlinear)
    eps = params.epsilon
    support = data.support
    dt0 = grid.dt
    state = scheme.initial_state(data, eps)
    V0 = state.V_prev.copy()  # state.V_prev itself gets recycled as a work buffer

    times = [0.0]
    snaps = [V0.copy()]
    next_snap = snapshot_dt if snapshot_dt else math.inf

    def record_between(prev: FDState, cur: FDState):
        nonlocal next_snap
        while next_snap <= cur.t + 1e-12 and next_snap <= grid.t_max + 1e-12:
            if abs(next_snap - cur.t) <= 1e-12:
                v = cur.V.copy()
            else:
                w = (next_snap - prev.t) / (cur.t - prev.t)
                v = (1 - w) * prev.V + w * cur.V
            times.append(next_snap)
            snaps.append(v)
            next_snap += snapshot_dt

    # the start-up step counts as the first stepped interval
    record_between(FDState(0.0, V0, V0, dt0), state)
    amp_prev, amp = scheme.amplitude(V0), scheme.amplitude(state.V)
    status, T_num = Status.COMPLETED, None
    steps = 1
    min_dt = dt0
    overflow = False
    while True:
        if amp >= threshold or not math.isfinite(amp):
            overflow = not math.isfinite(amp)
            if overflow and amp_prev < math.sqrt(threshold):
                status = Status.UNSTABLE
            else:
                status = Status.BLEW_UP
                T_num = crossing_time(state.t - state.dt_prev, amp_prev, state.t, amp, threshold)
            break
        if state.t >= grid.t_max - 1e-12:
            break
        if steps >= max_steps:
            status = Status.UNSTABLE
            break
        dt = adaptive_dt(dt0, amp, params.p, u_ref) if (adaptive and nonlinear) else dt0
        dt = min(dt, 1.25 * state.dt_prev, grid.t_max - state.t)
        if dt <= 1e-14:
            break
        min_dt = min(min_dt, dt)
        with np.errstate(over="ignore", invalid="ignore"):
            # the level two steps back is dead once the new one exists: recycle it
            new = scheme.step(state, dt, support, out=state.V_prev)
        if snapshot_dt:
            record_between(state, new)
        state = new
        amp_prev, amp = amp, scheme.amplitude(state.V, scheme.active(state.t, support))
        steps += 1

    if not times or abs(times[-1] - state.t) > 1e-12:
        times.append(state.t)
        snaps.append(state.V.copy())
    return RadialSolution(
        params=params,
        grid=grid,
        times=np.asarray(times),
        V=np.asarray(snaps),
        status=status,
        T_num=T_num,
        t_end=state.t,
        diagnostics={"steps": steps, "min_dt": min_dt, "overflow": overflow, "threshold": threshold},
    )

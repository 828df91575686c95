"""Integral functionals of the test-function argument.

* ``eta``            smooth cutoff, 1 on [0, T/2], 0 beyond T;
* ``c_fg``           data functional pairing (f, g) with Psi_beta at t = 0;
* ``g_beta``         G_beta(t; T) = int |u|^p eta_T^(2p') Psi_beta dx for a computed u;
* ``s_functional``   the three-term S(T; beta1, beta);
* ``h_beta_series``  H_beta(T) = int_0^T int_{t/2}^t G(s; t) ds dt / t and T H'(T);
* ``master_inequality`` both sides of the integrated weak form, with the
  explicit constant that the cutoff derivatives produce.

All x-integrals are radial: dx = omega_n r^(n-1) dr.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import expit, roots_legendre

from .data import InitialData, sphere_area
from .exponents import ProblemParams
from .testfn import TestFunctionSpec, beta_regime, phi, psi, psi_dt

__all__ = [
    "CutoffSpec",
    "HBetaResult",
    "MasterInequality",
    "c_fg",
    "cutoff_constant",
    "eta",
    "eta_derivatives",
    "g_beta",
    "g_beta_series",
    "h_beta_series",
    "master_inequality",
    "s_functional",
    "s_terms",
]


@dataclass(frozen=True)
class CutoffSpec:
    T: float
    order: str = "C-infinity"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("cutoff scale T must be positive")


def _step(x):
    """1 / (1 + exp(1/(1-x) - 1/x)) on (0, 1) and its first two x-derivatives."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ph = 1.0 / (1.0 - x) - 1.0 / x
        e = expit(-ph)
        d1 = 1.0 / (1.0 - x) ** 2 + 1.0 / x**2
        d2 = 2.0 / (1.0 - x) ** 3 - 2.0 / x**3
        w = e * (1.0 - e)
        e1 = -w * d1
        e2 = -((1.0 - 2.0 * e) * e1 * d1 + w * d2)
    # w underflows to exactly 0 near both ends; the products are then 0, not nan
    e1 = np.where(w > 0, e1, 0.0)
    e2 = np.where(w > 0, e2, 0.0)
    return e, e1, e2


def eta_derivatives(spec: CutoffSpec, t):
    """(eta_T, eta_T', eta_T'') at t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("the cutoff is defined for t >= 0")
    s = t / spec.T
    x = 2.0 * s - 1.0
    mid = (x > 0) & (x < 1)
    val = np.where(s <= 0.5, 1.0, 0.0)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    if np.any(mid):
        e, e1, e2 = _step(x[mid])
        val[mid] = e
        d1[mid] = 2.0 * e1 / spec.T
        d2[mid] = 4.0 * e2 / spec.T**2
    if val.ndim == 0:
        return float(val), float(d1), float(d2)
    return val, d1, d2


def eta(spec: CutoffSpec, t):
    return eta_derivatives(spec, t)[0]


def cutoff_constant(p: float, A: float, samples: int = 20001) -> dict:
    """Sup-norms of the cutoff combinations that the weak form produces (T = 1 scale).

    With q = 2p':  d_t^2 eta^q = eta^(q-2) (q eta eta'' + q (q-1) eta'^2) and
    d_t eta^q = eta^(q-2) q eta eta', where eta^(q-2) = eta^(2p'/p).
    """
    q = 2.0 * p / (p - 1.0)
    s = np.linspace(0.5, 1.0, samples)
    e, e1, e2 = eta_derivatives(CutoffSpec(1.0), s)
    k_tt = float(np.max(np.abs(q * e * e2 + q * (q - 1) * e1**2)))
    k_t = float(np.max(np.abs(q * e * e1)))
    return {"k_tt": k_tt, "k_damp": A * k_t, "k_cross": 2.0 * k_t, "K": max(k_tt, A * k_t, 2.0 * k_t)}


def c_fg(data: InitialData, params: ProblemParams, lam: float, beta: float) -> float:
    """int (g + A f / r) Psi_beta(0) - f d_t Psi_beta(0) dx, with r^(rho+n-2) as a quadrature weight."""
    spec = TestFunctionSpec(params, beta, lam)
    n, A, rho = params.n, params.A, params.rho
    a = rho + n - 2.0
    if a <= -1.0:
        raise ValueError("data functional diverges at the origin (rho + n - 2 <= -1)")
    up = spec.with_beta(beta + 1.0)

    def integrand(r):
        rr = np.array(r)
        g = float(data.g(rr))
        f = 0.0 if data.f_is_zero else float(data.f(rr))
        val = (r * g + A * f) * phi(spec, 0.0, r)
        if f and beta:
            val += beta * r * f * phi(up, 0.0, r)  # -f d_t Psi = beta f Psi_{beta+1}
        return val

    val, _ = quad(integrand, 0.0, data.support, weight="alg", wvar=(a, 0.0), limit=200,
                  epsabs=0.0, epsrel=1e-11)
    return sphere_area(n) * val


def _radial_weights(solution) -> tuple[np.ndarray, np.ndarray]:
    """(r, dr-weights) for the points where ``solution.u_at`` samples u."""
    if hasattr(solution, "grid"):
        r = solution.r
        return r, np.full_like(r, solution.grid.dr)  # midpoint rule on cell centres
    r = solution.r[1:]
    w = np.full_like(r, solution.h)
    w[-1] *= 0.5
    return r, w


def _weighted_u(solution, params: ProblemParams, spec: TestFunctionSpec, t: float) -> float:
    """int |u(t)|^p Psi_beta(t) dx (no cutoff)."""
    try:
        u = solution.u_at(t)
    except ValueError as exc:
        raise ValueError(f"solution not available at t = {t}") from exc
    r, w = _radial_weights(solution)
    live = (u != 0) & (r < t + spec.lam)
    if not np.any(live):
        return 0.0
    ps = psi(spec, np.full(np.count_nonzero(live), t), r[live])
    up = np.abs(u[live]) ** params.p
    return sphere_area(params.n) * float(np.sum(w[live] * up * ps * r[live] ** (params.n - 1)))


def g_beta(solution, params: ProblemParams, spec: TestFunctionSpec, t: float, T: float) -> float:
    """G_beta(t; T) = int |u|^p eta_T^(2p') Psi_beta dx."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t >= T:
        return 0.0
    e = eta(CutoffSpec(T), t)
    if e == 0.0:
        return 0.0
    return e ** (2.0 * params.p_dual) * _weighted_u(solution, params, spec, t)


def g_beta_series(solution, params: ProblemParams, spec: TestFunctionSpec, times) -> np.ndarray:
    """int |u(t)|^p Psi_beta(t) dx on a time grid; G_beta(t; T) is this times eta_T(t)^(2p').

    Psi is evaluated once on all (t, r) pairs where u is nonzero.
    """
    times = np.asarray(times, dtype=float)
    r, w = _radial_weights(solution)
    try:
        U = np.array([solution.u_at(float(t)) for t in times])
    except ValueError as exc:
        raise ValueError(f"solution not available on [{times.min()}, {times.max()}]") from exc
    Tm = np.broadcast_to(times[:, None], U.shape)
    Rm = np.broadcast_to(r[None, :], U.shape)
    live = (U != 0) & (Rm < Tm + spec.lam)
    dens = np.zeros_like(U)
    if np.any(live):
        dens[live] = np.abs(U[live]) ** params.p * psi(spec, Tm[live], Rm[live])
    return sphere_area(params.n) * (dens * (w * r ** (params.n - 1))).sum(axis=1)


# ---------------------------------------------------------------- S(T; beta1, beta)

_GL = 20


def _graded_unit(levels: int = 40, nodes: int = _GL):
    """Gauss-Legendre on [0, 1] with geometric panels toward both endpoints."""
    brk = [0.0] + [2.0 ** (-k) for k in range(levels, 1, -1)] + [0.5]
    brk = brk + [1.0 - b for b in reversed(brk[:-1])]
    brk = np.array(brk)
    x, w = roots_legendre(nodes)
    lo, hi = brk[:-1, None], brk[1:, None]
    pts = lo + (hi - lo) * (1 + x) / 2
    wts = (hi - lo) / 2 * w
    return pts.ravel(), wts.ravel()


def _t_rule(T: float, panels: int = 4, nodes: int = _GL):
    x, w = roots_legendre(nodes)
    brk = np.linspace(T / 2, T, panels + 1)
    lo, hi = brk[:-1, None], brk[1:, None]
    return (lo + (hi - lo) * (1 + x) / 2).ravel(), ((hi - lo) / 2 * w).ravel()


def s_terms(params: ProblemParams, T: float, beta1: float, beta: float, lam: float = 2.0,
            levels: int = 40, t_panels: int = 4) -> tuple[float, float, float]:
    """The three terms of S(T; beta1, beta) (each already raised to 1/p' and scaled by T)."""
    n, p, rho = params.n, params.p, params.rho
    q = params.p_dual
    if not T >= 1:
        raise ValueError("S is defined for T >= 1")
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    spec_b = TestFunctionSpec(params, beta, lam)
    if beta_regime(spec_b) >= 0:
        raise ValueError("S needs beta < gamma - alpha")
    if not q < n + rho:
        raise ValueError("r^-p' term not integrable at the origin: need p > (n+rho)/(n+rho-1)")
    spec_1 = TestFunctionSpec(params, beta1, lam)
    ts, wt = _t_rule(T, t_panels)
    xs, wx = _graded_unit(levels)
    Tg, X = np.meshgrid(ts, xs, indexing="ij")
    R = (1.0 + Tg) * X
    W = wt[:, None] * wx[None, :] * (1.0 + Tg) * sphere_area(n) * R ** (n - 1)
    # the r^rho factors combine to r^(rho (q - q/p)) = r^rho; use phi to avoid 0 * inf at small r
    ph1 = phi(spec_1, Tg, R)
    phb = phi(spec_b, Tg, R)
    base = R**rho * ph1**q * phb ** (-q / p)
    t1 = float(np.sum(W * base)) ** (1.0 / q) / T**2
    t2 = float(np.sum(W * R ** (-q) * base)) ** (1.0 / q) / T
    if beta1 == 0:
        t3 = 0.0
    else:
        dt = np.abs(beta1) * phi(spec_1.with_beta(beta1 + 1.0), Tg, R)
        t3 = float(np.sum(W * R**rho * dt**q * phb ** (-q / p))) ** (1.0 / q) / T
    return t1, t2, t3


def s_functional(params: ProblemParams, T: float, beta1: float, beta: float, lam: float = 2.0,
                 **kw) -> float:
    return float(sum(s_terms(params, T, beta1, beta, lam, **kw)))


# ---------------------------------------------------------------- H_beta


@dataclass
class HBetaResult:
    T: float
    H: float
    T_dH: float  # T H'(T) by central differences of H
    window: float  # int_{T/2}^T G(t; T) dt
    full: float  # int_0^T G(t; T) dt

    @property
    def identity_residual(self) -> float:
        return abs(self.T_dH - self.window) / max(abs(self.window), 1e-300)


def _gl_rule(a, b, panels: int, nodes: int = _GL):
    """Composite Gauss-Legendre on [a, b]; a and b may be arrays (broadcast on a new last axis)."""
    x, w = roots_legendre(nodes)
    u = (np.arange(panels)[:, None] + (1 + x[None, :]) / 2).ravel() / panels
    wu = np.tile(w / (2 * panels), panels)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    return a + (b - a) * u, (b - a) * wu


def h_beta_series(G, T: float, dT: float | None = None, panels: int = 32) -> HBetaResult:
    """H(T) = int_0^T (1/t) int_{t/2}^t G(s; t) ds dt for a vectorized ``G(s, t)``, plus T H'(T).

    H'(T) is taken by a fourth-order central difference of H itself, so the
    comparison with int_{T/2}^T G(t; T) dt is a genuine check.
    """
    def H(Tv):
        t, wt = _gl_rule(0.0, Tv, panels)
        s, ws = _gl_rule(t / 2, t, panels)
        inner = np.sum(ws * G(s, t[..., None]), axis=-1)
        return float(np.sum(wt * inner / t))

    def window(a):
        s, ws = _gl_rule(a, T, panels)
        return float(np.sum(ws * G(s, np.full_like(s, T))))

    dT = 1e-2 * T if dT is None else dT
    hs = [H(T + k * dT) for k in (-2, -1, 1, 2)]
    dH = (hs[0] - 8 * hs[1] + 8 * hs[2] - hs[3]) / (12 * dT)
    return HBetaResult(T=T, H=H(T), T_dH=T * dH, window=window(T / 2), full=window(0.0))


def solution_g_evaluator(solution, params: ProblemParams, spec: TestFunctionSpec, t_max: float,
                         dt: float = 0.05):
    """Callable ``G(s, t) = eta_t(s)^(2p') int |u(s)|^p Psi_beta dx`` from a computed solution.

    The cutoff-free integral is tabulated on [0, t_max] and splined in s.
    """
    times = np.linspace(0.0, t_max, int(round(t_max / dt)) + 1)
    base = CubicSpline(times, g_beta_series(solution, params, spec, times))
    two_q = 2.0 * params.p_dual

    def G(s, t):
        s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
        x = np.where(t > 0, 2.0 * s / np.where(t > 0, t, 1.0) - 1.0, 1.0)
        cut = np.where(x <= 0, 1.0, 0.0)
        mid = (x > 0) & (x < 1)
        if np.any(mid):
            cut[mid] = _step(x[mid])[0]
        return cut**two_q * base(np.clip(s, 0.0, t_max))

    return G


__all__.append("solution_g_evaluator")


# ---------------------------------------------------------------- master inequality


@dataclass
class MasterInequality:
    T: list
    lhs: list  # eps C_fg(beta1) + int_0^T G_beta1
    rhs: list  # (int_{T/2}^T G_beta)^(1/p) S(T; beta1, beta)
    K_fit: float  # max lhs / rhs
    K_bound: float  # explicit constant from the cutoff

    @property
    def holds(self) -> bool:
        return self.K_fit <= self.K_bound

    def to_dict(self) -> dict:
        return {"T": self.T, "lhs": self.lhs, "rhs": self.rhs, "K_fit": self.K_fit,
                "K_bound": self.K_bound, "holds": self.holds}


def _trapz(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def master_inequality(solution, params: ProblemParams, data: InitialData, beta1: float,
                      beta: float, Ts=(2, 4, 8, 16), lam: float = 2.0, dt: float = 0.01) -> MasterInequality:
    """Evaluate both sides of the integrated weak form for each T.

    The right side omits the constant; ``K_bound`` is the constant that the
    chain rule on eta_T^(2p') and Hoelder's inequality produce, so the
    inequality is verified (not merely fitted) when ``K_fit <= K_bound``.
    """
    spec1 = TestFunctionSpec(params, beta1, lam)
    specb = TestFunctionSpec(params, beta, lam)
    q2 = 2.0 * params.p_dual
    cfg = params.epsilon * c_fg(data, params, lam, beta1)
    lhs, rhs = [], []
    for T in Ts:
        times = np.linspace(0.0, T, int(round(T / dt)) + 1)
        e = eta(CutoffSpec(T), times) ** q2
        g1 = e * g_beta_series(solution, params, spec1, times)
        lhs.append(cfg + _trapz(g1, times))
        win = times[times >= T / 2]
        gb = eta(CutoffSpec(T), win) ** q2 * g_beta_series(solution, params, specb, win)
        rhs.append(_trapz(gb, win) ** (1.0 / params.p) * s_functional(params, T, beta1, beta, lam))
    ratios = [a / b for a, b in zip(lhs, rhs)]
    return MasterInequality(list(Ts), lhs, rhs, max(ratios), cutoff_constant(params.p, params.A)["K"])

"""Blow-up of the scalar integral / differential inequalities, integrated as equalities.

Volterra system (unit constants allowed, any kappa <= 1)::

    f(y) = C1 eps^a + C2 eps^b int_1^y (1 - eta/y) f(eta)^p eta^-kappa d eta

Logarithmic systems in s = ln T, started from I(1) = 0::

    strauss-crit:  I' = max(eps^p, I^p s^(1-p))
    fujita-crit:   I' = max(eps^p, I^p)
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exponents import ProblemParams

__all__ = [
    "LogOdiResult",
    "OdiConfig",
    "VolterraResult",
    "log_odi_critical",
    "lower_bound_functional",
    "p_star",
    "predicted_odi_slope",
    "volterra_blowup",
]

VOLTERRA_THRESHOLD = 1e10


@dataclass(frozen=True)
class OdiConfig:
    C1: float = 1.0
    C2: float = 1.0
    alpha_odi: float = 1.0
    beta_odi: float = 0.0
    p: float = 2.0
    kappa: float = 0.5
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0):
            raise ValueError("C1 and C2 must be positive")
        if self.alpha_odi < 0 or self.beta_odi < 0:
            raise ValueError("alpha_odi and beta_odi must be non-negative")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.kappa <= 1:
            raise ValueError("kappa must not exceed 1")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")

    def with_epsilon(self, eps: float) -> "OdiConfig":
        return OdiConfig(self.C1, self.C2, self.alpha_odi, self.beta_odi, self.p, self.kappa, eps)


def predicted_odi_slope(cfg: OdiConfig) -> tuple[float, str]:
    """(slope, mode): slope of log T* (kappa < 1) or log log T* (kappa = 1) against log eps."""
    e = (cfg.p - 1) * cfg.alpha_odi + cfg.beta_odi
    if cfg.kappa < 1:
        return -e / (1 - cfg.kappa), "log-log"
    return -e, "loglog-log"


@dataclass
class VolterraResult:
    epsilon: float
    log_T_star: float | None  # ln T*; T* itself overflows for kappa = 1 at small eps
    censored: bool
    certified: bool  # last doubling of f shorter than 1e-6 of T*
    doubling_fraction: float | None
    steps: int

    @property
    def T_star(self) -> float | None:
        if self.log_T_star is None:
            return None
        return math.exp(self.log_T_star) if self.log_T_star < 700 else math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["T_star"] = self.T_star
        return d


def volterra_blowup(cfg: OdiConfig, y_max: float = math.inf, mesh_ratio: float = 1.02,
                    threshold: float = VOLTERRA_THRESHOLD, log_y_max: float | None = None,
                    max_steps: int = 10_000_000) -> VolterraResult:
    """First y with f(y) >= threshold on a geometric mesh (uniform in z = ln y).

    With z = ln y the equation reads

        f(z) = a + b int_0^z (1 - e^(zeta - z)) f^p e^((1-kappa) zeta) d zeta
             = a + b (P(z) - R(z)),

    P = int q, R = int e^(zeta - z) q, q = f^p e^((1-kappa) zeta). On each
    step q is interpolated exponentially between nodes and integrated exactly
    against both kernels; the resulting scalar equation for the new node is
    solved by a trapezoid predictor and a few fixed-point corrections.
    Once f > 10 f(1) the step is also limited so that f grows by at most a
    factor ``mesh_ratio`` per step (df/dz = b R).
    """
    eps = cfg.epsilon
    a = cfg.C1 * eps**cfg.alpha_odi
    b = cfg.C2 * eps**cfg.beta_odi
    p, k1 = cfg.p, 1.0 - cfg.kappa
    z_max = (math.log(y_max) if math.isfinite(y_max) else math.inf) if log_y_max is None else log_y_max
    if a >= threshold:
        return VolterraResult(eps, 0.0, False, True, 0.0, 0)
    h0 = math.log(mesh_ratio)
    z, f = 0.0, a
    q = f**p
    P = R = 0.0
    hist_z, hist_f = [z], [f]
    steps = 0
    while True:
        h = h0
        if f > 10 * a and R > 0:
            h = min(h0, h0 * f / (b * R))  # relative growth <= h0 per step
        if z + h > z_max:
            h = z_max - z
            if h <= 0:
                return VolterraResult(eps, None, True, False, None, steps)
        decay = math.exp(-h)
        # predictor: trapezoid, whose kernel weight vanishes at the new node
        f_new = a + b * (P - decay * R + 0.5 * h * q * (1 - decay))
        # corrector: product integration with q interpolated exponentially,
        # which is exact for the e^((1-kappa) z) growth of the linear phase
        for _ in range(3):
            q_new = f_new**p * math.exp(k1 * (z + h)) if math.isfinite(f_new) else math.inf
            if not math.isfinite(q_new):
                break
            g = math.log(q_new / q) / h
            e0, e1 = _e1(g, h), _e1(g + 1.0, h)
            f_next = a + b * (P - decay * R + q * (e0 - decay * e1))
            done = abs(f_next - f_new) <= 1e-13 * abs(f_next)
            f_new = f_next
            if done:
                break
        z_new = z + h
        q_new = f_new**p * math.exp(k1 * z_new) if math.isfinite(f_new) else math.inf
        if math.isfinite(q_new):
            g = math.log(q_new / q) / h
            P_new = P + q * _e1(g, h)
            R_new = decay * (R + q * _e1(g + 1.0, h))
        else:
            P_new = R_new = math.inf
        steps += 1
        if f_new >= threshold or not math.isfinite(f_new) or steps >= max_steps:
            w = (math.log(threshold) - math.log(f)) / (math.log(f_new) - math.log(f)) if math.isfinite(f_new) else 1.0
            z_star = z + min(max(w, 0.0), 1.0) * h
            hist_z.append(z_new)
            hist_f.append(f_new)
            frac = _doubling_fraction(np.array(hist_z), np.array(hist_f), threshold, z_star)
            return VolterraResult(eps, z_star, False, frac is not None and frac < 1e-6, frac, steps)
        z, f, q, P, R = z_new, f_new, q_new, P_new, R_new
        hist_z.append(z)
        hist_f.append(f)


def _e1(x: float, h: float) -> float:
    """int_0^h e^(x t) dt."""
    xh = x * h
    return h * math.expm1(xh) / xh if abs(xh) > 1e-12 else h


def _doubling_fraction(zs, fs, threshold, z_star):
    """(T* - y_half) / T* where f(y_half) = threshold / 2."""
    half = threshold / 2
    idx = np.nonzero(fs >= half)[0]
    if len(idx) == 0 or idx[0] == 0:
        return None
    j = idx[0]
    w = (math.log(half) - math.log(fs[j - 1])) / (math.log(fs[j]) - math.log(fs[j - 1]))
    z_half = zs[j - 1] + w * (zs[j] - zs[j - 1])
    return -math.expm1(z_half - z_star)


# ---------------------------------------------------------------- logarithmic systems


@dataclass
class LogOdiResult:
    mode: str
    epsilon: float
    p: float
    s_star: float  # blow-up abscissa; the lifespan surrogate is exp(s_star)
    s_switch: float  # where the nonlinear branch takes over

    def to_dict(self) -> dict:
        return asdict(self)


def log_odi_critical(mode: str, epsilon: float, p: float, rtol: float = 1e-11) -> LogOdiResult:
    """Blow-up abscissa of the critical-case logarithmic system.

    Integrated in sigma = ln s, so the linear phase (which may last up to
    s ~ eps^-p(p-1)) takes a bounded number of steps. Up to the switch to the
    nonlinear branch the unknown is I; afterwards it is J = I^(1-p), which
    decreases smoothly to 0 at blow-up, so no stiff final approach is needed.
    """
    if mode not in ("strauss-crit", "fujita-crit"):
        raise ValueError(f"unknown mode {mode!r}")
    if not p > 1:
        raise ValueError("p must exceed 1")
    ep = epsilon**p
    strauss = mode == "strauss-crit"

    def weight(sig):
        return math.exp(sig * (1 - p)) if strauss else 1.0

    def rhs_I(sig, y):
        I = max(y[0], 0.0)
        return [math.exp(sig) * max(ep, I**p * weight(sig))]

    def switch(sig, y):
        return max(y[0], 0.0) ** p * weight(sig) - ep

    switch.terminal = True
    switch.direction = 1
    s1 = solve_ivp(rhs_I, (0.0, 1e4), [0.0], method="DOP853", events=switch,
                   rtol=rtol, atol=1e-12 * ep)
    if not s1.t_events[0].size:
        raise RuntimeError("log ODI never reached the nonlinear branch")
    sig_c = float(s1.t_events[0][0])
    I_c = float(s1.y_events[0][0][0])

    q = p / (p - 1)

    def rhs_J(sig, y):
        J = max(y[0], 0.0)
        return [(1 - p) * math.exp(sig) * max(ep * J**q, weight(sig))]

    def zero(sig, y):
        return y[0]

    zero.terminal = True
    zero.direction = -1
    J0 = I_c ** (1 - p)
    s2 = solve_ivp(rhs_J, (sig_c, 1e4), [J0], method="DOP853", events=zero,
                   rtol=rtol, atol=1e-14 * J0)
    if not s2.t_events[0].size:
        raise RuntimeError("log ODI did not blow up")
    return LogOdiResult(mode, epsilon, p, math.exp(float(s2.t_events[0][0])), math.exp(sig_c))


# ---------------------------------------------------------------- lower-bound functional


def p_star(params: ProblemParams) -> float:
    n, A, p = params.n, params.A, params.p
    return 0.5 * ((n + A - 1) * p - (n + A + 1))


def lower_bound_functional(solution, params: ProblemParams, ys) -> dict:
    """f(y) = inf over grid points of Omega_y of rho^((n+A-1)/2) (s - rho)^p* u(s, rho).

    Omega_y = {0 <= s <= 2 rho, s - rho >= y}, restricted to the snapshots
    and radial nodes the solution provides.
    """
    n, A = params.n, params.A
    m = (n + A - 1) / 2.0
    ps = p_star(params)
    if hasattr(solution, "times"):
        times = np.asarray(solution.times)
        U = np.array([solution.u(k) for k in range(len(times))])
        r = solution.r
    else:
        times = solution.t
        U = solution.u[:, 1:]
        r = solution.r[1:]
    S, Rr = np.meshgrid(times, r, indexing="ij")
    vals = Rr**m * np.where(S > Rr, S - Rr, 1.0) ** ps * U
    out = []
    for y in ys:
        if y < 1:
            raise ValueError("y must be >= 1")
        mask = (S <= 2 * Rr) & (S - Rr >= y)
        if not np.any(mask):
            raise ValueError(f"Omega_y is empty on the computed range for y = {y} (need t_max >= 2y)")
        out.append(float(np.min(vals[mask])))
    return {"y": [float(y) for y in ys], "f": out, "p_star": ps}


# ---------------------------------------------------------------- epsilon sweeps

ODI_MODES = ("volterra", "strauss-crit", "fujita-crit")


@dataclass(frozen=True)
class OdiRecord:
    epsilon: float
    log_T_star: float | None  # ln T*; None when censored
    censored: bool

    @property
    def T_star(self) -> float | None:
        if self.log_T_star is None:
            return None
        return math.exp(self.log_T_star) if self.log_T_star < 700 else math.inf


def _odi_one(mode: str, cfg: OdiConfig, eps: float) -> OdiRecord:
    if mode == "volterra":
        r = volterra_blowup(cfg.with_epsilon(eps))
        return OdiRecord(eps, r.log_T_star, r.censored)
    r = log_odi_critical(mode, eps, cfg.p)
    return OdiRecord(eps, r.s_star, False)  # s is already ln T


def odi_sweep(mode: str, cfg: OdiConfig, eps_grid, workers: int = 1) -> list[OdiRecord]:
    """One integration per epsilon, sorted by epsilon descending."""
    if mode not in ODI_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {ODI_MODES}")
    eps = sorted({float(e) for e in eps_grid}, reverse=True)
    if workers > 1 and len(eps) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=min(workers, len(eps))) as pool:
            recs = list(pool.map(_odi_one, [mode] * len(eps), [cfg] * len(eps), eps))
    else:
        recs = [_odi_one(mode, cfg, e) for e in eps]
    return recs


def predicted_slope_for(mode: str, cfg: OdiConfig) -> tuple[float, str]:
    if mode == "volterra":
        return predicted_odi_slope(cfg)
    p = cfg.p
    return (-p * (p - 1), "loglog-log") if mode == "strauss-crit" else (-(p - 1), "loglog-log")


@dataclass
class OdiFit:
    mode: str
    coordinates: str
    slope: float
    intercept: float
    r_squared: float
    predicted: float
    deviation: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def fit_odi(mode: str, cfg: OdiConfig, records) -> OdiFit:
    from .sweep import LifespanScalingFit

    pts = [(r.epsilon, r.log_T_star) for r in records if not r.censored and r.log_T_star is not None]
    if len(pts) < 4:
        raise ValueError(f"insufficient data: {len(pts)} uncensored records (need >= 4)")
    pred, coords = predicted_slope_for(mode, cfg)
    eps, logT = map(np.array, zip(*pts))
    # regress on ln T directly: T itself overflows in the loglog cases
    y = np.exp(logT) if coords == "log-log" else logT
    est = LifespanScalingFit(mode="log-log").fit(eps, y)
    return OdiFit(mode, coords, float(est.slope_), float(est.intercept_), float(est.r_squared_),
                  pred, abs(est.slope_ - pred) / abs(pred), len(pts))


__all__ += ["ODI_MODES", "OdiFit", "OdiRecord", "fit_odi", "odi_sweep", "predicted_slope_for"]

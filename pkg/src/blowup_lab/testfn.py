"""Radial solutions of the adjoint equation built from hypergeometric profiles.

    Psi_beta(t, r; lam) = r^rho (t + r + lam)^(-beta) F(alpha, beta, gamma; 2r/(t + r + lam))

solves ``Psi_tt - A r^-1 Psi_t - Delta Psi + B r^-2 Psi = 0`` on
``Q_lam = {t + lam > r}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln

from .exponents import ProblemParams
from .hypergeom import hyp2f1

__all__ = [
    "Z_CAP",
    "TestFunctionSpec",
    "adjoint_residual",
    "beta_regime",
    "envelope",
    "phi",
    "psi",
    "psi_dt",
    "residual_convergence",
]

# beyond this z the profile is replaced by its leading behaviour at z = 1
Z_CAP = 1.0 - 1e-6
_REGIME_TOL = 1e-9


@dataclass(frozen=True)
class TestFunctionSpec:
    params: ProblemParams
    beta: float
    lam: float = 2.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError(f"lambda must exceed 1, got {self.lam}")

    def with_beta(self, beta: float) -> "TestFunctionSpec":
        return TestFunctionSpec(self.params, beta, self.lam)

    @property
    def gap(self) -> float:
        """gamma - alpha, the threshold separating the three boundary regimes."""
        return self.params.gamma - self.params.alpha


def beta_regime(spec: TestFunctionSpec) -> int:
    """-1, 0 or +1 as beta is below, at, or above gamma - alpha."""
    d = spec.beta - spec.gap
    if abs(d) <= _REGIME_TOL:
        return 0
    return -1 if d < 0 else 1


def _domain(spec, t, r):
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(t < 0) or np.any(r < 0) or np.any(r >= t + spec.lam):
        raise ValueError("point outside Q_lambda (need t >= 0 and 0 <= r < t + lambda)")
    return np.broadcast_arrays(t, r)


def _profile_near_one(spec: TestFunctionSpec, z: np.ndarray) -> np.ndarray:
    """Leading behaviour of F(alpha, beta, gamma; z) as z -> 1."""
    a, b, c = spec.params.alpha, spec.beta, spec.params.gamma
    regime = beta_regime(spec)
    if regime < 0:
        # Gauss summation: finite limit
        val = math.exp(gammaln(c) + gammaln(c - a - b) - gammaln(c - a) - gammaln(c - b))
        return np.full_like(z, val)
    lead = math.exp(gammaln(c) - gammaln(a) - gammaln(b))
    if regime == 0:
        # logarithmic case a + b = c
        const = 2 * digamma(1.0) - digamma(a) - digamma(b)
        return lead * (-np.log1p(-z) + const)
    return lead * math.exp(gammaln(a + b - c)) * (1.0 - z) ** (c - a - b)


def phi(spec: TestFunctionSpec, t, r, return_flag: bool = False):
    """``Psi_beta / r^rho``; smooth up to r = 0."""
    t, r = _domain(spec, t, r)
    s = t + r + spec.lam
    z = np.clip(2.0 * r / s, 0.0, None)
    beta = spec.beta
    a, c = spec.params.alpha, spec.params.gamma
    asym = z > Z_CAP
    prof = np.empty_like(z)
    if beta == 0:
        prof[...] = 1.0
        asym = np.zeros_like(asym)
    else:
        if np.any(~asym):
            prof[~asym] = hyp2f1(a, beta, c, z[~asym])
        if np.any(asym):
            prof[asym] = _profile_near_one(spec, z[asym])
    out = s ** (-beta) * prof
    if out.ndim == 0:
        out = float(out)
        asym = bool(asym)
    return (out, asym) if return_flag else out


def _rpow(r: np.ndarray, rho_: float) -> np.ndarray:
    if rho_ == 0:
        return np.ones_like(r)
    with np.errstate(divide="ignore"):
        out = np.power(r, rho_)
    if rho_ < 0:
        out = np.where(r == 0, np.inf, out)  # pole marker
    return out


def psi(spec: TestFunctionSpec, t, r, return_flag: bool = False):
    """Psi_beta(t, r; lambda). At r = 0 returns 0 (rho > 0), the limit (rho = 0) or inf (rho < 0)."""
    val, flag = phi(spec, t, r, return_flag=True)
    rr = np.broadcast_to(np.asarray(r, dtype=float), np.shape(val))
    out = _rpow(rr, spec.params.rho) * val
    if np.ndim(out) == 0:
        out = float(out)
    return (out, flag) if return_flag else out


def psi_dt(spec: TestFunctionSpec, t, r):
    """Time derivative via ``d/dt Psi_beta = -beta Psi_{beta+1}``."""
    if spec.beta == 0:
        t, r = _domain(spec, t, r)
        out = np.zeros_like(t)
        return float(out) if out.ndim == 0 else out
    return -spec.beta * psi(spec.with_beta(spec.beta + 1), t, r)


def envelope(spec: TestFunctionSpec, t, r):
    """Two-sided comparison function for Psi_beta in each of the three beta regimes."""
    t, r = _domain(spec, t, r)
    w = r / (spec.lam + t)
    base = _rpow(r, spec.params.rho) * (spec.lam + t) ** (-spec.beta)
    regime = beta_regime(spec)
    if regime < 0:
        out = base
    elif regime == 0:
        out = base * (1.0 - np.log1p(-w))
    else:
        out = base * (1.0 - w) ** (spec.gap - spec.beta)
    return float(out) if np.ndim(out) == 0 else out


def _adjoint_apply(spec, t0, t1, r0, r1, h, operator_B):
    nt = int(round((t1 - t0) / h))
    nr = int(round((r1 - r0) / h))
    tt = t0 + h * np.arange(-1, nt + 2)
    rr = r0 + h * np.arange(-1, nr + 2)
    T, R = np.meshgrid(tt, rr, indexing="ij")
    P = psi(spec, T, R)
    A, n = spec.params.A, spec.params.n
    c = P[1:-1, 1:-1]
    rc = R[1:-1, 1:-1]
    p_tt = (P[2:, 1:-1] - 2 * c + P[:-2, 1:-1]) / h**2
    p_t = (P[2:, 1:-1] - P[:-2, 1:-1]) / (2 * h)
    p_rr = (P[1:-1, 2:] - 2 * c + P[1:-1, :-2]) / h**2
    p_r = (P[1:-1, 2:] - P[1:-1, :-2]) / (2 * h)
    res = p_tt - A / rc * p_t - p_rr - (n - 1) / rc * p_r + operator_B / rc**2 * c
    return res, c


def adjoint_residual(spec: TestFunctionSpec, window, h: float, r_min: float | None = None,
                     operator_B: float | None = None) -> float:
    """max |P* Psi| / max |Psi| over ``window = (t0, t1, r0, r1)`` with second-order differences.

    ``operator_B`` overrides the potential coefficient in the operator while
    Psi keeps its own rho (a deliberately inconsistent negative control).
    """
    t0, t1, r0, r1 = window
    r_min = 10 * h if r_min is None else r_min
    if r0 < r_min:
        raise ValueError(f"window reaches r = {r0} < r_min = {r_min}")
    if t0 - h < 0 or r1 + h >= t0 - h + spec.lam:
        raise ValueError("window stencil touches the boundary of Q_lambda")
    B = spec.params.B if operator_B is None else operator_B
    res, c = _adjoint_apply(spec, t0, t1, r0, r1, h, B)
    return float(np.max(np.abs(res)) / np.max(np.abs(c)))


def residual_convergence(spec: TestFunctionSpec, window, h: float, levels: int = 3,
                         operator_B: float | None = None) -> dict:
    """Residuals at h, h/2, ... and the observed orders log2(res(h)/res(h/2))."""
    hs = [h / 2**k for k in range(levels)]
    # r_min is pinned to the coarsest step so every level sees the same window
    res = [adjoint_residual(spec, window, hk, r_min=10 * h, operator_B=operator_B) for hk in hs]
    ratios = [res[k] / res[k + 1] if res[k + 1] > 0 else math.nan for k in range(levels - 1)]
    return {
        "h": hs,
        "residual": res,
        "ratio": ratios,
        "order": [math.log2(q) if q > 0 else math.nan for q in ratios],
    }

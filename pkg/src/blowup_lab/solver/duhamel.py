"""Picard iteration on the integral form of the radial problem.

With ``m = (n+A-1)/2`` and ``W = r^m u``,

    W(t, r) = eps int_{|r-t|}^{r+t} g(rho) K(t, r, rho) rho^m drho
            + int_0^t int_{|r-t+s|}^{r+t-s} N(s, rho) K(t-s, r, rho) rho^m drho ds,

    K(t, r, rho) = 2^(-1-A) rho^(-A) (rho + r - t)^A,
    N = (Bt - B) rho^-2 u + |u|^p,    Bt = (A^2 + 2A - (n-1)(n-3)) / 4.

Uniform grid ``t_i = i h``, ``rho_j = j h`` (origin included). The inner
rho-integral and the outer s-integral are trapezoid rules; all limits fall
on grid points. The kernel depends on ``t - s`` only, so one tensor
``G[j, d, l]`` indexed by target ``j``, lag ``d = i - k`` and source ``l``
serves every time level and every Picard sweep.

Requires ``f = 0`` and ``n + A > 1`` (so that ``W(t, 0) = 0``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..data import InitialData
from ..exponents import ProblemParams
from .grid import Status

__all__ = ["DuhamelSolution", "duhamel_solve", "kernel", "linear_part"]

K_CAP = 1e6


def kernel(t, r, rho, A: float):
    """K(t, r, rho); bounded by 1/2 on the integration region."""
    t, r, rho = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (t, r, rho)))
    if A == 0:
        return np.full(t.shape, 0.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rho > 0, (rho + r - t) / rho, 1.0)
    return 2.0 ** (-1.0 - A) * np.clip(ratio, 0.0, None) ** A


@dataclass
class DuhamelSolution:
    params: ProblemParams
    h: float
    t: np.ndarray
    r: np.ndarray  # includes the origin
    W: np.ndarray  # shape (len(t), len(r))
    status: str
    iterations: int
    history: list = field(default_factory=list)  # sup-norm increments per sweep
    min_iterate: list = field(default_factory=list)  # min W per sweep (positivity audit)
    kernel_clamped: int = 0

    @property
    def m(self) -> float:
        return (self.params.n + self.params.A - 1) / 2.0

    @property
    def u(self) -> np.ndarray:
        """u on r > 0 (column 0, the origin, is NaN)."""
        out = np.full_like(self.W, np.nan)
        out[:, 1:] = self.W[:, 1:] * self.r[1:] ** (-self.m)
        return out

    def u_at(self, t: float) -> np.ndarray:
        """u(t, r_j) for r_j > 0, linear in time between levels."""
        i = t / self.h
        k = int(math.floor(i + 1e-12))
        if k < 0 or k > len(self.t) - 1:
            raise ValueError(f"t = {t} outside [0, {self.t[-1]}]")
        w = i - k
        W = self.W[k] if (w < 1e-12 or k == len(self.t) - 1) else (1 - w) * self.W[k] + w * self.W[k + 1]
        return W[1:] * self.r[1:] ** (-self.m)


def _gauss_panel(lo, hi, nodes, weight_exp=0.0):
    """Nodes/weights on [lo, hi] for weight (x - lo)^weight_exp (broadcast over lo, hi)."""
    if weight_exp == 0:
        x, w = roots_legendre(nodes)
    else:
        x, w = roots_jacobi(nodes, 0.0, weight_exp)
    half = (hi - lo)[..., None] / 2.0
    pts = lo[..., None] + half * (1.0 + x)
    wts = w * half ** (1.0 + weight_exp)
    return pts, wts


def linear_part(params: ProblemParams, data: InitialData, t: np.ndarray, r: np.ndarray,
                nodes: int = 96) -> np.ndarray:
    """eps * int_{|r-t|}^{r+t} g(rho) K(t, r, rho) rho^m drho on the product grid t x r."""
    A = params.A
    m = (params.n + A - 1) / 2.0
    T, R = np.meshgrid(t, r, indexing="ij")
    lo = np.abs(R - T)
    hi = np.minimum(R + T, data.support)
    out = np.zeros_like(T)
    ok = hi > lo
    inside = ok & (R < T)  # factor (rho - lo)^A vanishes at the lower limit
    outside = ok & ~(R < T)
    for mask, jac in ((inside, A), (outside, 0.0)):
        if not np.any(mask):
            continue
        pts, wts = _gauss_panel(lo[mask], hi[mask], nodes, jac)
        tt = T[mask][:, None]
        rr = R[mask][:, None]
        g = np.asarray(data.g(pts), dtype=float)
        if jac:
            # (rho + r - t)^A = (rho - lo)^A is carried by the Jacobi weight
            kern = 2.0 ** (-1.0 - A) * pts ** (m - A)
        else:
            kern = kernel(tt, rr, pts, A) * pts**m
        out[mask] = np.sum(wts * g * kern, axis=1)
    return params.epsilon * out


def _lag_kernel(nt: int, nr: int, h: float, A: float, m: float):
    """G[j, d, l]: inner trapezoid weight times K(d h, j h, l h) times rho_l^m."""
    j = np.arange(nr)[:, None, None]
    d = np.arange(nt)[None, :, None]
    l = np.arange(nr)[None, None, :]
    lo = np.abs(j - d)
    hi = j + d
    w = np.where((l >= lo) & (l <= hi), h, 0.0)
    w = np.where((l == lo) | (l == hi), 0.5 * w, w)
    w = np.where(hi == lo, 0.0, w)
    rho = l * h
    K = kernel(d * h, j * h, rho, A)
    clamped = int(np.count_nonzero((K > K_CAP) & (w > 0)))
    K = np.minimum(K, K_CAP)
    G = w * K * rho**m
    G[:, 0, :] = 0.0
    return np.ascontiguousarray(G), clamped


def duhamel_solve(
    params: ProblemParams,
    data: InitialData,
    t_max: float,
    h: float,
    r_max: float | None = None,
    nonlinear: bool = True,
    tol: float = 1e-8,
    k_max: int = 200,
    divergence: float = 1e12,
) -> DuhamelSolution:
    """Fixed-point iteration ``W <- L + I[W]`` until ``|dW|_inf <= tol * |W|_inf``."""
    n, A, B, p = params.n, params.A, params.B, params.p
    if not data.f_is_zero:
        raise ValueError("the integral representation used here needs f = 0")
    if n + A <= 1:
        raise ValueError("need n + A > 1 so that W(t, 0) = 0")
    m = (n + A - 1) / 2.0
    nt = int(round(t_max / h)) + 1
    r_max = data.support + t_max + 4 * h if r_max is None else r_max
    nr = int(math.ceil(r_max / h)) + 1
    t = h * np.arange(nt)
    r = h * np.arange(nr)
    L = linear_part(params, data, t, r)
    G, clamped = _lag_kernel(nt, nr, h, A, m)
    drift = params.b_tilde - B
    # G carries rho^m, so the source is N itself written through W = rho^m u
    safe = np.where(r > 0, r, 1.0)
    pot = np.where(r > 0, drift * safe ** (-2.0 - m), 0.0)
    nl = np.where(r > 0, safe ** (-m * p), 0.0)

    def source(W):
        Q = pot * W
        if nonlinear:
            Q = Q + nl * np.abs(W) ** p
        Q[:, 0] = 0.0  # origin node dropped (its trapezoid weight multiplies rho^m u = 0 anyway)
        return Q

    def sweep(W):
        Q = source(W)
        Q[0] *= 0.5  # outer trapezoid end weight at s = 0
        out = L.copy()
        for i in range(1, nt):
            block = G[:, 1:i + 1, :].reshape(nr, i * nr)
            out[i] += h * (block @ Q[i - 1::-1].reshape(-1))
        return out

    W = np.zeros_like(L)
    history, mins = [], []
    status = Status.NOT_CONVERGED
    it = 0
    for it in range(1, k_max + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            W_new = sweep(W)
        size = float(np.max(np.abs(W_new)))
        if not math.isfinite(size) or size > divergence:
            W = W_new
            break
        inc = float(np.max(np.abs(W_new - W)))
        history.append(inc)
        mins.append(float(np.min(W_new)))
        W = W_new
        if inc <= tol * max(size, 1e-300):
            status = Status.COMPLETED
            break
    return DuhamelSolution(params, h, t, r, W, status, it, history, mins, clamped)

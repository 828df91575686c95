"""Gauss hypergeometric function F(alpha, beta, gamma; z) on 0 <= z < 1.

Two evaluation paths:

* ``"series"`` -- the hypergeometric power series, used for ``z <= Z_SWITCH``;
* ``"euler"`` -- the Euler integral

      F = Gamma(g) / (Gamma(a) Gamma(g-a)) * int_0^1 s^(a-1) (1-s)^(g-a-1) (1-zs)^(-b) ds

  evaluated with composite Gauss-Jacobi quadrature. Panels in ``u = 1 - s``
  halve toward ``u = 0`` until their width is comparable to ``1 - z``, so the
  near-singular factor ``(1-zs)^(-b)`` is resolved uniformly as ``z -> 1``.

Both endpoint singularities ``s^(a-1)`` and ``(1-s)^(g-a-1)`` are absorbed
into Jacobi weights, which requires ``gamma > alpha > 0``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import betaln, roots_jacobi, roots_legendre

__all__ = [
    "HypergeomTriple",
    "Z_SWITCH",
    "ContiguousCheck",
    "contiguous_shift",
    "gauss_f",
    "gauss_f_dz",
    "gauss_f_dz2",
    "hyp2f1",
]

Z_SWITCH = 0.5
_NODES = 24
_SERIES_MAX_TERMS = 5000


class HypergeomTriple(NamedTuple):
    alpha: float
    beta: float
    gamma: float

    def shifted(self, da: float = 0.0, db: float = 0.0, dg: float = 0.0) -> "HypergeomTriple":
        return HypergeomTriple(self.alpha + da, self.beta + db, self.gamma + dg)


def _check_params(a: float, c: float) -> None:
    if not a > 0:
        raise ValueError(f"alpha must be positive, got {a}")
    if not c > a:
        raise ValueError(f"gamma must exceed alpha, got gamma={c}, alpha={a}")


def _check_z(z: np.ndarray) -> None:
    if np.any(~np.isfinite(z)) or np.any(z < 0) or np.any(z >= 1):
        raise ValueError("z must lie in [0, 1)")


def _series(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(_SERIES_MAX_TERMS):
        term = term * ((a + k) * (b + k) / ((c + k) * (k + 1.0))) * z
        total = total + term
        if k > 4 and np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    else:
        raise RuntimeError("hypergeometric series did not converge")
    return total


@lru_cache(maxsize=512)
def _euler_rule(a: float, c: float, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``s`` and weights (including the two Jacobi factors) for ``levels`` halvings."""
    e_s = a - 1.0  # exponent of s
    e_u = c - a - 1.0  # exponent of u = 1 - s
    nodes, weights = [], []

    # s in [0, 1/2]: Jacobi weight s^(a-1), smooth factor u^(c-a-1)
    x, w = roots_jacobi(_NODES, 0.0, e_s)
    s = (1.0 + x) / 4.0
    nodes.append(s)
    weights.append(w * 4.0 ** (-a) * (1.0 - s) ** e_u)

    # u in [2^-(k+1), 2^-k], k = 1..levels-1: Gauss-Legendre
    xl, wl = roots_legendre(_NODES)
    for k in range(1, levels):
        lo, hi = 2.0 ** (-k - 1), 2.0 ** (-k)
        u = lo + (hi - lo) * (1.0 + xl) / 2.0
        s = 1.0 - u
        nodes.append(s)
        weights.append(wl * (hi - lo) / 2.0 * s**e_s * u**e_u)

    # u in [0, 2^-levels]: Jacobi weight u^(c-a-1), smooth factor s^(a-1)
    cw = 2.0 ** (-levels)
    x, w = roots_jacobi(_NODES, 0.0, e_u)
    u = cw * (1.0 + x) / 2.0
    s = 1.0 - u
    nodes.append(s)
    weights.append(w * (cw / 2.0) ** (c - a) * s**e_s)

    log_norm = -betaln(a, c - a)
    return np.concatenate(nodes), np.concatenate(weights) * math.exp(log_norm)


def _euler(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    # number of halvings so the innermost panel width is in [1-z, 2(1-z))
    levels = np.maximum(1, np.ceil(np.log2(1.0 / (1.0 - z)) - 1e-12)).astype(int)
    for lev in np.unique(levels):
        sel = levels == lev
        s, w = _euler_rule(float(a), float(c), int(lev))
        zz = z[sel][:, None]
        out[sel] = np.power(1.0 - zz * s[None, :], -b) @ w
    return out


def hyp2f1(a: float, b: float, c: float, z, method: str = "auto"):
    """F(a, b, c; z) for ``c > a > 0`` and ``0 <= z < 1``.

    ``method`` is ``"auto"`` (series up to ``Z_SWITCH``, Euler quadrature
    above), ``"series"`` or ``"euler"``. Scalars in, scalar out.
    """
    _check_params(a, c)
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zarr = np.atleast_1d(zarr)
    _check_z(zarr)
    if b == 0:
        out = np.ones_like(zarr)
    elif method == "series":
        out = _series(a, b, c, zarr)
    elif method == "euler":
        out = _euler(a, b, c, zarr)
    elif method == "auto":
        out = np.empty_like(zarr)
        low = zarr <= Z_SWITCH
        if np.any(low):
            out[low] = _series(a, b, c, zarr[low])
        if np.any(~low):
            out[~low] = _euler(a, b, c, zarr[~low])
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(out[0]) if scalar else out


def gauss_f(t: HypergeomTriple, z, method: str = "auto"):
    return hyp2f1(t.alpha, t.beta, t.gamma, z, method=method)


def gauss_f_dz(t: HypergeomTriple, z, method: str = "auto"):
    """dF/dz through ``(alpha*beta/gamma) F(alpha+1, beta+1, gamma+1; z)``."""
    a, b, c = t
    _check_params(a, c)
    if b == 0:
        return 0.0 * np.asarray(z, dtype=float) + 0.0
    return (a * b / c) * hyp2f1(a + 1, b + 1, c + 1, z, method=method)


def gauss_f_dz2(t: HypergeomTriple, z, method: str = "auto"):
    """Second derivative, applying the derivative relation twice."""
    a, b, c = t
    _check_params(a, c)
    return (a * b / c) * gauss_f_dz(t.shifted(1, 1, 1), z, method=method)


class ContiguousCheck(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def contiguous_shift(t: HypergeomTriple, z: float, method: str = "auto") -> ContiguousCheck:
    """Evaluate both sides of ``(a z / c) F(a+1,b+1,c+1;z) = F(a,b+1,c;z) - F(a,b,c;z)``."""
    a, b, c = t
    lhs = (a * z / c) * hyp2f1(a + 1, b + 1, c + 1, z, method=method)
    rhs = hyp2f1(a, b + 1, c, z, method=method) - hyp2f1(a, b, c, z, method=method)
    return ContiguousCheck(float(lhs), float(rhs), float(lhs - rhs))

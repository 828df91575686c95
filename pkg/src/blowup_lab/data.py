"""Radial initial data (f, g) and the radial quadrature helpers they need."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

__all__ = ["BumpProfile", "InitialData", "bump_data", "sphere_area", "zero_profile"]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.exp(gammaln(n / 2.0))


def zero_profile(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class BumpProfile:
    """``amplitude * exp(-1/(1-(2r)^2))`` on r < 1/2, zero beyond."""

    amplitude: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = 2.0 * r
        out = np.zeros_like(r)
        inside = x < 1.0
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - x[inside] ** 2))
        return out


@dataclass(frozen=True)
class InitialData:
    """Radial profiles of u(0) = eps f and u_t(0) = eps g, supported in r <= ``support``."""

    f: Callable = zero_profile
    g: Callable = zero_profile
    support: float = 1.0
    description: str = "custom"
    f_is_zero: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not 0 < self.support <= 1.0:
            raise ValueError("initial data must be supported in the closed unit ball")

    def positivity_functional(self, n: int, A: float, rho: float) -> float:
        """omega_n int_0^R r^rho (g + A f / r) r^(n-1) dr."""
        def integrand(r):
            val = float(self.g(np.array(r))) * r
            if A and not self.f_is_zero:
                val += A * float(self.f(np.array(r)))
            return val

        # r^(rho+n-2) carried as an algebraic weight
        val, _ = quad(integrand, 0.0, self.support, weight="alg", wvar=(rho + n - 2, 0.0),
                      limit=200, epsabs=0.0, epsrel=1e-12)
        return sphere_area(n) * val

    def check(self, n: int, A: float, rho: float) -> float:
        val = self.positivity_functional(n, A, rho)
        if not val > 0:
            raise ValueError(f"data violate int r^rho (g + A f/r) dx > 0 (got {val})")
        return val


def bump_data(amplitude: float = 1.0) -> InitialData:
    """f = 0, g(r) = amplitude * exp(-1/(1-(2r)^2)) on r < 1/2."""
    return InitialData(
        f=zero_profile,
        g=BumpProfile(amplitude),
        support=0.5,
        description=f"bump(amplitude={amplitude!r})",
        f_is_zero=True,
    )

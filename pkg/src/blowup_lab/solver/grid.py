"""Grid and solution containers shared by the finite-difference and Duhamel paths."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exponents import ProblemParams

__all__ = ["RadialGrid", "RadialSolution", "Status"]


class Status:
    COMPLETED = "Completed"
    BLEW_UP = "BlewUp"
    UNSTABLE = "Unstable"
    NOT_CONVERGED = "NotConverged"


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centred radial grid ``r_j = (j + 1/2) dr``; the origin is never a node."""

    r_max: float
    Nr: int
    dt: float
    t_max: float
    cfl: float = 0.45

    def __post_init__(self):
        if self.Nr < 4:
            raise ValueError("need at least 4 cells")
        if not 0 < self.cfl <= 0.5:
            raise ValueError(f"CFL must lie in (0, 0.5], got {self.cfl}")
        if self.dt > self.cfl * self.dr * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds CFL * dr = {self.cfl * self.dr}")
        if self.r_max < 1 + self.t_max + 2 * self.dr - 1e-12:
            raise ValueError("r_max must be at least 1 + t_max + 2 dr (finite propagation speed)")

    @property
    def dr(self) -> float:
        return self.r_max / self.Nr

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.Nr) + 0.5) * self.dr

    @classmethod
    def for_horizon(cls, t_max: float, dr: float, cfl: float = 0.45, potential: float = 0.0) -> "RadialGrid":
        """Smallest grid covering the light cone up to ``t_max``.

        ``potential`` is the coefficient ``c`` of ``c / r^2`` in the V equation;
        a positive value tightens dt below ``cfl * dr`` so the explicit
        potential term stays stable at the first cell.
        """
        Nr = int(math.ceil((1.0 + t_max + 2.0 * dr) / dr)) + 1
        dt = cfl * dr
        if potential > 0:
            dt = min(dt, 0.9 * dr / math.sqrt(1.0 + potential))
        return cls(r_max=Nr * dr, Nr=Nr, dt=dt, t_max=t_max, cfl=cfl)


@dataclass
class RadialSolution:
    """Snapshots of ``V = r^((n-1)/2) u`` on a :class:`RadialGrid`.

    Treated as immutable once returned by a solver.
    """

    params: ProblemParams
    grid: RadialGrid
    times: np.ndarray
    V: np.ndarray  # shape (len(times), Nr)
    status: str
    T_num: float | None = None
    t_end: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def blew_up(self) -> bool:
        return self.status == Status.BLEW_UP

    def _weight(self) -> np.ndarray:
        return self.r ** (-(self.params.n - 1) / 2.0)

    def u(self, k: int) -> np.ndarray:
        """u at snapshot ``k`` on the cell centres."""
        return self.V[k] * self._weight()

    def V_at(self, t: float) -> np.ndarray:
        """V at time ``t`` by linear interpolation between snapshots."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise ValueError(f"t = {t} not covered by snapshots [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), len(times) - 1)
        if k == len(times) - 1 or abs(times[k] - t) < 1e-13:
            return self.V[k].copy()
        w = (t - times[k]) / (times[k + 1] - times[k])
        return (1 - w) * self.V[k] + w * self.V[k + 1]

    def u_at(self, t: float) -> np.ndarray:
        return self.V_at(t) * self._weight()

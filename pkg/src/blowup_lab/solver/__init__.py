"""Radial solvers: explicit finite differences on the V-form and Picard iteration on the integral form."""
from .blowup import BlowupResult, detect_blowup, ode_blowup
from .duhamel import DuhamelSolution, duhamel_solve
from .fd import FDScheme, FDState, adaptive_dt, fd_step, solve_fd
from .grid import RadialGrid, RadialSolution, Status
from .snapshots import read_snapshots, write_snapshots

__all__ = [
    "BlowupResult",
    "detect_blowup",
    "ode_blowup",
    "read_snapshots",
    "write_snapshots",
    "DuhamelSolution",
    "FDScheme",
    "FDState",
    "RadialGrid",
    "RadialSolution",
    "Status",
    "adaptive_dt",
    "duhamel_solve",
    "fd_step",
    "solve_fd",
]

"""Numerical laboratory for small-data blow-up of damped semilinear wave equations
with scale-invariant damping and inverse-square potential."""

__version__ = "0.1.0"

"""Flat ``key = value`` configs with dotted namespaces.

Each subcommand owns a schema mapping keys to typed defaults; parsing a file
plus overrides yields a fully materialized dict, so nothing is left implicit.
"""
from __future__ import annotations

import math
from pathlib import Path

from .exponents import ProblemParams
from .reporting import fmt_float

__all__ = ["ConfigError", "SCHEMAS", "emit_config", "parse_config", "parse_text", "problem_params"]


class ConfigError(ValueError):
    pass


PROBLEM = {"n": 3, "A": 0.0, "B": 0.0, "p": 2.0, "allow_hardy_endpoint": False}

SOLVE = PROBLEM | {
    "epsilon": 0.3,
    "data.amplitude": 300.0,
    "grid.dr": 0.02,
    "grid.cfl": 0.45,
    "threshold": 1e6,
    "t_max": 50.0,
    "refine.levels": 3,
    "nonlinear": True,
    "snapshot.dt": 0.0,  # 0 disables the binary dump
}

SWEEP = PROBLEM | {
    "data.amplitude": 300.0,
    "grid.dr": 0.02,
    "grid.cfl": 0.45,
    "threshold": 1e6,
    "t_max": 800.0,
    "refine.levels": 3,
    "nonlinear": True,
    "sweep.eps_max": 0.4,
    "sweep.eps_min": 0.05,
    "sweep.ratio": 2**-0.5,
    "sweep.eps_grid": "",  # comma-separated list; overrides the geometric grid when set
}

SCHEMAS = {"solve": SOLVE, "sweep": SWEEP}


def parse_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _coerce(key: str, default, raw):
    if not isinstance(raw, str):
        return type(default)(raw) if not isinstance(default, bool) else bool(raw)
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from None


def parse_config(schema: dict, path=None, overrides: dict | None = None) -> dict:
    """Defaults <- file <- overrides. Unknown keys are errors."""
    given: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        given.update(parse_text(p.read_text()))
    given.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(given) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    out = dict(schema)
    for k, v in given.items():
        out[k] = _coerce(k, schema[k], v)
    for k, v in out.items():
        if isinstance(v, float) and not math.isfinite(v) and k != "t_max":
            raise ConfigError(f"{k} must be finite")
    problem_params(out)  # admissibility is checked here, with the exponents diagnostic
    return out


def problem_params(cfg: dict, epsilon: float | None = None) -> ProblemParams:
    eps = cfg.get("epsilon", 1.0) if epsilon is None else epsilon
    return ProblemParams(n=cfg["n"], A=cfg["A"], B=cfg["B"], p=cfg["p"], epsilon=eps,
                         allow_hardy_endpoint=cfg["allow_hardy_endpoint"])


def _emit_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v).strip('"')
    return str(v)


def emit_config(cfg: dict) -> str:
    return "".join(f"{k} = {_emit_value(v)}\n" for k, v in cfg.items())

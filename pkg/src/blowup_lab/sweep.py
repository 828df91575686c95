"""epsilon sweeps of the PDE solver and lifespan-scaling fits."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .data import bump_data
from .exponents import ExponentReport, ProblemParams, classify
from .reporting import dumps_json, write_csv, write_dat, write_text_atomic
from .solver.blowup import detect_blowup
from .solver.grid import Status

__all__ = [
    "FitResult",
    "LifespanScalingFit",
    "SweepConfig",
    "SweepRecord",
    "default_eps_grid",
    "fit_exponent",
    "max_workers",
    "run_sweep",
    "write_sweep_outputs",
]

log = logging.getLogger(__name__)

CAVEAT = (
    "The predicted slopes come from upper bounds on the lifespan. Agreement of the fitted "
    "slope is consistent with sharpness but does not establish it."
)


def default_eps_grid(eps_max: float = 0.4, eps_min: float = 0.05, ratio: float = 2 ** -0.5) -> list[float]:
    """Geometric grid from eps_max down to eps_min (inclusive up to rounding)."""
    k = int(math.floor(math.log(eps_min / eps_max) / math.log(ratio) + 1e-9))
    return [eps_max * ratio**j for j in range(k + 1)]


@dataclass(frozen=True)
class SweepConfig:
    n: int = 3
    A: float = 0.0
    B: float = 0.0
    p: float = 2.0
    amplitude: float = 300.0  # g = amplitude * exp(-1/(1-(2r)^2)) on r < 1/2, f = 0
    dr: float = 0.02
    cfl: float = 0.45
    t_max: float = 800.0
    threshold: float = 1e6
    levels: int = 3
    nonlinear: bool = True

    def params(self, eps: float) -> ProblemParams:
        return ProblemParams(n=self.n, A=self.A, B=self.B, p=self.p, epsilon=eps)


@dataclass(frozen=True)
class SweepRecord:
    epsilon: float
    T_num: float | None
    confidence: float | None
    censored: bool
    status: str
    dr_levels: tuple = ()
    T_levels: tuple = ()
    richardson: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def max_workers() -> int:
    env = os.environ.get("BLOWUP_LAB_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ValueError(f"BLOWUP_LAB_THREADS must be an integer, got {env!r}") from None
    return cap


def _solve_one(cfg: SweepConfig, eps: float) -> SweepRecord:
    try:
        res = detect_blowup(cfg.params(eps), bump_data(cfg.amplitude), cfg.dr, cfg.t_max,
                            threshold=cfg.threshold, levels=cfg.levels, cfl=cfg.cfl,
                            nonlinear=cfg.nonlinear)
    except Exception as exc:  # recorded, never aborts the sweep
        return SweepRecord(eps, None, None, False, "Failed", error=f"{type(exc).__name__}: {exc}")
    return SweepRecord(
        epsilon=eps,
        T_num=res.T_num,
        confidence=res.confidence,
        censored=res.status == Status.COMPLETED,
        status=res.status,
        dr_levels=tuple(res.dr_levels),
        T_levels=tuple(res.T_levels),
        richardson=res.richardson,
    )


def run_sweep(cfg: SweepConfig, eps_grid, workers: int | None = None) -> list[SweepRecord]:
    """One detect_blowup per epsilon; records sorted by epsilon, descending."""
    eps_grid = [float(e) for e in eps_grid]
    if len(eps_grid) < 5:
        raise ValueError("a sweep needs at least 5 epsilon values")
    span = math.log10(max(eps_grid) / min(eps_grid))
    if span < 1 - 1e-9:
        log.warning("epsilon grid spans %.3g decades (< 1)", span)
    workers = max_workers() if workers is None else workers
    unique = sorted(set(eps_grid), reverse=True)
    if workers > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(unique))) as pool:
            done = dict(zip(unique, pool.map(_solve_one, [cfg] * len(unique), unique)))
    else:
        done = {e: _solve_one(cfg, e) for e in unique}
    return [done[e] for e in sorted(eps_grid, reverse=True)]


# ---------------------------------------------------------------- fitting


class LifespanScalingFit(RegressorMixin, BaseEstimator):
    """Least squares for log T (``"log-log"``) or log log T (``"loglog-log"``) against log eps.

    ``fit(X, y)`` takes X = epsilon values (shape (n,) or (n, 1)) and y = lifespans.
    """

    def __init__(self, mode: str = "log-log"):
        self.mode = mode

    def _target(self, T):
        T = np.asarray(T, dtype=float)
        if self.mode == "log-log":
            return np.log(T)
        if self.mode == "loglog-log":
            if np.any(T <= 1):
                raise ValueError("loglog-log mode needs T > 1")
            return np.log(np.log(T))
        raise ValueError(f"unknown mode {self.mode!r}")

    def fit(self, X, y):
        x = np.log(np.asarray(X, dtype=float).reshape(-1))
        z = self._target(y)
        if len(x) < 2:
            raise ValueError("need at least two points")
        M = np.column_stack([x, np.ones_like(x)])
        (self.slope_, self.intercept_), *_ = np.linalg.lstsq(M, z, rcond=None)
        resid = z - M @ np.array([self.slope_, self.intercept_])
        ss = float(np.sum((z - z.mean()) ** 2))
        self.r_squared_ = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
        return self

    def predict(self, X):
        x = np.log(np.asarray(X, dtype=float).reshape(-1))
        z = self.slope_ * x + self.intercept_
        return np.exp(z) if self.mode == "log-log" else np.exp(np.exp(z))

    def score(self, X, y, sample_weight=None):
        """r^2 in the fitted coordinates."""
        x = np.log(np.asarray(X, dtype=float).reshape(-1))
        z = self._target(y)
        resid = z - (self.slope_ * x + self.intercept_)
        ss = float(np.sum((z - z.mean()) ** 2))
        return 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0


@dataclass
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    mode: str
    predicted_slope: float | None
    deviation: float | None
    n_points: int
    case_id: str | None = None
    caveat: str = CAVEAT

    def to_dict(self) -> dict:
        return asdict(self)


def fit_exponent(records, report: ExponentReport | None = None, mode: str | None = None) -> FitResult:
    """Fit uncensored records; the coordinate mode follows the report unless given."""
    pts = [(r.epsilon, r.T_num) for r in records if not r.censored and r.T_num is not None]
    if len(pts) < 4:
        raise ValueError(f"insufficient data: {len(pts)} uncensored records (need >= 4)")
    pred = report.predicted_log_slope if report is not None else None
    if mode is None:
        mode = (report.slope_mode if report is not None else None) or "log-log"
    eps, T = map(np.array, zip(*pts))
    est = LifespanScalingFit(mode=mode).fit(eps, T)
    dev = float(abs(est.slope_ - pred) / abs(pred)) if pred is not None and math.isfinite(pred) and pred else None
    return FitResult(
        slope=float(est.slope_),
        intercept=float(est.intercept_),
        r_squared=float(est.r_squared_),
        mode=mode,
        predicted_slope=pred,
        deviation=dev,
        n_points=len(pts),
        case_id=None if report is None else str(report.case_id.value),
    )


def write_sweep_outputs(out_dir, cfg: SweepConfig, records, fit: FitResult | None,
                        fit_error: str | None = None) -> list[Path]:
    """records.csv, fit.json and two .dat tables; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_csv(out / "records.csv", ["epsilon", "T_num", "confidence", "censored"],
                       [(r.epsilon, r.T_num, r.confidence, r.censored) for r in records])]
    body = {"config": asdict(cfg), "fit": fit, "fit_error": fit_error,
            "records": [r.to_dict() for r in records], "caveat": CAVEAT}
    paths.append(write_text_atomic(out / "fit.json", dumps_json(body)))
    ok = [r for r in records if not r.censored and r.T_num is not None]
    paths.append(write_dat(out / "lifespan.dat", [r.epsilon for r in ok], [r.T_num for r in ok],
                           "epsilon T_num"))
    if fit is not None and ok:
        est = LifespanScalingFit(mode=fit.mode)
        est.slope_, est.intercept_ = fit.slope, fit.intercept
        e = np.array([r.epsilon for r in ok])
        paths.append(write_dat(out / "fit_line.dat", e, est.predict(e), f"epsilon T_fit ({fit.mode})"))
    return paths


def report_for(cfg: SweepConfig) -> ExponentReport:
    return classify(cfg.params(1.0))


__all__.append("report_for")

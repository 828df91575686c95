"""Exponent algebra for the damped wave equation with inverse-square potential.

All functions here are pure and operate on floats. ``d`` is allowed to be
real in the polynomial helpers (``h_strauss``, ``h_fujita``, ``p_strauss``,
``p_fujita``); the dimension ``n`` carried by :class:`ProblemParams` must be
an integer.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

__all__ = [
    "AdmissibilityError",
    "CaseId",
    "ExponentReport",
    "ProblemParams",
    "alpha_gamma",
    "b_tilde",
    "classify",
    "h_fujita",
    "h_strauss",
    "p_fujita",
    "p_strauss",
    "rho",
]

# relative tolerance used to decide that p sits exactly on a critical exponent
CRITICAL_RTOL = 1e-9


class AdmissibilityError(ValueError):
    """Raised when (n, A, B, p, epsilon) violate the admissibility conditions."""


class CaseId(str, Enum):
    STRAUSS_SUB = "StraussSub"
    STRAUSS_CRIT = "StraussCrit"
    FUJITA_SUB = "FujitaSub"
    FUJITA_CRIT = "FujitaCrit"
    SUPERCRITICAL = "Supercritical"
    BORDERLINE_UNKNOWN = "BorderlineUnknown"


def rho(n: int, B: float) -> float:
    """Larger root of ``rho*(rho-1) + (n-1)*rho - B = 0``.

    Raises ``ValueError`` if ``(n-2)**2 + 4B < 0``.
    """
    disc = (n - 2) ** 2 + 4.0 * B
    if disc < 0:
        raise ValueError(f"rho undefined: (n-2)^2 + 4B = {disc} < 0")
    return ((2 - n) + math.sqrt(disc)) / 2.0


def alpha_gamma(n: int, A: float, B: float) -> tuple[float, float]:
    """Hypergeometric parameters ``alpha = (n+A-1+2rho)/2`` and ``gamma = n-1+2rho``."""
    r = rho(n, B)
    return (n + A - 1 + 2 * r) / 2.0, n - 1 + 2 * r


def b_tilde(n: int, A: float) -> float:
    """Potential value at which the damped radial operator factorizes."""
    return (A * A + 2 * A - (n - 1) * (n - 3)) / 4.0


def h_strauss(d: float, p: float) -> float:
    return (d - 1) * p * p - (d + 1) * p - 2


def h_fujita(d: float, p: float) -> float:
    return d * p - (d + 2)


def p_strauss(d: float) -> float:
    """Positive root of ``h_strauss(d, .)``; ``inf`` when ``d <= 1``."""
    if d <= 1:
        return math.inf
    b = d + 1
    return (b + math.sqrt(b * b + 8 * (d - 1))) / (2 * (d - 1))


def p_fujita(d: float) -> float:
    """Root of ``h_fujita(d, .)``; ``inf`` when ``d <= 0``."""
    if d <= 0:
        return math.inf
    return 1.0 + 2.0 / d


@dataclass(frozen=True)
class ProblemParams:
    """Parameters of the initial value problem.

    Validation happens at construction. ``allow_hardy_endpoint`` admits
    ``B == -(n-2)**2/4``; that relaxation is meant for the exponent algebra
    only and the solvers refuse it.
    """

    n: int
    A: float = 0.0
    B: float = 0.0
    p: float = 2.0
    epsilon: float = 1.0
    allow_hardy_endpoint: bool = False

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise AdmissibilityError(f"n must be an integer >= 1, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("A", "B", "p", "epsilon"):
            object.__setattr__(self, name, float(getattr(self, name)))
        n, A, B, p = self.n, self.A, self.B, self.p
        hardy = -((n - 2) ** 2) / 4.0
        if B < hardy or (B == hardy and not self.allow_hardy_endpoint):
            raise AdmissibilityError(
                f"B = {B} violates B > -(n-2)^2/4 = {hardy} (admissibility)"
            )
        r = rho(n, B)
        if not 0.0 <= A < n - 1 + 2 * r:
            raise AdmissibilityError(
                f"A = {A} violates 0 <= A < n-1+2rho = {n - 1 + 2 * r} (admissibility)"
            )
        if not p > 1:
            raise AdmissibilityError(f"p = {p} must exceed 1")
        if A > 0:
            p_low = (n + r) / (n + r - 1)
            if not p > p_low:
                raise AdmissibilityError(
                    f"p = {p} violates p > (n+rho)/(n+rho-1) = {p_low}, required when A > 0"
                )
        if not 0.0 < self.epsilon <= 1.0:
            raise AdmissibilityError(f"epsilon = {self.epsilon} must lie in (0, 1]")

    @property
    def rho(self) -> float:
        return rho(self.n, self.B)

    @property
    def alpha(self) -> float:
        return alpha_gamma(self.n, self.A, self.B)[0]

    @property
    def gamma(self) -> float:
        return alpha_gamma(self.n, self.A, self.B)[1]

    @property
    def p_dual(self) -> float:
        """Hoelder conjugate p' = p/(p-1)."""
        return self.p / (self.p - 1.0)

    @property
    def b_tilde(self) -> float:
        return b_tilde(self.n, self.A)

    def replace(self, **changes) -> "ProblemParams":
        d = asdict(self)
        d.update(changes)
        return ProblemParams(**d)


@dataclass(frozen=True)
class ExponentReport:
    rho: float
    alpha: float
    gamma: float
    p_strauss: float
    p_fujita: float
    p_conjectured_critical: float
    case_id: CaseId
    # exponent of epsilon in the polynomial bound, or inside exp(.) for
    # critical cases; None when no bound applies or the law is unknown
    predicted_log_slope: float | None
    slope_mode: str | None  # "log-log" or "loglog-log"
    ties: tuple[str, ...] = field(default_factory=tuple)
    bounds: tuple[dict, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["case_id"] = self.case_id.value
        d["ties"] = list(self.ties)
        d["bounds"] = [dict(b) for b in self.bounds]
        return d


def _close(a: float, b: float) -> bool:
    return math.isfinite(a) and math.isfinite(b) and abs(a - b) <= CRITICAL_RTOL * max(1.0, abs(b))


def classify(params: ProblemParams) -> ExponentReport:
    """Collect every lifespan bound that applies to ``params`` and pick the binding one.

    Polynomial bounds ``T <= C eps^s`` beat double-exponential ones for small
    eps; among polynomial bounds the larger (less negative) ``s`` binds, among
    exponential ones the smaller exponent magnitude binds.
    """
    n, A, p = params.n, params.A, params.p
    r = params.rho
    alpha, gamma = params.alpha, params.gamma
    ps = p_strauss(n + A)
    pf = p_fujita(n - 1 + r)

    ties: list[str] = []
    bounds: list[dict] = []
    on_s = _close(p, ps)
    on_f = _close(p, pf)
    if on_s:
        ties.append("p_equals_strauss")
        bounds.append({"case": CaseId.STRAUSS_CRIT.value, "mode": "loglog-log", "slope": -p * (p - 1)})
    elif p < ps:
        bounds.append({"case": CaseId.STRAUSS_SUB.value, "mode": "log-log",
                       "slope": 2 * p * (p - 1) / h_strauss(n + A, p)})
    if on_f:
        ties.append("p_equals_fujita")
        bounds.append({"case": CaseId.FUJITA_CRIT.value, "mode": "loglog-log", "slope": -(p - 1)})
    elif p < pf:
        bounds.append({"case": CaseId.FUJITA_SUB.value, "mode": "log-log",
                       "slope": (p - 1) / h_fujita(n - 1 + r, p)})

    borderline = _close((n + 2 * r - 1 - A) * p / 2.0, 1.0)
    if borderline:
        ties.append("strauss_fujita_bounds_coincide")

    case, slope, mode = CaseId.SUPERCRITICAL, None, None
    if bounds:
        poly = [b for b in bounds if b["mode"] == "log-log"]
        if poly:
            best = max(poly, key=lambda b: b["slope"])
        else:
            best = max(bounds, key=lambda b: b["slope"])
        case, slope, mode = CaseId(best["case"]), best["slope"], best["mode"]
    if borderline and len([b for b in bounds if b["mode"] == "log-log"]) == 2:
        case, slope, mode = CaseId.BORDERLINE_UNKNOWN, None, None

    return ExponentReport(
        rho=r,
        alpha=alpha,
        gamma=gamma,
        p_strauss=ps,
        p_fujita=pf,
        p_conjectured_critical=min(ps, pf),
        case_id=case,
        predicted_log_slope=slope,
        slope_mode=mode,
        ties=tuple(ties),
        bounds=tuple(bounds),
    )

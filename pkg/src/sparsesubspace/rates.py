"""Minimax rate expressions, sparsity diagnostics and regime condition checks.

All rates are on the squared-error scale, i.e. they bound
``E ||sin Theta||_F^2``. Universal constants are left to the caller
(``c`` arguments, and the ``M, a, c1, c3`` fields of :class:`ProblemParams`);
every value is therefore "up to the configured constant". Logs are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import InvalidParameter


@dataclass(frozen=True)
class ProblemParams:
    p: int
    n: int
    d: int
    q: float
    R_q: float
    sigma_sq: float
    lambda1: float | None = None
    lambda_d: float | None = None
    lambda_d1: float | None = None
    M: float = 1.0
    a: float = 0.5
    c1: float = 1.0
    c3: float = 1.0

    def __post_init__(self):
        if min(self.p, self.n, self.d) < 1:
            raise InvalidParameter("p, n and d must be positive")
        if not self.d < self.p:
            raise InvalidParameter(f"need d < p, got d={self.d}, p={self.p}")
        if not 0 <= self.q < 2:
            raise InvalidParameter(f"q must lie in [0, 2), got {self.q}")
        if not self.R_q > 0 or not self.sigma_sq > 0:
            raise InvalidParameter("R_q and sigma_sq must be positive")
        lams = (self.lambda1, self.lambda_d, self.lambda_d1)
        if any(v is not None for v in lams):
            if any(v is None for v in lams):
                raise InvalidParameter("supply all of lambda1, lambda_d, lambda_d1 or none")
            if not self.lambda1 >= self.lambda_d > self.lambda_d1 > 0:
                raise InvalidParameter("need lambda1 >= lambda_d > lambda_d1 > 0")
            implied = self.lambda1 * self.lambda_d1 / (self.lambda_d - self.lambda_d1) ** 2
            if abs(implied - self.sigma_sq) > 1e-9 * max(1.0, implied):
                raise InvalidParameter(
                    f"sigma_sq = {self.sigma_sq} disagrees with the spectrum ({implied})")

    @property
    def has_spectrum(self) -> bool:
        return self.lambda1 is not None

    @classmethod
    def from_spectrum(cls, p, n, d, q, R_q, lambda1, lambda_d, lambda_d1, **kw):
        sigma_sq = lambda1 * lambda_d1 / (lambda_d - lambda_d1) ** 2
        return cls(p, n, d, q, R_q, sigma_sq, lambda1, lambda_d, lambda_d1, **kw)

    @classmethod
    def spiked(cls, p, n, d, q, R_q, b, **kw):
        """Parameters of the spiked model ``b V V^T + I``, where sigma^2 = (1 + b)/b^2."""
        return cls.from_spectrum(p, n, d, q, R_q, 1.0 + b, 1.0 + b, 1.0, **kw)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ConditionReport:
    """One named inequality ``lhs <= rhs`` (``lhs < rhs`` when ``strict``)."""

    name: str
    satisfied: bool
    lhs: float
    rhs: float
    strict: bool = False


def _report(name, lhs, rhs, strict=False):
    ok = lhs < rhs if strict else lhs <= rhs
    return ConditionReport(name, bool(ok), float(lhs), float(rhs), strict)


def sparsity_T(params: ProblemParams) -> float:
    """Relative row sparsity ``(R_q - d) / (p - d)^{1 - q/2}``."""
    P = params
    if not P.R_q > P.d:
        raise InvalidParameter(f"need R_q > d, got R_q={P.R_q}, d={P.d}")
    return (P.R_q - P.d) / (P.p - P.d) ** (1 - P.q / 2)


def classic_mse_gamma(params: ProblemParams) -> float:
    """Dense PCA error scale ``(p - d) sigma^2 / n``."""
    return (params.p - params.d) * params.sigma_sq / params.n


def sparsity_T_star(params: ProblemParams) -> float:
    """Relative column sparsity ``d (R_q - 1) / (p - d)^{1 - q/2}``."""
    P = params
    if not P.R_q > 1:
        raise InvalidParameter(f"need R_q > 1, got {P.R_q}")
    return P.d * (P.R_q - 1) / (P.p - P.d) ** (1 - P.q / 2)


def epsilon_n(params: ProblemParams) -> float:
    """``sqrt(2 R_q) ((d + log p) / n)^{1/2 - q/4}``."""
    P = params
    return math.sqrt(2 * P.R_q) * ((P.d + math.log(P.p)) / P.n) ** (0.5 - P.q / 4)


def check_conditions(params: ProblemParams) -> list[ConditionReport]:
    """Evaluate every regime and regularity condition with the configured constants.

    Conditions whose ingredients are undefined for these parameters (for
    example T when ``R_q <= d``) are reported unsatisfied with ``lhs = inf``.
    Spectrum-dependent regularity conditions are only reported when the
    spectrum is supplied.
    """
    P = params
    out = []
    pd, e = P.p - P.d, 1 - P.q / 2
    gamma = classic_mse_gamma(P)

    if P.R_q > P.d:
        inner = P.sigma_sq / P.n * (P.d + math.log(pd ** e / (P.R_q - P.d)))
        lhs = (P.R_q - P.d) * max(inner, 0.0) ** e
    else:
        lhs = math.inf
    out.append(_report("consistent_regime", lhs, P.M))

    out.append(_report("row_dimension", 4, pd))
    out.append(_report("row_radius_lower", 2 * P.d, P.R_q - P.d))
    out.append(_report("row_radius_upper", P.R_q - P.d, pd ** e))
    T = sparsity_T(P) if P.R_q > P.d else math.inf
    out.append(_report("row_sparse_regime", T ** P.a, gamma ** (P.q / 2)))

    out.append(_report("column_dimension", 4 * P.d, pd))
    out.append(_report("column_radius_lower", P.d, P.d * (P.R_q - 1)))
    out.append(_report("column_radius_upper", P.d * (P.R_q - 1), pd ** e))
    Ts = sparsity_T_star(P) if P.R_q > 1 else math.inf
    out.append(_report("column_sparse_regime", Ts ** P.a, gamma ** (P.q / 2)))

    eps = epsilon_n(P)
    out.append(_report("small_epsilon", eps, 1.0))
    if P.has_spectrum:
        l1, ld, ld1 = P.lambda1, P.lambda_d, P.lambda_d1
        gap = ld - ld1
        logn = math.log(P.n)
        noise = P.c3 * eps * logn ** 2.5 * ld1
        out.append(_report("eigengap_margin",
                           P.c1 * math.sqrt(P.d / P.n) * logn * l1 + noise, gap / 2, strict=True))
        out.append(_report("epsilon_spectrum",
                           noise, math.sqrt(l1 * ld1) ** e * gap ** (P.q / 2)))
        out.append(_report("epsilon_sq_spectrum",
                           P.c3 * eps ** 2 * logn ** 2.5 * ld1,
                           math.sqrt(l1 * ld1) ** (2 - P.q) * gap ** (-(1 - P.q))))
    return out


def lower_rate_row(params: ProblemParams, c: float = 1.0) -> float:
    """``c (R_q - d) {sigma^2/n [d + log((p-d)^{1-q/2} / (R_q - d))]}^{1 - q/2}``."""
    P = params
    if not P.R_q > P.d:
        raise InvalidParameter(f"need R_q > d, got R_q={P.R_q}, d={P.d}")
    e = 1 - P.q / 2
    inner = P.sigma_sq / P.n * (P.d + math.log((P.p - P.d) ** e / (P.R_q - P.d)))
    return c * (P.R_q - P.d) * max(inner, 0.0) ** e


def upper_rate_row(params: ProblemParams, c: float = 1.0) -> float:
    """``c R_q (sigma^2 (d + log p) / n)^{1 - q/2}``."""
    P = params
    return c * P.R_q * (P.sigma_sq * (P.d + math.log(P.p)) / P.n) ** (1 - P.q / 2)


def rate_row_q0_weak(params: ProblemParams, c: float = 1.0) -> float:
    """q = 0 global-maximizer bound carrying the extra ``lambda1 / lambda_{d+1}`` factor."""
    P = params
    if not P.has_spectrum:
        raise InvalidParameter("the spectrum (lambda1, lambda_d1) is required")
    return c * P.R_q * (P.lambda1 / P.lambda_d1) * P.sigma_sq * (P.d + math.log(P.p)) / P.n


def expectation_extra_term(params: ProblemParams) -> float:
    """Additive ``d (log n / n + 1/p)`` term of the in-expectation upper bound (diagnostic)."""
    P = params
    return P.d * (math.log(P.n) / P.n + 1.0 / P.p)


def lower_rate_column(params: ProblemParams, c: float = 1.0) -> float:
    """``c d (R_q - 1) {sigma^2/n [1 + log((p-d)^{1-q/2} / (d (R_q - 1)))]}^{1 - q/2}``."""
    P = params
    if not P.R_q > 1:
        raise InvalidParameter(f"need R_q > 1, got {P.R_q}")
    e = 1 - P.q / 2
    k = P.d * (P.R_q - 1)
    inner = P.sigma_sq / P.n * (1 + math.log((P.p - P.d) ** e / k))
    return c * k * max(inner, 0.0) ** e


def upper_rate_column(params: ProblemParams, c: float = 1.0) -> float:
    """``c d R_q (sigma^2 (d + log p) / n)^{1 - q/2}``."""
    return params.d * upper_rate_row(params, c)


def variable_selection_rate(params: ProblemParams, c: float = 1.0) -> float:
    """Squared variable-selection lower bound, branch chosen by ``T < gamma^{q/2}``.

    Sparse branch: ``(R_q - d)[sigma^2/n (1 - log(T / gamma^{q/2}))]^{1-q/2} ^ 1``;
    dense branch: ``(p - d) sigma^2 / n ^ 1``. The bound is stated for the
    root error with constant c, so the returned value is ``c^2`` times these.
    """
    P = params
    T, gamma = sparsity_T(P), classic_mse_gamma(P)
    g = gamma ** (P.q / 2)
    if T < g:
        inner = P.sigma_sq / P.n * (1 - math.log(T / g))
        val = (P.R_q - P.d) * inner ** (1 - P.q / 2)
    else:
        val = gamma
    return c * c * min(val, 1.0)


def estimation_rate(params: ProblemParams, c: float = 1.0) -> float:
    """Squared post-selection estimation lower bound, branch chosen by ``T < (d gamma)^{q/2}``.

    Sparse branch: ``(R_q - d)(d sigma^2/n)^{1-q/2} ^ d``; dense branch:
    ``d (p - d) sigma^2 / n ^ d``; both scaled by ``c^2``.
    """
    P = params
    T, gamma = sparsity_T(P), classic_mse_gamma(P)
    if T < (P.d * gamma) ** (P.q / 2):
        val = (P.R_q - P.d) * (P.d * P.sigma_sq / P.n) ** (1 - P.q / 2)
    else:
        val = P.d * gamma
    return c * c * min(val, float(P.d))


def row_rate_driver(p, n, d, q, R_q, sigma_sq) -> float:
    """``R_q (sigma^2 (d + log p) / n)^{1 - q/2}``, the row-sparse upper rate with c = 1."""
    return R_q * (sigma_sq * (d + math.log(p)) / n) ** (1 - q / 2)


def column_rate_driver(p, n, d, q, R_q, sigma_sq) -> float:
    return d * row_rate_driver(p, n, d, q, R_q, sigma_sq)


def bounds_report(params: ProblemParams, c: float = 1.0) -> dict:
    """Every rate and condition report for ``params`` as a JSON-ready dict."""
    P = params

    def safe(f, *args):
        try:
            return f(*args)
        except InvalidParameter:
            return None

    rates = {
        "upper_rate_row": upper_rate_row(P, c),
        "lower_rate_row": safe(lower_rate_row, P, c),
        "rate_row_q0_weak": safe(rate_row_q0_weak, P, c) if P.q == 0 else None,
        "upper_rate_column": upper_rate_column(P, c),
        "lower_rate_column": safe(lower_rate_column, P, c),
        "variable_selection_rate": safe(variable_selection_rate, P, c),
        "estimation_rate": safe(estimation_rate, P, c),
        "expectation_extra_term": expectation_extra_term(P),
    }
    diagnostics = {
        "T": safe(sparsity_T, P),
        "T_star": safe(sparsity_T_star, P),
        "gamma": classic_mse_gamma(P),
        "epsilon_n": epsilon_n(P),
    }
    conditions = [
        {"name": r.name, "satisfied": r.satisfied, "lhs": r.lhs, "rhs": r.rhs, "strict": r.strict}
        for r in check_conditions(P)
    ]
    return {"params": P.to_dict(), "constant": c, "rates": rates,
            "diagnostics": diagnostics, "conditions": conditions}

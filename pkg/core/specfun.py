# core/specfun.py
"""Special functions and quadrature behind the closed-form SINR expressions.

Gamma-type functions are thin, domain-checked wrappers over scipy.special.
Hypergeometric functions are summed as series with a termination rule that
requires several consecutive negligible terms. Partial sums are rescaled as
they grow, so a series whose value exceeds the float range is still summed
and can be returned as a SignedLog.

The Gauss function maps negative arguments into (0, 1) with a Pfaff
transformation. Close to 1 it switches to the 1 - z connection formula; when
c - a - b is an integer that formula degenerates and the digamma limit is used.
"""
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import integrate, interpolate, special

from config.settings import settings
from core.errors import DomainError, IntegrationToleranceError, SeriesConvergenceError

# up to this argument the Gauss series is summed directly whatever its parameters
_DIRECT_SERIES_LIMIT = 0.75
# positive-term Gauss series expected to need fewer terms than this are summed directly
_DIRECT_TERM_BUDGET = 20_000
# |c - a - b - m| below this is treated through the integer-m connection formula
_DEGENERATE_GAP = 5e-4
_INTERPOLATION_STEP = 1e-3
_INTEGER_EPS = 1e-9
_RESCALE_ABOVE = 1e200
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for adaptive quadrature."""
    relative_tolerance: float = settings.QUAD_REL_TOL
    absolute_tolerance: float = settings.QUAD_ABS_TOL
    max_subdivisions: int = settings.QUAD_MAX_SUBDIVISIONS

    def __post_init__(self):
        if not self.relative_tolerance > 0 or not self.absolute_tolerance > 0:
            raise DomainError("Quadrature tolerances must be positive.")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1.")


class SignedLog(NamedTuple):
    """The real number sign * exp(log_abs); zero has sign 0."""
    sign: float
    log_abs: float

    @classmethod
    def of(cls, value: float, log_scale: float = 0.0) -> "SignedLog":
        """value * exp(log_scale)."""
        if value == 0:
            return cls(0.0, -math.inf)
        return cls(math.copysign(1.0, value), math.log(abs(value)) + log_scale)

    def times(self, other: "SignedLog") -> "SignedLog":
        return SignedLog(self.sign * other.sign, self.log_abs + other.log_abs)

    def shifted(self, log_factor: float) -> "SignedLog":
        """self * exp(log_factor)."""
        return SignedLog(self.sign, self.log_abs + log_factor)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_abs > _LOG_FLOAT_MAX:
            raise SeriesConvergenceError("value exceeds the floating-point range", 0, math.inf)
        return self.sign * math.exp(self.log_abs)


def signed_log_sum(parts: Iterable[SignedLog]) -> SignedLog:
    """Sum of SignedLog values, scaled by the largest magnitude before adding."""
    parts = [p for p in parts if p.sign != 0]
    if not parts:
        return SignedLog(0.0, -math.inf)
    top = max(p.log_abs for p in parts)
    return SignedLog.of(math.fsum(p.sign * math.exp(p.log_abs - top) for p in parts), top)


class SeriesResult(NamedTuple):
    value: float
    terms_used: int
    max_abs_term: float


class LogSeriesResult(NamedTuple):
    total: SignedLog
    terms_used: int
    log_max_term: float


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and abs(x - round(x)) < _INTEGER_EPS


def distance_to_integer(x: float) -> float:
    """Distance from x to the nearest integer; used as the csc(πx) pole guard."""
    return abs(x - round(x))


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x}")
    return float(special.gammaln(x))


def reg_lower_incomplete_gamma(a: float, z: float) -> float:
    """Regularized lower incomplete gamma P(a, z) = γ(a, z) / Γ(a)."""
    if not a > 0:
        raise DomainError(f"incomplete gamma requires a > 0, got {a}")
    if not z >= 0:
        raise DomainError(f"incomplete gamma requires z >= 0, got {z}")
    if math.isinf(z):
        return 1.0
    return float(special.gammainc(a, z))


def log_gamma_ratio(numerator: Sequence[float], denominator: Sequence[float]) -> SignedLog:
    """Π Γ(numerator) / Π Γ(denominator); zero when a denominator argument is a pole."""
    if any(_is_nonpositive_integer(x) for x in denominator):
        return SignedLog(0.0, -math.inf)
    if any(_is_nonpositive_integer(x) for x in numerator):
        raise DomainError(f"gamma pole in numerator arguments {list(numerator)}")
    log_value = sum(special.gammaln(x) for x in numerator) - sum(special.gammaln(x) for x in denominator)
    sign = 1.0
    for x in (*numerator, *denominator):
        sign *= special.gammasgn(x)
    return SignedLog(float(sign), float(log_value))


def gamma_ratio(numerator: Sequence[float], denominator: Sequence[float]) -> float:
    """Π Γ(numerator) / Π Γ(denominator), evaluated in log space with signs; ±inf past the float range."""
    ratio = log_gamma_ratio(numerator, denominator)
    if ratio.sign and ratio.log_abs > _LOG_FLOAT_MAX:
        return math.copysign(math.inf, ratio.sign)
    return ratio.to_float()


def hypergeometric_series_log(upper: Sequence[float], lower: Sequence[float], z: float,
                              relative_tolerance: float = settings.SERIES_REL_TOL,
                              max_terms: int = settings.SERIES_MAX_TERMS) -> LogSeriesResult:
    """Sum Σ Π(a)_n / Π(b)_n z^n / n! with the partial sum kept as mantissa and log scale.

    Stops once SERIES_SMALL_TERMS consecutive terms are below relative_tolerance
    times the partial sum. The log of the largest term magnitude is returned so
    callers can judge cancellation.
    """
    for b in lower:
        if _is_nonpositive_integer(b):
            raise DomainError(f"lower parameter {b} is a nonpositive integer")
    if len(upper) > len(lower) + 1 and z != 0:
        raise SeriesConvergenceError("series diverges for p > q + 1", 0, math.inf)
    if len(upper) == len(lower) + 1 and abs(z) > 1:
        raise SeriesConvergenceError(f"series diverges at |z| = {abs(z)} > 1", 0, math.inf)

    term = 1.0
    total = 1.0
    log_scale = 0.0
    log_max = 0.0
    small = 0
    n = 0
    while n < max_terms:
        ratio = z / (n + 1)
        for a in upper:
            ratio *= a + n
        for b in lower:
            ratio /= b + n
        term *= ratio
        total += term
        n += 1
        if not (math.isfinite(term) and math.isfinite(total)):
            raise SeriesConvergenceError("series overflowed", n, term)
        magnitude = max(abs(term), abs(total))
        if magnitude > _RESCALE_ABOVE:
            term /= magnitude
            total /= magnitude
            log_scale += math.log(magnitude)
        if term != 0:
            log_max = max(log_max, log_scale + math.log(abs(term)))
        if abs(term) <= relative_tolerance * abs(total):
            small += 1
            if small >= settings.SERIES_SMALL_TERMS:
                return LogSeriesResult(SignedLog.of(total, log_scale), n, log_max)
        else:
            small = 0
    raise SeriesConvergenceError("series did not converge within the term cap", n, term)


def hypergeometric_series(upper: Sequence[float], lower: Sequence[float], z: float,
                          relative_tolerance: float = settings.SERIES_REL_TOL,
                          max_terms: int = settings.SERIES_MAX_TERMS) -> SeriesResult:
    """hypergeometric_series_log returned as a plain float."""
    result = hypergeometric_series_log(upper, lower, z, relative_tolerance, max_terms)
    if result.total.log_abs > _LOG_FLOAT_MAX:
        raise SeriesConvergenceError("series overflowed", result.terms_used, math.inf)
    max_abs = math.exp(result.log_max_term) if result.log_max_term <= _LOG_FLOAT_MAX else math.inf
    return SeriesResult(result.total.to_float(), result.terms_used, max_abs)


def hypergeometric_series_array(upper: Sequence[float], lower: Sequence[float], z: np.ndarray,
                                relative_tolerance: float = settings.SERIES_REL_TOL,
                                max_terms: int = settings.SERIES_MAX_TERMS) -> np.ndarray:
    """Elementwise direct series over an array of arguments with |z| < 1.

    Same termination rule as hypergeometric_series, applied to every element;
    the loop ends when the slowest element has converged.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise DomainError("array series is only summed for |z| < 1")
    term = np.ones_like(z)
    total = np.ones_like(z)
    small = np.zeros(z.shape, dtype=int)
    n = 0
    while n < max_terms:
        ratio = z / (n + 1)
        for a in upper:
            ratio = ratio * (a + n)
        for b in lower:
            ratio = ratio / (b + n)
        term = term * ratio
        total = total + term
        n += 1
        negligible = np.abs(term) <= relative_tolerance * np.abs(total)
        small = np.where(negligible, small + 1, 0)
        if np.all(small >= settings.SERIES_SMALL_TERMS):
            return total
    raise SeriesConvergenceError("array series did not converge within the term cap", n,
                                 float(np.max(np.abs(term))))


def _estimated_terms(a: float, b: float, c: float, w: float, u: float) -> float:
    """Rough count of terms a positive Gauss series needs at 0 < w < 1, with u = 1 - w."""
    peak = max(0.0, ((a + b) * w - c - 1.0) / u) + math.sqrt(a * b * w / u)
    return peak + 40.0 / u


def _connection(a: float, b: float, c: float, u: float) -> SignedLog:
    """1 - w connection formula for c - a - b away from the integers."""
    s = c - a - b
    parts = []
    first = log_gamma_ratio((c, s), (c - a, c - b))
    if first.sign:
        parts.append(first.times(hypergeometric_series_log((a, b), (1.0 - s,), u).total))
    second = log_gamma_ratio((c, -s), (a, b))
    if second.sign:
        series = hypergeometric_series_log((c - a, c - b), (1.0 + s,), u).total
        parts.append(second.times(series).shifted(s * math.log(u)))
    return signed_log_sum(parts)


def _digamma_series(a: float, b: float, m: int, u: float, log_u: float) -> SignedLog:
    """Σ (a+m)_n (b+m)_n / (n! (n+m)!/m!) u^n [ln u - ψ(n+1) - ψ(n+m+1) + ψ(a+n+m) + ψ(b+n+m)]."""
    A, B = a + m, b + m
    psi_n, psi_nm = special.digamma(1.0), special.digamma(m + 1.0)
    psi_a, psi_b = special.digamma(A), special.digamma(B)
    weight = 1.0
    total = log_u - psi_n - psi_nm + psi_a + psi_b
    log_scale = 0.0
    small = 0
    n = 0
    while n < settings.SERIES_MAX_TERMS:
        weight *= (A + n) * (B + n) * u / ((n + 1) * (n + m + 1))
        psi_n += 1.0 / (n + 1)
        psi_nm += 1.0 / (n + m + 1)
        psi_a += 1.0 / (A + n)
        psi_b += 1.0 / (B + n)
        n += 1
        term = weight * (log_u - psi_n - psi_nm + psi_a + psi_b)
        total += term
        magnitude = max(abs(weight), abs(total))
        if magnitude > _RESCALE_ABOVE:
            weight /= magnitude
            total /= magnitude
            term /= magnitude
            log_scale += math.log(magnitude)
        if abs(term) <= settings.SERIES_REL_TOL * abs(total):
            small += 1
            if small >= settings.SERIES_SMALL_TERMS:
                return SignedLog.of(total, log_scale)
        else:
            small = 0
    raise SeriesConvergenceError("digamma series did not converge within the term cap", n, weight)


def _integer_connection(a: float, b: float, m: int, u: float) -> SignedLog:
    """2F1(a, b; a + b + m; 1 - u) for integer m, the limit of the connection formula."""
    log_u = math.log(u)
    if m < 0:
        # Euler: 2F1(a, b; c; w) = u^(c-a-b) 2F1(c-a, c-b; c; w)
        return _integer_connection(b + m, a + m, -m, u).shifted(m * log_u)
    parts = []
    if m > 0:
        prefactor = log_gamma_ratio((m, a + b + m), (a + m, b + m))
        if prefactor.sign:
            term, total, log_scale = 1.0, 1.0, 0.0
            for n in range(m - 1):
                term *= (a + n) * (b + n) * u / ((n + 1) * (n + 1 - m))
                total += term
                magnitude = max(abs(term), abs(total))
                if magnitude > _RESCALE_ABOVE:
                    term /= magnitude
                    total /= magnitude
                    log_scale += math.log(magnitude)
            parts.append(prefactor.times(SignedLog.of(total, log_scale)))
    prefactor = log_gamma_ratio((a + b + m,), (a, b))
    if prefactor.sign:
        series = _digamma_series(a, b, m, u, log_u)
        sign = -1.0 if m % 2 == 0 else 1.0
        parts.append(prefactor.times(series).times(SignedLog(sign, m * log_u - special.gammaln(m + 1.0))))
    return signed_log_sum(parts)


def _gauss_near_one(a: float, b: float, c: float, u: float) -> SignedLog:
    s = c - a - b
    m = int(round(s))
    gap = s - m
    if abs(gap) >= _DEGENERATE_GAP:
        return _connection(a, b, c, u)
    if gap == 0.0:
        return _integer_connection(a, b, m, u)
    # interpolate in c through the integer point and four regular neighbours
    offsets = _INTERPOLATION_STEP * np.arange(-2, 3)
    base = a + b + m
    nodes = [_integer_connection(a, b, m, u) if x == 0 else _connection(a, b, base + x, u) for x in offsets]
    top = max((node.log_abs for node in nodes if node.sign), default=0.0)
    values = [node.sign * math.exp(node.log_abs - top) if node.sign else 0.0 for node in nodes]
    return SignedLog.of(float(interpolate.BarycentricInterpolator(offsets, values)(gap)), top)


def _gauss_unit_interval(a: float, b: float, c: float, w: float, u: float) -> SignedLog:
    """2F1(a, b; c; w) for 0 < w < 1, with u = 1 - w supplied to full precision."""
    terminating = _is_nonpositive_integer(a) or _is_nonpositive_integer(b)
    if terminating or w <= _DIRECT_SERIES_LIMIT:
        return hypergeometric_series_log((a, b), (c,), w).total
    if min(a, b, c) > 0 and _estimated_terms(a, b, c, w, u) <= _DIRECT_TERM_BUDGET:
        return hypergeometric_series_log((a, b), (c,), w).total
    return _gauss_near_one(a, b, c, u)


def _pfaff_cost(first: float, second: float) -> float:
    """How many leading terms of 2F1(first, second; c; w) change sign; -1 for a polynomial."""
    if _is_nonpositive_integer(first) or _is_nonpositive_integer(second):
        return -1.0
    return max(0.0, -first) + max(0.0, -second)


def gauss_2f1_log(a: float, b: float, c: float, z: float) -> SignedLog:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1, as sign and log magnitude."""
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for c = {c}")
    if not z < 1:
        raise DomainError(f"2F1 is only evaluated for z < 1, got {z}")
    if z == 0:
        return SignedLog(1.0, 0.0)
    if z > 0:
        return _gauss_unit_interval(a, b, c, z, 1.0 - z)
    # Pfaff: 2F1(a,b;c;z) = (1-z)^-a 2F1(a, c-b; c; z/(z-1)), with a and b interchangeable
    if _pfaff_cost(b, c - a) < _pfaff_cost(a, c - b):
        a, b = b, a
    u = 1.0 / (1.0 - z)
    inner = _gauss_unit_interval(a, c - b, c, -z * u, u)
    return inner.shifted(-a * math.log1p(-z))


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1.

    Values beyond the float range raise SeriesConvergenceError; gauss_2f1_log
    returns them in log form.
    """
    return gauss_2f1_log(a, b, c, z).to_float()


def generalized_pfq(upper: Sequence[float], lower: Sequence[float], z: float) -> float:
    """Generalized hypergeometric function pFq(upper; lower; z)."""
    for b in lower:
        if _is_nonpositive_integer(b):
            raise DomainError(f"pFq undefined for lower parameter {b}")
    if z == 0:
        return 1.0
    if len(upper) == 2 and len(lower) == 1:
        return gauss_2f1(upper[0], upper[1], lower[0], z)
    if len(upper) == 1 and len(lower) == 1 and z < 0:
        # Kummer: 1F1(a; b; z) = e^z 1F1(b - a; b; -z)
        a, b = upper[0], lower[0]
        return hypergeometric_series_log((b - a,), (b,), -z).total.shifted(z).to_float()
    return hypergeometric_series(upper, lower, z).value


def integrate_semi_infinite(f: Callable[[float], float], spec: QuadratureSpec = QuadratureSpec(),
                            breakpoints: Sequence[float] = ()) -> float:
    """Adaptive quadrature of f over (0, ∞).

    The half-line is cut at the (positive, increasing) breakpoints; the last piece
    is mapped onto a finite interval by QUADPACK's infinite-range rule.
    """
    edges = [0.0] + sorted(float(p) for p in breakpoints if p > 0 and math.isfinite(p)) + [math.inf]
    pieces = len(edges) - 1
    total = 0.0
    error = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            value, abserr = integrate.quad(f, lo, hi,
                                           epsabs=spec.absolute_tolerance / pieces,
                                           epsrel=spec.relative_tolerance,
                                           limit=spec.max_subdivisions)[:2]
            total += value
            error += abserr
    if not math.isfinite(total) or error > max(spec.absolute_tolerance, spec.relative_tolerance * abs(total)):
        raise IntegrationToleranceError(total, error)
    return total

# core/distributions.py
"""Analytic SINR laws built from Gamma moment matching.

MRT: DS ~ Gamma(j1, ρχ1) and IN ~ Gamma(j2, χ2) independent, so SINR / θ is
beta-prime(j1, j2) with θ = ρχ1/χ2. FZF: DS is deterministic and the SINR is
DS / IN. Rates are E log2(1 + SINR), in closed form where the hypergeometric
representation is well conditioned and by quadrature otherwise.
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import special, stats

from config.settings import settings
from core.errors import ClosedFormUnavailable, DegenerateMomentsError, DomainError, SeriesConvergenceError
from core.geometry import LargeScaleModel
from core.moments import MomentPair, NoiseModel, ds_fzf, in_moments, u1_moments_mrt
from core.precoding import Scheme
from core.specfun import (LogSeriesResult, QuadratureSpec, SignedLog, distance_to_integer, gauss_2f1_log,
                          hypergeometric_series_array, hypergeometric_series_log, integrate_semi_infinite,
                          reg_lower_incomplete_gamma, signed_log_sum)

# shapes beyond this make the matched Gamma practically a point mass
_NEAR_DEGENERATE_SHAPE = 1e8
_BREAKPOINT_QUANTILES = (1e-3, 0.1, 0.5, 0.9, 0.999)
_LOG_OVERFLOW = 600.0


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(f"Gamma parameters must be positive, got shape={self.shape}, scale={self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        value = special.gammainc(self.shape, np.maximum(x, 0.0) / self.scale)
        return float(value) if value.ndim == 0 else value

    def pdf(self, x):
        return stats.gamma.pdf(x, self.shape, scale=self.scale)


def gamma_match(m: MomentPair) -> GammaParams:
    """Gamma law with mean m1 and variance m2 - m1^2."""
    variance = m.m2 - m.m1 ** 2
    if not m.m1 > 0 or not variance > 0:
        raise DegenerateMomentsError(f"no Gamma law matches moments m1={m.m1}, m2={m.m2}")
    shape = m.m1 ** 2 / variance
    if shape > _NEAR_DEGENERATE_SHAPE:
        logging.warning(f"Gamma match on near-degenerate moments (shape {shape:.3e})")
    return GammaParams(shape, variance / m.m1)


@dataclass(frozen=True)
class SinrDistributionModel:
    """Analytic SINR law of one user.

    MRT models carry ds_params (scale includes ρ_d); FZF models carry ds_value.
    """
    scheme: Scheme
    in_params: GammaParams
    ds_params: Optional[GammaParams] = None
    ds_value: Optional[float] = None

    def __post_init__(self):
        if self.scheme is Scheme.MRT and self.ds_params is None:
            raise DomainError("MRT model needs DS Gamma parameters")
        if self.scheme is Scheme.FZF and not (self.ds_value is not None and self.ds_value > 0):
            raise DomainError("FZF model needs a positive deterministic DS value")

    @classmethod
    def mrt(cls, u1: MomentPair, in_moments: MomentPair, rho_d: float) -> "SinrDistributionModel":
        j1_chi1 = gamma_match(u1)
        return cls(Scheme.MRT, gamma_match(in_moments), ds_params=GammaParams(j1_chi1.shape, rho_d * j1_chi1.scale))

    @classmethod
    def fzf(cls, ds_value: float, in_moments: MomentPair) -> "SinrDistributionModel":
        return cls(Scheme.FZF, gamma_match(in_moments), ds_value=ds_value)

    @property
    def theta(self) -> float:
        """ρχ1/χ2, the scale of the MRT beta-prime law."""
        return self.ds_params.scale / self.in_params.scale

    def pdf(self, x):
        return sinr_pdf_mrt(self, x) if self.scheme is Scheme.MRT else sinr_pdf_fzf(self, x)

    def cdf(self, x):
        return sinr_cdf_mrt(self, x) if self.scheme is Scheme.MRT else sinr_cdf_fzf(self, x)

    def ds_cdf(self, x):
        if self.scheme is Scheme.MRT:
            return self.ds_params.cdf(x)
        step = (np.asarray(x, dtype=float) >= self.ds_value).astype(float)
        return float(step) if step.ndim == 0 else step

    def in_cdf(self, x):
        return self.in_params.cdf(x)

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        if self.scheme is Scheme.MRT:
            value = self.theta * stats.betaprime.ppf(q, self.ds_params.shape, self.in_params.shape)
        else:
            with np.errstate(divide="ignore"):
                value = self.ds_value / stats.gamma.isf(q, self.in_params.shape, scale=self.in_params.scale)
        return float(value) if value.ndim == 0 else value


def fit_model(lsm: LargeScaleModel, k: int, N: int, rho_d: float, scheme: Scheme,
              noise: NoiseModel = NoiseModel.CONSTANT) -> SinrDistributionModel:
    """Analytic model of user k from the closed-form moments."""
    if Scheme(scheme) is Scheme.MRT:
        return SinrDistributionModel.mrt(u1_moments_mrt(lsm, k, N), in_moments(lsm, k, N, rho_d, scheme, noise),
                                         rho_d)
    return SinrDistributionModel.fzf(ds_fzf(lsm, k, N, rho_d), in_moments(lsm, k, N, rho_d, scheme, noise))


def _as_output(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def sinr_pdf_mrt(model: SinrDistributionModel, x):
    j1, j2, theta = model.ds_params.shape, model.in_params.shape, model.theta
    x = np.asarray(x, dtype=float)
    y = np.maximum(x, 0.0) / theta
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pdf = ((j1 - 1.0) * np.log(y) - (j1 + j2) * np.log1p(y)
                   - special.betaln(j1, j2) - math.log(theta))
        values = np.where(x > 0, np.exp(log_pdf), 0.0)
    return _as_output(values)


def _beta_prime_lower(y: np.ndarray, a: float, b: float) -> np.ndarray:
    """P(Y <= y) for Y ~ beta-prime(a, b), y in [0, 1].

    Uses y^a Γ(a+b)/(a Γ(a)Γ(b)) 2F1(a, a+b; a+1; -y) after the Pfaff map, which
    leaves (1+y)^-(a+b) 2F1(a+b, 1; a+1; y/(1+y)) with positive terms.
    """
    result = np.zeros_like(y)
    positive = y > 0
    if not np.any(positive):
        return result
    yp = y[positive]
    w = yp / (1.0 + yp)
    if (a + b) * np.log1p(yp.max()) > _LOG_OVERFLOW:
        # partial sums would overflow; same quantity as a regularized incomplete beta
        result[positive] = special.betainc(a, b, w)
        return result
    series = hypergeometric_series_array((a + b, 1.0), (a + 1.0,), w)
    log_prefactor = (a * np.log(yp) - (a + b) * np.log1p(yp) + special.gammaln(a + b)
                     - math.log(a) - special.gammaln(a) - special.gammaln(b))
    result[positive] = np.exp(log_prefactor) * series
    return result


def sinr_cdf_mrt(model: SinrDistributionModel, x):
    """Ratio-of-Gammas CDF; arguments beyond θ use the complementary law of 1/SINR."""
    j1, j2, theta = model.ds_params.shape, model.in_params.shape, model.theta
    x = np.asarray(x, dtype=float)
    y = np.atleast_1d(np.maximum(x, 0.0) / theta)
    values = np.empty_like(y)
    low = y <= 1.0
    values[low] = _beta_prime_lower(y[low], j1, j2)
    high = ~low & np.isfinite(y)
    values[high] = 1.0 - _beta_prime_lower(1.0 / y[high], j2, j1)
    values[np.isinf(y)] = 1.0
    values = np.clip(values, 0.0, 1.0)
    return _as_output(values.reshape(x.shape))


def sinr_cdf_mrt_scalar(model: SinrDistributionModel, x: float) -> float:
    """Single-point CDF through the general gauss_2f1 path, without the complementary form."""
    j1, j2 = model.ds_params.shape, model.in_params.shape
    if x <= 0:
        return 0.0
    y = x / model.theta
    log_prefactor = (j1 * math.log(y) + special.gammaln(j1 + j2) - math.log(j1)
                     - special.gammaln(j1) - special.gammaln(j2))
    return gauss_2f1_log(j1, j1 + j2, j1 + 1.0, -y).shifted(log_prefactor).to_float()


def sinr_cdf_mrt_integral(model: SinrDistributionModel, x: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """P(DS <= x IN) = ∫ F_DS(x t) f_IN(t) dt, evaluated by quadrature."""
    if x <= 0:
        return 0.0
    ds, interference = model.ds_params, model.in_params
    breakpoints = stats.gamma.ppf(_BREAKPOINT_QUANTILES, interference.shape, scale=interference.scale)
    return integrate_semi_infinite(lambda t: ds.cdf(x * t) * interference.pdf(t), spec, breakpoints)


def sinr_pdf_fzf(model: SinrDistributionModel, x):
    """DS/x^2 f_IN(DS/x)."""
    j2, chi2, ds = model.in_params.shape, model.in_params.scale, model.ds_value
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ds / x
        log_pdf = j2 * np.log(t / chi2) - t / chi2 - np.log(x) - special.gammaln(j2)
        values = np.where(x > 0, np.exp(log_pdf), 0.0)
    return _as_output(values)


def sinr_cdf_fzf(model: SinrDistributionModel, x):
    """1 - P(j2, DS/(x χ2)), the upper regularized incomplete gamma."""
    j2, chi2, ds = model.in_params.shape, model.in_params.scale, model.ds_value
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        z = np.where(x > 0, ds / (np.maximum(x, 0.0) * chi2), np.inf)
    values = special.gammaincc(j2, z)
    return _as_output(values)


def sinr_cdf_fzf_scalar(model: SinrDistributionModel, x: float) -> float:
    if x <= 0:
        return 0.0
    return 1.0 - reg_lower_incomplete_gamma(model.in_params.shape, model.ds_value / (x * model.in_params.scale))


def _check_conditioning(value: float, largest_term: float):
    if value == 0 or largest_term / abs(value) > settings.CANCELLATION_GUARD:
        raise ClosedFormUnavailable(f"closed form loses precision (term {largest_term:.3e}, result {value:.3e})")


def _pole_guard(shape: float, name: str):
    if distance_to_integer(shape) < settings.POLE_GUARD:
        raise ClosedFormUnavailable(f"{name} = {shape} is within {settings.POLE_GUARD} of an integer")


def _series(upper, lower, z: float) -> LogSeriesResult:
    try:
        return hypergeometric_series_log(upper, lower, z)
    except SeriesConvergenceError as e:
        raise ClosedFormUnavailable(f"hypergeometric series failed: {e}") from e


def _combine(*pieces) -> float:
    """Σ scale * series over (SignedLog scale, LogSeriesResult) pairs, rejected when cancellation is too deep."""
    value = signed_log_sum(scale.times(series.total) for scale, series in pieces)
    largest = max(scale.log_abs + series.log_max_term for scale, series in pieces)
    if value.sign == 0 or largest - value.log_abs > math.log(settings.CANCELLATION_GUARD):
        raise ClosedFormUnavailable(f"closed form loses precision (log term {largest:.4g}, "
                                    f"log result {value.log_abs:.4g})")
    return value.to_float()


def _csc_scale(shape: float, log_rest: float) -> SignedLog:
    """π csc(π shape) exp(log_rest)."""
    sine = math.sin(math.pi * shape)
    return SignedLog(math.copysign(1.0, sine), math.log(math.pi / abs(sine)) + log_rest)


def _log_ratio_expectation(a: float, b: float, theta: float) -> float:
    """E ln(1 + θ Z) for Z ~ beta-prime(a, b) and θ < 1, in nats."""
    _pole_guard(b, "IN shape")
    first = _series((b, a + b), (1.0 + b,), theta)
    second = _series((1.0, 1.0, 1.0 + a), (2.0, 2.0 - b), theta)
    log_first = b * math.log(theta) + special.gammaln(a + b) - special.gammaln(a) - special.gammaln(1.0 + b)
    return _combine((_csc_scale(b, log_first), first), (SignedLog.of(theta * a / (b - 1.0)), second))


def rate_closed_mrt(model: SinrDistributionModel) -> float:
    """Closed-form E log2(1 + SINR) under MRT.

    For θ > 1 the same series is used for 1/SINR: ln(1 + θZ) = ln θ + ln Z + ln(1 + 1/(θZ)),
    with E ln Z = ψ(j1) - ψ(j2).
    """
    if model.scheme is not Scheme.MRT:
        raise DomainError("rate_closed_mrt needs an MRT model")
    j1, j2, theta = model.ds_params.shape, model.in_params.shape, model.theta
    if abs(1.0 - theta) < settings.POLE_GUARD:
        raise ClosedFormUnavailable(f"θ = {theta} too close to 1 for the series form")
    if theta < 1.0:
        nats = _log_ratio_expectation(j1, j2, theta)
    else:
        reflected = _log_ratio_expectation(j2, j1, 1.0 / theta)
        offset = math.log(theta) + special.digamma(j1) - special.digamma(j2)
        nats = offset + reflected
        _check_conditioning(nats, max(abs(offset), abs(reflected)))
    return nats / math.log(2.0)


def rate_closed_fzf(model: SinrDistributionModel) -> float:
    """Closed-form E log2(1 + DS/IN) with ω = DS/χ2.

    Both terms grow like e^ω and cancel, so the closed form is only accepted
    for moderate ω (roughly up to 15); beyond that it raises ClosedFormUnavailable.
    """
    if model.scheme is not Scheme.FZF:
        raise DomainError("rate_closed_fzf needs an FZF model")
    j2 = model.in_params.shape
    omega = model.ds_value / model.in_params.scale
    _pole_guard(j2, "IN shape")
    first = _series((j2,), (1.0 + j2,), omega)
    second = _series((1.0, 1.0), (2.0, 2.0 - j2), omega)
    log_first = j2 * math.log(omega) - special.gammaln(1.0 + j2)
    nats = _combine((_csc_scale(j2, log_first), first), (SignedLog.of(omega / (j2 - 1.0)), second))
    return nats / math.log(2.0)


def rate_closed(model: SinrDistributionModel) -> float:
    return rate_closed_mrt(model) if model.scheme is Scheme.MRT else rate_closed_fzf(model)


def rate_quadrature(model: SinrDistributionModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """∫ log2(1 + x) f(x) dx with breakpoints at quantiles of the law."""
    breakpoints = np.atleast_1d(model.quantile(np.asarray(_BREAKPOINT_QUANTILES)))
    return integrate_semi_infinite(lambda x: math.log2(1.0 + x) * model.pdf(x), spec, breakpoints)


def pdf_mass(model: SinrDistributionModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Total probability of the model PDF; 1 up to quadrature error."""
    breakpoints = np.atleast_1d(model.quantile(np.asarray(_BREAKPOINT_QUANTILES)))
    return integrate_semi_infinite(model.pdf, spec, breakpoints)


class RateEstimate(NamedTuple):
    value: float
    method: str


def achievable_rate(model: SinrDistributionModel, spec: QuadratureSpec = QuadratureSpec()) -> RateEstimate:
    """Closed form when it is well conditioned, quadrature otherwise."""
    try:
        return RateEstimate(rate_closed(model), "closed_form")
    except ClosedFormUnavailable as e:
        logging.warning(f"Closed-form {model.scheme.value.upper()} rate unavailable, using quadrature: {e}")
        return RateEstimate(rate_quadrature(model, spec), "quadrature")


def rate_lower_bound(lsm: LargeScaleModel, k: int, N: int, rho_d: float, scheme: Scheme) -> float:
    """Deterministic lower bound with the coherent gain treated as known and the rest as noise.

    Under MRT every user leaks through its full gain β. Under FZF the estimated
    part of the channel is nulled, so only the estimation error β - c leaks.
    """
    scheme = Scheme(scheme)
    gain = N if scheme is Scheme.MRT else N - lsm.pilot_length
    if gain < 0:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p, got N={N}")
    eta, c = lsm.power, lsm.c
    desired = gain * rho_d * np.sum(np.sqrt(eta[:, k] * c[:, k])) ** 2
    contamination = sum(gain * rho_d * np.sum(np.sqrt(eta[:, k1] * c[:, k])) ** 2
                        for k1 in lsm.copilots[k] if k1 != k)
    leaking = lsm.beta[:, [k]] if scheme is Scheme.MRT else lsm.beta[:, [k]] - c[:, [k]]
    leakage = rho_d * np.sum(eta * leaking)
    return float(np.log2(1.0 + desired / (contamination + leakage + 1.0)))


def outage(model: SinrDistributionModel, r):
    """P(log2(1 + SINR) <= r) = F(2^r - 1)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("target rate must be nonnegative")
    return model.cdf(np.exp2(r) - 1.0)

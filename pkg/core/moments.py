# core/moments.py
"""Closed-form first and second moments of the DS and IN terms.

Every U term is |sum over APs|^2 of independent per-AP contributions, so its
moments follow from per-AP moments:
  * real contributions (MRT desired signal, co-pilot interference): ξ = sqrt(ηc/N) G
    with G ~ Gamma(N, 1), combined through the fourth-power expansion of a sum;
  * zero-mean circular contributions (other pilots, estimation error): combined
    through E|Σζ|^4 = Σ E|ζ|^4 + 2 Σ_{m≠n} E|ζ_m|^2 E|ζ_n|^2.
"""
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import NamedTuple

import numpy as np

from core.errors import ContractError, DomainError
from core.geometry import LargeScaleModel
from core.precoding import Scheme


class NoiseModel(str, Enum):
    """Receiver noise in IN: its unit mean power, or a per-realization |z|^2 ~ Exp(1) draw."""
    CONSTANT = "constant"
    SAMPLED = "sampled"

    @property
    def second_moment(self) -> float:
        return 1.0 if self is NoiseModel.CONSTANT else 2.0


@dataclass(frozen=True)
class MomentPair:
    m1: float
    m2: float

    @property
    def variance(self) -> float:
        return self.m2 - self.m1 ** 2

    def scaled(self, factor: float) -> "MomentPair":
        """Moments of factor * X."""
        return MomentPair(factor * self.m1, factor ** 2 * self.m2)


class XiMoments(NamedTuple):
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    e4: np.ndarray


def xi_moments_mrt(eta, c, N: int) -> XiMoments:
    """Raw moments one to four of ξ = sqrt(η/(Nc)) ||ĥ||^2; works elementwise on arrays."""
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")
    power = np.asarray(eta, dtype=float) * np.asarray(c, dtype=float)
    if np.any(power < 0):
        raise DomainError("eta and c must be nonnegative")
    return XiMoments(
        np.sqrt(N * power),
        (N + 1) * power,
        (N + 1) * (N + 2) / np.sqrt(N) * power ** 1.5,
        (N + 1) * (N + 2) * (N + 3) / N * power ** 2,
    )


def _elementary_symmetric(values: np.ndarray, order: int) -> np.ndarray:
    """e_0..e_order of the entries of values, by the additive recurrence."""
    e = np.zeros(order + 1)
    e[0] = 1.0
    for x in values:
        e[1:] = e[1:] + x * e[:-1]
    return e


def square_of_sum_moments(xi: XiMoments) -> MomentPair:
    """E X^2 and E X^4 for X = Σ_m ξ_m with independent real ξ_m, in O(M)."""
    e1, e2, e3, e4 = (np.asarray(v, dtype=float) for v in xi)
    s1, s2, s3 = e1.sum(), e2.sum(), e3.sum()
    first = s2 + (s1 ** 2 - np.sum(e1 ** 2))

    three_one = s3 * s1 - np.sum(e3 * e1)
    two_two = s2 ** 2 - np.sum(e2 ** 2)
    # ordered pairs (n, p), n != p, both different from m
    rest = s1 - e1
    two_one_one = np.sum(e2 * (rest ** 2 - (np.sum(e1 ** 2) - e1 ** 2)))
    four_distinct = _elementary_symmetric(e1, 4)[4]
    second = np.sum(e4) + 4.0 * three_one + 3.0 * two_two + 6.0 * two_one_one + 24.0 * four_distinct
    return MomentPair(float(first), float(second))


def square_of_sum_moments_naive(xi: XiMoments) -> MomentPair:
    """Same quantity by explicit expansion over ordered index tuples; O(M^4)."""
    raw = [np.ones_like(np.asarray(xi.e1, dtype=float))] + [np.asarray(v, dtype=float) for v in xi]
    M = len(raw[1])

    def expect(indices) -> float:
        value = 1.0
        for m, power in Counter(indices).items():
            value *= raw[power][m]
        return value

    first = sum(expect(t) for t in product(range(M), repeat=2))
    second = sum(expect(t) for t in product(range(M), repeat=4))
    return MomentPair(float(first), float(second))


def circular_sum_moments(second, fourth) -> MomentPair:
    """E|Σζ_m|^2 and E|Σζ_m|^4 for independent zero-mean circular ζ_m."""
    a = np.asarray(second, dtype=float)
    s = a.sum()
    return MomentPair(float(s), float(np.sum(fourth) + 2.0 * (s ** 2 - np.sum(a ** 2))))


def _check_user(lsm: LargeScaleModel, *users: int):
    for k in users:
        if not 0 <= k < lsm.K:
            raise DomainError(f"user index {k} outside [0, {lsm.K})")


def _copilot(lsm: LargeScaleModel, k: int, k1: int) -> bool:
    return bool(lsm.pilot_index[k] == lsm.pilot_index[k1])


def u1_moments_mrt(lsm: LargeScaleModel, k: int, N: int) -> MomentPair:
    """Moments of U1_k = |Σ_m sqrt(η_mk) ĥ_mk^H b_mk|^2 under MRT."""
    _check_user(lsm, k)
    return square_of_sum_moments(xi_moments_mrt(lsm.power[:, k], lsm.c[:, k], N))


def u1_moments_mrt_naive(lsm: LargeScaleModel, k: int, N: int) -> MomentPair:
    _check_user(lsm, k)
    return square_of_sum_moments_naive(xi_moments_mrt(lsm.power[:, k], lsm.c[:, k], N))


def u2_moments_same_pilot(lsm: LargeScaleModel, k: int, k1: int, N: int) -> MomentPair:
    """Co-pilot interference: ξ_mkk1 is real with the moments of ξ at (η_mk1, c_mk)."""
    _check_user(lsm, k, k1)
    if not _copilot(lsm, k, k1):
        raise ContractError(f"users {k} and {k1} do not share a pilot")
    return square_of_sum_moments(xi_moments_mrt(lsm.power[:, k1], lsm.c[:, k], N))


def u2_moments_diff_pilot(lsm: LargeScaleModel, k: int, k1: int, N: int) -> MomentPair:
    _check_user(lsm, k, k1)
    if _copilot(lsm, k, k1):
        raise ContractError(f"users {k} and {k1} share a pilot")
    second = lsm.power[:, k1] * lsm.c[:, k]
    return circular_sum_moments(second, 2.0 * (N + 1) / N * second ** 2)


def u3_moments(lsm: LargeScaleModel, k: int, k1: int, N: int, scheme: Scheme = Scheme.MRT) -> MomentPair:
    """Estimation-error leakage ψ_mkk1 = sqrt(η_mk1) h̄_mk^H b_mk1.

    Both schemes use E|ψ|^4 = 2(N+1)/N (η(β-c))^2.
    """
    _check_user(lsm, k, k1)
    if Scheme(scheme) is Scheme.FZF and N < lsm.pilot_length + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}")
    second = lsm.power[:, k1] * (lsm.beta[:, k] - lsm.c[:, k])
    return circular_sum_moments(second, 2.0 * (N + 1) / N * second ** 2)


def _sum_and_cross(pairs) -> tuple:
    """Σ E U, Σ E U^2 and Σ_{i≠j} E U_i E U_j over a list of MomentPairs."""
    m1 = np.array([p.m1 for p in pairs], dtype=float)
    m2 = np.array([p.m2 for p in pairs], dtype=float)
    total = m1.sum()
    return total, m2.sum(), total ** 2 - np.sum(m1 ** 2)


def in_moments_mrt(lsm: LargeScaleModel, k: int, N: int, rho_d: float,
                   noise: NoiseModel = NoiseModel.CONSTANT) -> MomentPair:
    """IN_k = ρ Σ_{k1≠k} U2 + ρ Σ_k1 U3 + noise, with the U terms treated as independent."""
    _check_user(lsm, k)
    u2 = [u2_moments_same_pilot(lsm, k, k1, N) if _copilot(lsm, k, k1) else u2_moments_diff_pilot(lsm, k, k1, N)
          for k1 in range(lsm.K) if k1 != k]
    u3 = [u3_moments(lsm, k, k1, N, Scheme.MRT) for k1 in range(lsm.K)]
    sum2, sq2, cross2 = _sum_and_cross(u2) if u2 else (0.0, 0.0, 0.0)
    sum3, sq3, cross3 = _sum_and_cross(u3)
    m1 = rho_d * (sum2 + sum3) + 1.0
    m2 = (rho_d ** 2 * (sq2 + cross2 + sq3 + cross3 + 2.0 * sum2 * sum3)
          + 2.0 * rho_d * (sum2 + sum3) + NoiseModel(noise).second_moment)
    return MomentPair(float(m1), float(m2))


def ds_fzf(lsm: LargeScaleModel, k: int, N: int, rho_d: float) -> float:
    """Deterministic FZF desired signal ρ (Σ_m sqrt(η_mk (N - l_p) c_mk))^2."""
    _check_user(lsm, k)
    if N < lsm.pilot_length + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}")
    amplitude = np.sum(np.sqrt(lsm.power[:, k] * (N - lsm.pilot_length) * lsm.c[:, k]))
    return float(rho_d * amplitude ** 2)


def copilot_interference_fzf(lsm: LargeScaleModel, k: int, N: int, rho_d: float) -> float:
    """Deterministic FZF co-pilot term ρ Σ_{k1≠k} (Σ_m sqrt(η_mk1) α_mkk1)^2."""
    _check_user(lsm, k)
    if N < lsm.pilot_length + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}")
    others = [k1 for k1 in lsm.copilots[k] if k1 != k]
    alpha = np.sqrt((N - lsm.pilot_length) * lsm.c[:, k])
    return float(rho_d * sum(np.sum(np.sqrt(lsm.power[:, k1]) * alpha) ** 2 for k1 in others))


def in_moments_fzf(lsm: LargeScaleModel, k: int, N: int, rho_d: float,
                   noise: NoiseModel = NoiseModel.CONSTANT) -> MomentPair:
    _check_user(lsm, k)
    copilot_term = copilot_interference_fzf(lsm, k, N, rho_d)
    u3 = [u3_moments(lsm, k, k1, N, Scheme.FZF) for k1 in range(lsm.K)]
    sum3, sq3, cross3 = _sum_and_cross(u3)
    m1 = copilot_term + rho_d * sum3 + 1.0
    m2 = (rho_d ** 2 * sq3 + 2.0 * rho_d * (copilot_term + 1.0) * sum3 + rho_d ** 2 * cross3
          + copilot_term ** 2 + 2.0 * copilot_term + NoiseModel(noise).second_moment)
    return MomentPair(float(m1), float(m2))


def ds_moments(lsm: LargeScaleModel, k: int, N: int, rho_d: float, scheme: Scheme) -> MomentPair:
    """DS_k moments; under FZF the desired signal is deterministic."""
    if Scheme(scheme) is Scheme.MRT:
        return u1_moments_mrt(lsm, k, N).scaled(rho_d)
    value = ds_fzf(lsm, k, N, rho_d)
    return MomentPair(value, value ** 2)


def in_moments(lsm: LargeScaleModel, k: int, N: int, rho_d: float, scheme: Scheme,
               noise: NoiseModel = NoiseModel.CONSTANT) -> MomentPair:
    if Scheme(scheme) is Scheme.MRT:
        return in_moments_mrt(lsm, k, N, rho_d, noise)
    return in_moments_fzf(lsm, k, N, rho_d, noise)

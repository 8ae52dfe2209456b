# core/precoding.py
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

from config.settings import settings
from core.channel import ChannelRealization
from core.errors import DegenerateAPError, DegenerateLinkError, DomainError, RankDeficiencyError
from core.geometry import LargeScaleModel


class Scheme(str, Enum):
    MRT = "mrt"
    FZF = "fzf"


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Precoding vectors b_mk stored as (M, N, K), unit expected squared norm per column."""
    scheme: Scheme
    vectors: np.ndarray


def power_allocation_heuristic(lsm: LargeScaleModel) -> np.ndarray:
    """eta_mk = c_mk / sum_k c_mk, so each AP splits its power in proportion to estimate quality."""
    totals = lsm.c.sum(axis=1, keepdims=True)
    dead = np.flatnonzero(totals[:, 0] <= 0)
    if dead.size:
        raise DegenerateAPError(f"APs {dead.tolist()} have no estimated channel power towards any user")
    return lsm.c / totals


def mrt_precoders(real: ChannelRealization, lsm: LargeScaleModel) -> PrecoderSet:
    if np.any(lsm.c <= 0):
        m, k = np.argwhere(lsm.c <= 0)[0]
        raise DegenerateLinkError(f"link (AP {m}, user {k}) has zero estimate variance")
    N = real.N
    return PrecoderSet(Scheme.MRT, real.est_h / np.sqrt(N * lsm.c)[:, None, :])


def _pseudo_inverse_columns(hbar_full: np.ndarray) -> np.ndarray:
    """H̄ (H̄^H H̄)^{-1} for every AP from a thin QR of H̄, i.e. Q R^{-H}."""
    q, r = np.linalg.qr(hbar_full)
    singular = np.linalg.svd(r, compute_uv=False)
    gram_condition = (singular[:, 0] / singular[:, -1]) ** 2
    bad = np.flatnonzero(~(gram_condition <= settings.GRAM_CONDITION_LIMIT))
    if bad.size:
        raise RankDeficiencyError(
            f"Gram matrix of AP {bad[0]} has condition number {gram_condition[bad[0]]:.3e}")
    pinv_columns = np.empty_like(q)
    eye = np.eye(r.shape[-1])
    for m in range(r.shape[0]):
        # R^H is lower triangular
        pinv_columns[m] = q[m] @ solve_triangular(r[m].conj().T, eye, lower=True)
    return pinv_columns


def fzf_precoders(real: ChannelRealization, lsm: LargeScaleModel) -> PrecoderSet:
    N, l_p = real.N, lsm.pilot_length
    if N < l_p + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}, l_p={l_p}")
    if np.any(lsm.kappa <= 0):
        m, k = np.argwhere(lsm.kappa <= 0)[0]
        raise DegenerateLinkError(f"link (AP {m}, user {k}) has zero estimate variance")
    directions = _pseudo_inverse_columns(real.hbar_full)[:, :, lsm.pilot_index]
    scale = np.sqrt((N - l_p) * lsm.c) / lsm.kappa
    return PrecoderSet(Scheme.FZF, directions * scale[:, None, :])


def build_precoders(scheme: Scheme, real: ChannelRealization, lsm: LargeScaleModel) -> PrecoderSet:
    if Scheme(scheme) is Scheme.MRT:
        return mrt_precoders(real, lsm)
    return fzf_precoders(real, lsm)


def fzf_alpha(lsm: LargeScaleModel, k: int, k1: int, m: int, N: int) -> float:
    """ĥ_mk^H b_mk1 under FZF: sqrt((N - l_p) c_mk) for co-pilot users, zero otherwise."""
    if N < lsm.pilot_length + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}")
    if lsm.pilot_index[k1] != lsm.pilot_index[k]:
        return 0.0
    return float(np.sqrt((N - lsm.pilot_length) * lsm.c[m, k]))


def fzf_alpha_matrix(lsm: LargeScaleModel, N: int) -> np.ndarray:
    """(M, K, K) array of fzf_alpha over all (m, k, k1)."""
    if N < lsm.pilot_length + 1:
        raise DomainError(f"full-pilot zero forcing needs N >= l_p + 1, got N={N}")
    alpha = np.sqrt((N - lsm.pilot_length) * lsm.c)[:, :, None]
    return alpha * lsm.copilot_mask()[None, :, :]


def transmit_power(prec: PrecoderSet, lsm: LargeScaleModel, rho_d: float) -> np.ndarray:
    """Per-AP transmitted power rho_d sum_k eta_mk ||b_mk||^2 for one realization."""
    norms = np.sum(np.abs(prec.vectors) ** 2, axis=1)
    return rho_d * np.sum(lsm.power * norms, axis=1)

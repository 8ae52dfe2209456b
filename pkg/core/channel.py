# core/channel.py
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import dft

from core.errors import DomainError
from core.geometry import LargeScaleModel, copilot_sets


def complex_normal(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian draws; real and imaginary parts each carry variance/2."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True, eq=False)
class PilotSet:
    """Orthogonal pilot book; column i is pilot i with squared norm l_p."""
    length: int
    book: np.ndarray

    @classmethod
    def dft(cls, length: int) -> "PilotSet":
        if length < 1:
            raise DomainError(f"pilot length must be at least 1, got {length}")
        return cls(length, dft(length))

    def orthogonality_residual(self) -> float:
        gram = self.book.conj().T @ self.book
        return float(np.linalg.norm(gram - self.length * np.eye(self.length)))


def assign_pilots(K: int, l_p: int) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
    """Sequential assignment i_k = k mod l_p, with the resulting co-pilot sets."""
    if l_p < 1 or l_p > K:
        raise DomainError(f"pilot length must satisfy 1 <= l_p <= K, got l_p={l_p}, K={K}")
    pilot_index = np.arange(K) % l_p
    return pilot_index, copilot_sets(pilot_index)


def draw_true_channels(lsm: LargeScaleModel, N: int, rng: np.random.Generator) -> np.ndarray:
    """(M, N, K) channels h_mk = sqrt(beta_mk) g_mk with g_mk ~ CN(0, I_N)."""
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")
    g = complex_normal(rng, (lsm.M, N, lsm.K))
    return np.sqrt(lsm.beta)[:, None, :] * g


def pilot_phase(lsm: LargeScaleModel, true_h: np.ndarray, pilots: PilotSet, rho_p: float,
                rng: np.random.Generator, add_noise: bool = True) -> np.ndarray:
    """(M, N, l_p) received pilot block Y_m = sqrt(rho_p) sum_k h_mk phi_{i_k}^H + Z_m."""
    transmitted = pilots.book[:, lsm.pilot_index].conj().T
    pilot_rx = np.sqrt(rho_p) * (true_h @ transmitted)
    if add_noise:
        pilot_rx = pilot_rx + complex_normal(rng, pilot_rx.shape)
    return pilot_rx


def mmse_estimate(lsm: LargeScaleModel, pilot_rx: np.ndarray, pilots: PilotSet,
                  true_h: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """MMSE estimates, estimation errors and the full-pilot projection H̄_m = Y_m Φ."""
    hbar_full = pilot_rx @ pilots.book
    est_h = lsm.kappa[:, None, :] * hbar_full[:, :, lsm.pilot_index]
    return est_h, true_h - est_h, hbar_full


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One small-scale draw; every array has the AP index on the leading axis."""
    true_h: np.ndarray
    pilot_rx: np.ndarray
    est_h: np.ndarray
    err_h: np.ndarray
    hbar_full: np.ndarray

    @property
    def N(self) -> int:
        return self.true_h.shape[1]

    @classmethod
    def draw(cls, lsm: LargeScaleModel, N: int, pilots: PilotSet, rho_p: float,
             rng: np.random.Generator, pilot_noise: bool = True) -> "ChannelRealization":
        true_h = draw_true_channels(lsm, N, rng)
        pilot_rx = pilot_phase(lsm, true_h, pilots, rho_p, rng, add_noise=pilot_noise)
        est_h, err_h, hbar_full = mmse_estimate(lsm, pilot_rx, pilots, true_h)
        return cls(true_h, pilot_rx, est_h, err_h, hbar_full)

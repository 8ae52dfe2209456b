# core/geometry.py
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from config.settings import settings
from core.errors import ConfigError, DomainError

if TYPE_CHECKING:
    from core.scenario import SystemConfig


def dbm_to_mw(power_dbm: float) -> float:
    """Convert dBm to milliwatts."""
    return 10.0 ** (power_dbm / 10.0)


def noise_power_dbm(noise_density_dbm_hz: float = settings.NOISE_DENSITY_DBM_HZ,
                    bandwidth_hz: float = settings.BANDWIDTH_HZ,
                    noise_figure_db: float = settings.NOISE_FIGURE_DB) -> float:
    """Total receiver noise power: density + 10 log10(bandwidth) + noise figure."""
    if not bandwidth_hz > 0:
        raise DomainError(f"bandwidth must be positive, got {bandwidth_hz}")
    return noise_density_dbm_hz + 10.0 * np.log10(bandwidth_hz) + noise_figure_db


@dataclass(frozen=True, eq=False)
class Layout:
    """AP and user positions in meters; rows are (x, y)."""
    ap_positions: np.ndarray
    user_positions: np.ndarray
    area: Tuple[float, float]

    def __post_init__(self):
        for name in ("ap_positions", "user_positions"):
            points = getattr(self, name)
            if points.ndim != 2 or points.shape[1] != 2 or len(points) == 0:
                raise DomainError(f"{name} must be a nonempty (n, 2) array, got shape {points.shape}")
            if np.any(points < 0) or np.any(points > np.asarray(self.area)):
                raise DomainError(f"{name} contains points outside the {self.area[0]}x{self.area[1]} m area")

    @property
    def M(self) -> int:
        return len(self.ap_positions)

    @property
    def K(self) -> int:
        return len(self.user_positions)

    def distances(self) -> np.ndarray:
        """M x K matrix of AP-user distances in meters."""
        delta = self.ap_positions[:, None, :] - self.user_positions[None, :, :]
        return np.hypot(delta[..., 0], delta[..., 1])


def place_uniform(config: "SystemConfig", rng: np.random.Generator) -> Layout:
    """Drop M APs and K users independently and uniformly over the configured area."""
    if config.M < 1 or config.K < 1:
        raise ConfigError("M" if config.M < 1 else "K", "at least one AP and one user are required")
    width, height = config.area_m
    if not (width > 0 and height > 0):
        raise ConfigError("area_m", f"area must be positive, got {config.area_m}")
    aps = rng.uniform(0.0, 1.0, size=(config.M, 2)) * (width, height)
    users = rng.uniform(0.0, 1.0, size=(config.K, 2)) * (width, height)
    logging.info(f"Placed {config.M} APs and {config.K} users over {width:g}x{height:g} m")
    return Layout(aps, users, (float(width), float(height)))


def path_loss_db(distance_m):
    """Three-slope large-scale gain in dB (negative) for distances in meters.

    Slopes are 0, 20 and 35 dB/decade below d0, between d0 and d1 and beyond d1.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d < 0):
        raise DomainError("distance must be nonnegative")
    d0_km = settings.PATH_LOSS_D0_M / 1000.0
    d1_km = settings.PATH_LOSS_D1_M / 1000.0
    d_km = np.maximum(d / 1000.0, d0_km)
    near = -settings.PATH_LOSS_L_DB - 15.0 * np.log10(d1_km) - 20.0 * np.log10(d_km)
    far = -settings.PATH_LOSS_L_DB - 35.0 * np.log10(d_km)
    gain = np.where(d_km > d1_km, far, near)
    return float(gain) if gain.ndim == 0 else gain


def large_scale(layout: Layout, shadow_sigma_db: float, rng: np.random.Generator) -> np.ndarray:
    """M x K gains in dB: path loss plus log-normal shadowing on links beyond d1."""
    if shadow_sigma_db < 0:
        raise DomainError(f"shadowing deviation must be nonnegative, got {shadow_sigma_db}")
    distances = layout.distances()
    gain_db = path_loss_db(distances)
    shadow = rng.normal(0.0, 1.0, size=distances.shape) * shadow_sigma_db
    return gain_db + np.where(distances > settings.PATH_LOSS_D1_M, shadow, 0.0)


def to_linear_normalized(beta_db: np.ndarray, noise_density_dbm_hz: float, bandwidth_hz: float,
                         noise_figure_db: float = settings.NOISE_FIGURE_DB) -> np.ndarray:
    """Linear gains divided by the total noise power, so the normalized noise variance is 1."""
    # gain dB minus noise dBm: -100 dB over -90 dBm gives 0.1, not 10
    noise = noise_power_dbm(noise_density_dbm_hz, bandwidth_hz, noise_figure_db)
    return 10.0 ** ((np.asarray(beta_db, dtype=float) - noise) / 10.0)


def copilot_sets(pilot_index: np.ndarray) -> Tuple[np.ndarray, ...]:
    """For every user, the sorted indices of users sharing its pilot (itself included)."""
    pilot_index = np.asarray(pilot_index)
    return tuple(np.flatnonzero(pilot_index == p) for p in pilot_index)


@dataclass(frozen=True, eq=False)
class LargeScaleModel:
    """Per-link statistics of one deployment.

    beta is noise-normalized; kappa and c follow from beta, the pilot assignment
    and the pilot power. eta stays None until a power allocation is attached.
    """
    beta: np.ndarray
    pilot_index: np.ndarray
    pilot_length: int
    kappa: np.ndarray
    c: np.ndarray
    copilots: Tuple[np.ndarray, ...] = field(repr=False)
    eta: Optional[np.ndarray] = None

    @classmethod
    def estimate(cls, beta: np.ndarray, pilot_index: np.ndarray, pilot_length: int,
                 rho_p: float) -> "LargeScaleModel":
        """MMSE estimation statistics for pilot power rho_p (linear, noise-normalized)."""
        beta = np.asarray(beta, dtype=float)
        pilot_index = np.asarray(pilot_index, dtype=int)
        if beta.ndim != 2 or beta.shape[1] != len(pilot_index):
            raise DomainError(f"beta shape {beta.shape} does not match {len(pilot_index)} users")
        if np.any(beta < 0):
            raise DomainError("beta must be nonnegative")
        if rho_p < 0:
            raise DomainError(f"pilot power must be nonnegative, got {rho_p}")
        one_hot = pilot_index[:, None] == np.arange(pilot_length)[None, :]
        pilot_sums = beta @ one_hot
        denominator = pilot_length * rho_p * pilot_sums[:, pilot_index] + 1.0
        kappa = np.sqrt(rho_p) * beta / denominator
        c = pilot_length * rho_p * beta ** 2 / denominator
        return cls(beta, pilot_index, pilot_length, kappa, c, copilot_sets(pilot_index))

    def with_eta(self, eta: np.ndarray) -> "LargeScaleModel":
        eta = np.asarray(eta, dtype=float)
        if eta.shape != self.beta.shape:
            raise DomainError(f"eta shape {eta.shape} does not match beta shape {self.beta.shape}")
        if np.any(eta < 0):
            raise DomainError("power allocation coefficients must be nonnegative")
        return replace(self, eta=eta)

    @property
    def M(self) -> int:
        return self.beta.shape[0]

    @property
    def K(self) -> int:
        return self.beta.shape[1]

    @property
    def power(self) -> np.ndarray:
        if self.eta is None:
            raise DomainError("no power allocation attached to the large-scale model")
        return self.eta

    def copilot_mask(self) -> np.ndarray:
        """K x K boolean matrix, True where two users share a pilot."""
        return self.pilot_index[:, None] == self.pilot_index[None, :]

    def typical_user(self) -> int:
        """User with the median total large-scale gain."""
        order = np.argsort(self.beta.sum(axis=0), kind="stable")
        return int(order[(self.K - 1) // 2])

# core/scenario.py
import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from config.settings import settings
from core.errors import ConfigError
from core.geometry import dbm_to_mw, noise_power_dbm
from core.moments import NoiseModel
from core.precoding import Scheme


def _is_integer(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True)
class SystemConfig:
    """Scenario description; powers are in dBm and distances in meters."""
    M: int = 120
    K: int = 20
    N: int = 2
    l_p: int = 10
    pilot_power_dbm: float = settings.PILOT_POWER_DBM
    downlink_power_dbm: float = settings.DOWNLINK_POWER_DBM
    bandwidth_hz: float = settings.BANDWIDTH_HZ
    noise_density_dbm_hz: float = settings.NOISE_DENSITY_DBM_HZ
    noise_figure_db: float = settings.NOISE_FIGURE_DB
    shadow_sigma_db: float = settings.SHADOW_SIGMA_DB
    area_m: Tuple[float, float] = settings.AREA_M
    realizations: int = settings.FIGURE_REALIZATIONS
    seed: int = 0
    scheme: Scheme = Scheme.MRT
    focus_user: Optional[int] = None
    noise_model: NoiseModel = NoiseModel.CONSTANT
    workers: int = settings.MAX_WORKERS

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", Scheme(self.scheme))
        except ValueError:
            raise ConfigError("scheme", f"expected one of {[s.value for s in Scheme]}, got {self.scheme!r}")
        try:
            object.__setattr__(self, "noise_model", NoiseModel(self.noise_model))
        except ValueError:
            raise ConfigError("noise_model", f"expected one of {[n.value for n in NoiseModel]}, "
                                             f"got {self.noise_model!r}")
        for name in ("M", "K", "N", "l_p", "realizations", "workers"):
            value = getattr(self, name)
            if not _is_integer(value) or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
        if self.l_p > self.K:
            raise ConfigError("l_p", f"pilot length {self.l_p} exceeds the number of users {self.K}")
        if self.scheme is Scheme.FZF and self.N < self.l_p + 1:
            raise ConfigError("N", f"FZF needs N >= l_p + 1, got N={self.N}, l_p={self.l_p}")
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth_hz", f"must be positive, got {self.bandwidth_hz}")
        if self.shadow_sigma_db < 0:
            raise ConfigError("shadow_sigma_db", f"must be nonnegative, got {self.shadow_sigma_db}")
        if len(self.area_m) != 2 or not all(side > 0 for side in self.area_m):
            raise ConfigError("area_m", f"must be two positive side lengths, got {self.area_m}")
        if not _is_integer(self.seed) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.focus_user is not None and not (_is_integer(self.focus_user) and 0 <= self.focus_user < self.K):
            raise ConfigError("focus_user", f"must be an integer in [0, {self.K}), got {self.focus_user!r}")

    @property
    def rho_p(self) -> float:
        """Pilot power in mW."""
        return dbm_to_mw(self.pilot_power_dbm)

    @property
    def rho_d(self) -> float:
        """Downlink power in mW."""
        return dbm_to_mw(self.downlink_power_dbm)

    @property
    def noise_power_dbm(self) -> float:
        return noise_power_dbm(self.noise_density_dbm_hz, self.bandwidth_hz, self.noise_figure_db)

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown scenario key")
        values = dict(data)
        for name in ("scheme", "noise_model"):
            if isinstance(values.get(name), str):
                values[name] = values[name].lower()
        if "area_m" in values:
            try:
                values["area_m"] = tuple(float(side) for side in values["area_m"])
            except (TypeError, ValueError):
                raise ConfigError("area_m", f"expected two numbers, got {data['area_m']!r}")
        return cls(**values)

    def with_overrides(self, **overrides) -> "SystemConfig":
        """Copy with every non-None override applied and revalidated."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        unknown = sorted(set(changes) - {f.name for f in fields(self)})
        if unknown:
            raise ConfigError(unknown[0], "unknown scenario key")
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["scheme"] = self.scheme.value
        data["noise_model"] = self.noise_model.value
        data["area_m"] = list(self.area_m)
        return data


def load_scenario(path: str) -> SystemConfig:
    """Read a flat JSON scenario file; missing keys keep their defaults."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Scenario file {path} does not exist.")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(None, f"{path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(None, f"{path} must hold a single JSON object")
    config = SystemConfig.from_mapping(data)
    logging.info(f"Loaded scenario {path}: M={config.M}, K={config.K}, N={config.N}, "
                 f"l_p={config.l_p}, scheme={config.scheme.value}")
    return config

# config/settings.py
from typing import Final, Tuple


class Settings:
    """Class for storing toolkit settings."""
    TABLE_FORMAT: Final[str] = "pretty"
    MAX_WORKERS: Final[int] = 4
    CHUNK_SIZE: Final[int] = 250

    # series / quadrature
    SERIES_REL_TOL: Final[float] = 1e-15
    SERIES_SMALL_TERMS: Final[int] = 3
    SERIES_MAX_TERMS: Final[int] = 1_000_000
    QUAD_REL_TOL: Final[float] = 1e-10
    QUAD_ABS_TOL: Final[float] = 1e-12
    QUAD_MAX_SUBDIVISIONS: Final[int] = 200
    POLE_GUARD: Final[float] = 1e-3
    CANCELLATION_GUARD: Final[float] = 1e8
    GRAM_CONDITION_LIMIT: Final[float] = 1e12

    # three-slope path loss, 1.9 GHz, AP 15 m, user 1.65 m
    PATH_LOSS_D0_M: Final[float] = 10.0
    PATH_LOSS_D1_M: Final[float] = 50.0
    PATH_LOSS_L_DB: Final[float] = 140.7
    SHADOW_SIGMA_DB: Final[float] = 8.0

    # link budget
    NOISE_DENSITY_DBM_HZ: Final[float] = -174.0
    NOISE_FIGURE_DB: Final[float] = 9.0
    BANDWIDTH_HZ: Final[float] = 2e6
    PILOT_POWER_DBM: Final[float] = 20.0
    DOWNLINK_POWER_DBM: Final[float] = 23.0
    AREA_M: Final[Tuple[float, float]] = (1000.0, 1000.0)

    # experiments
    FIGURE_REALIZATIONS: Final[int] = 10_000
    OUTAGE_THRESHOLDS: Final[Tuple[float, ...]] = (0.5, 1.0, 2.0)
    OUTAGE_CURVE_POINTS: Final[int] = 41
    CDF_CURVE_POINTS: Final[int] = 200
    KS_LIMIT_MRT: Final[float] = 0.05
    KS_LIMIT_FZF: Final[float] = 0.03
    KS_LIMIT_MRT_FEW_USERS: Final[float] = 0.08
    KS_LIMIT_FZF_FEW_USERS: Final[float] = 0.05
    FEW_USERS: Final[int] = 10
    STANDARD_ERRORS: Final[float] = 3.0


settings = Settings()

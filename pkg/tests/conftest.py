# tests/conftest.py
import numpy as np
import pytest

from core.channel import PilotSet, assign_pilots
from core.geometry import LargeScaleModel
from core.montecarlo import MonteCarloEngine
from core.precoding import power_allocation_heuristic
from core.scenario import SystemConfig


def build_lsm(M: int, K: int, l_p: int, rho_p: float = 10.0, seed: int = 3,
              low: float = 0.2, high: float = 3.0) -> LargeScaleModel:
    """Deployment with uniform noise-normalized gains and the heuristic power allocation."""
    rng = np.random.default_rng(seed)
    beta = rng.uniform(low, high, size=(M, K))
    pilot_index, _ = assign_pilots(K, l_p)
    lsm = LargeScaleModel.estimate(beta, pilot_index, l_p, rho_p)
    return lsm.with_eta(power_allocation_heuristic(lsm))


def build_engine(N: int, l_p: int, rho_p: float = 10.0, rho_d: float = 1.0, **kwargs) -> MonteCarloEngine:
    kwargs.setdefault("workers", 2)
    kwargs.setdefault("chunk_size", 500)
    return MonteCarloEngine(N, rho_p, rho_d, PilotSet.dft(l_p), show_progress=False, **kwargs)


@pytest.fixture
def small_lsm() -> LargeScaleModel:
    return build_lsm(M=3, K=4, l_p=2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


@pytest.fixture
def tiny_config() -> SystemConfig:
    return SystemConfig(M=4, K=2, N=2, l_p=2, realizations=200, seed=11, workers=2)


@pytest.fixture
def tiny_fzf_config() -> SystemConfig:
    return SystemConfig(M=6, K=3, N=4, l_p=2, realizations=200, seed=5, workers=2, scheme="fzf")

# core/montecarlo.py
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, NamedTuple, Optional

import numpy as np
from tqdm import tqdm

from config.settings import settings
from core.channel import ChannelRealization, PilotSet
from core.errors import DomainError
from core.geometry import LargeScaleModel
from core.moments import NoiseModel
from core.precoding import PrecoderSet, Scheme, build_precoders, transmit_power

if TYPE_CHECKING:
    from core.scenario import SystemConfig

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")

# relative imaginary part tolerated in co-pilot MRT cross terms
_REALNESS_TOLERANCE = 1e-8
# stream namespace of small-scale realizations; the deployment uses (0,)
REALIZATION_STREAM = 1


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Private generator of realization `index`, independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(REALIZATION_STREAM, index)))


class LinkGains(NamedTuple):
    """Effective gains A[k, k1] = Σ_m sqrt(η_mk1) ĥ_mk^H b_mk1 and B likewise with h̄."""
    estimated: np.ndarray
    error: np.ndarray

    @property
    def u1(self) -> np.ndarray:
        return np.abs(np.diagonal(self.estimated)) ** 2

    @property
    def u2(self) -> np.ndarray:
        """|A|^2 with the diagonal zeroed."""
        power = np.abs(self.estimated) ** 2
        np.fill_diagonal(power, 0.0)
        return power

    @property
    def u3(self) -> np.ndarray:
        return np.abs(self.error) ** 2


def link_gains(real: ChannelRealization, prec: PrecoderSet, lsm: LargeScaleModel) -> LinkGains:
    weighted = np.sqrt(lsm.power)[:, None, :] * prec.vectors
    estimated = np.einsum("mnk,mnj->kj", real.est_h.conj(), weighted)
    error = np.einsum("mnk,mnj->kj", real.err_h.conj(), weighted)
    return LinkGains(estimated, error)


def realize_sinr(real: ChannelRealization, prec: PrecoderSet, lsm: LargeScaleModel, rho_d: float,
                 noise=1.0, gains: Optional[LinkGains] = None):
    """Per-user (ds, in_, sinr) of one realization; noise is the constant 1 or a per-user draw.

    gains, when given, must be link_gains(real, prec, lsm).
    """
    if gains is None:
        gains = link_gains(real, prec, lsm)
    ds, in_ = signal_powers(gains, rho_d, noise)
    return ds, in_, ds / in_


def signal_powers(gains: LinkGains, rho_d: float, noise=1.0):
    """DS = ρ U1 and IN = ρ (Σ_{k1≠k} U2 + Σ_k1 U3) + noise."""
    return rho_d * gains.u1, rho_d * (gains.u2.sum(axis=1) + gains.u3.sum(axis=1)) + noise


def copilot_imaginary_ratio(gains: LinkGains, lsm: LargeScaleModel) -> float:
    """Largest |Im A| / |A| over co-pilot pairs; zero up to rounding under MRT."""
    mask = lsm.copilot_mask()
    values = gains.estimated[mask]
    magnitude = np.abs(values)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(magnitude > 0, np.abs(values.imag) / magnitude, 0.0)
    return float(ratio.max(initial=0.0))


@dataclass
class SinrSamples:
    """Monte Carlo output; arrays are (R, K) with rows in realization order."""
    scheme: Scheme
    ds: np.ndarray
    in_: np.ndarray
    sinr: np.ndarray
    ap_power: np.ndarray
    copilot_imag_max: float = 0.0

    @property
    def realizations(self) -> int:
        return self.ds.shape[0]


@dataclass(frozen=True, eq=False)
class Ecdf:
    """Right-continuous empirical CDF: heights[i] = F(values[i])."""
    values: np.ndarray
    heights: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        position = np.searchsorted(self.values, x, side="right")
        result = np.where(position > 0, self.heights[np.maximum(position - 1, 0)], 0.0)
        return float(result) if result.ndim == 0 else result


def ecdf(samples) -> Ecdf:
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise DomainError("ECDF needs at least one sample")
    values, counts = np.unique(samples, return_counts=True)
    return Ecdf(values, np.cumsum(counts) / samples.size)


def ks_distance(e: Ecdf, cdf: Callable) -> float:
    """sup |ECDF - F| checked on both sides of every step; cdf must accept arrays."""
    at = np.asarray(cdf(e.values), dtype=float)
    before = np.asarray(cdf(np.nextafter(e.values, -np.inf)), dtype=float)
    previous = np.concatenate(([0.0], e.heights[:-1]))
    return float(max(np.max(np.abs(e.heights - at)), np.max(np.abs(before - previous))))


def empirical_rate(sinr) -> float:
    sinr = np.asarray(sinr, dtype=float)
    if sinr.size == 0:
        raise DomainError("rate needs at least one sample")
    return float(np.mean(np.log2(1.0 + sinr)))


def empirical_rate_error(sinr) -> float:
    """Standard error of empirical_rate."""
    rates = np.log2(1.0 + np.asarray(sinr, dtype=float))
    return float(np.std(rates, ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else float("inf")


def empirical_outage(sinr, r):
    """Fraction of samples with log2(1 + sinr) <= r; r may be an array of targets."""
    sinr = np.asarray(sinr, dtype=float)
    if sinr.size == 0:
        raise DomainError("outage needs at least one sample")
    rates = np.log2(1.0 + sinr)
    r = np.asarray(r, dtype=float)
    result = np.mean(rates[:, None] <= r.ravel()[None, :], axis=0).reshape(r.shape)
    return float(result) if result.ndim == 0 else result


class MonteCarloEngine:
    """Runs small-scale realizations over a fixed deployment on a thread pool."""

    def __init__(self, N: int, rho_p: float, rho_d: float, pilots: PilotSet,
                 noise: NoiseModel = NoiseModel.CONSTANT, workers: int = settings.MAX_WORKERS,
                 chunk_size: int = settings.CHUNK_SIZE, show_progress: bool = True):
        if workers < 1:
            raise DomainError(f"workers must be at least 1, got {workers}")
        self.N = N
        self.rho_p = rho_p
        self.rho_d = rho_d
        self.pilots = pilots
        self.noise = NoiseModel(noise)
        self.workers = workers
        self.chunk_size = chunk_size
        self.show_progress = show_progress

    @classmethod
    def from_config(cls, config: "SystemConfig", show_progress: bool = True) -> "MonteCarloEngine":
        return cls(config.N, config.rho_p, config.rho_d, PilotSet.dft(config.l_p), config.noise_model,
                   config.workers, show_progress=show_progress)

    def simulate_one(self, lsm: LargeScaleModel, scheme: Scheme, seed: int, index: int):
        rng = realization_rng(seed, index)
        real = ChannelRealization.draw(lsm, self.N, self.pilots, self.rho_p, rng)
        prec = build_precoders(scheme, real, lsm)
        noise = 1.0 if self.noise is NoiseModel.CONSTANT else rng.exponential(size=lsm.K)
        gains = link_gains(real, prec, lsm)
        ds, in_, _ = realize_sinr(real, prec, lsm, self.rho_d, noise, gains)
        imag = copilot_imaginary_ratio(gains, lsm) if prec.scheme is Scheme.MRT else 0.0
        return ds, in_, transmit_power(prec, lsm, self.rho_d), imag

    def _run_chunk(self, lsm, scheme, seed, start, stop, ds, in_, power_sum):
        imag = 0.0
        chunk_power = np.zeros(lsm.M)
        for r in range(start, stop):
            ds[r], in_[r], power, ratio = self.simulate_one(lsm, scheme, seed, r)
            chunk_power += power
            imag = max(imag, ratio)
        power_sum[start // self.chunk_size] = chunk_power
        return stop - start, imag

    def run_batch(self, lsm: LargeScaleModel, scheme: Scheme, realizations: int, seed: int) -> SinrSamples:
        if realizations < 1:
            raise DomainError(f"realizations must be at least 1, got {realizations}")
        scheme = Scheme(scheme)
        ds = np.empty((realizations, lsm.K))
        in_ = np.empty((realizations, lsm.K))
        starts = range(0, realizations, self.chunk_size)
        power_sum = np.zeros((len(starts), lsm.M))
        imag = 0.0
        begin = time.perf_counter()
        logging.info(f"Simulating {realizations} {scheme.value.upper()} realizations on {self.workers} workers")
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            futures = [executor.submit(self._run_chunk, lsm, scheme, seed, start,
                                       min(start + self.chunk_size, realizations), ds, in_, power_sum)
                       for start in starts]
            with tqdm(total=realizations, desc="Simulating", unit="realization",
                      disable=not self.show_progress) as progress:
                for future in as_completed(futures):
                    done, ratio = future.result()
                    imag = max(imag, ratio)
                    progress.update(done)
        if imag > _REALNESS_TOLERANCE:
            logging.warning(f"Co-pilot MRT cross terms are not real: max |Im|/|.| = {imag:.3e}")
        logging.info(f"Simulation finished in {time.perf_counter() - begin:.2f} s")
        return SinrSamples(scheme, ds, in_, ds / in_, power_sum.sum(axis=0) / realizations, imag)


def run_batch(config: "SystemConfig", lsm: LargeScaleModel, scheme: Scheme, realizations: int, seed: int,
              show_progress: bool = False, noise: Optional[NoiseModel] = None) -> SinrSamples:
    engine = MonteCarloEngine.from_config(config, show_progress=show_progress)
    if noise is not None:
        engine.noise = NoiseModel(noise)
    return engine.run_batch(lsm, scheme, realizations, seed)

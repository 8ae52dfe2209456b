# core/figures.py
import logging
import os
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Tuple

import numpy as np
from pandas import DataFrame

from config.settings import settings
from core.distributions import achievable_rate, fit_model, outage, rate_lower_bound
from core.errors import IntegrationToleranceError, UnknownFigureError
from core.experiment import ExperimentRunner, deploy, focus_user
from core.montecarlo import SinrSamples, ecdf, empirical_outage, empirical_rate
from core.precoding import Scheme
from core.scenario import SystemConfig

MRT_ANTENNAS: Tuple[int, ...] = (2, 4, 8)
FZF_ANTENNAS: Tuple[int, ...] = (11, 12, 14)
USER_COUNTS: Tuple[int, ...] = (10, 20, 30)
RATE_USER_COUNTS: Tuple[int, ...] = (10, 20)
# both schemes of the comparison figure run with the FZF antenna count
COMPARISON_ANTENNAS = 11
MAX_OUTAGE_THRESHOLD = 4.0


@dataclass(frozen=True)
class FigureSpec:
    """quantity: ds, in, sinr, rate or outage; sweep: N, K or scheme."""
    quantity: str
    scheme: Scheme
    sweep: str
    values: Tuple
    description: str


FIGURES: Dict[str, FigureSpec] = {
    "Fig1": FigureSpec("ds", Scheme.MRT, "N", MRT_ANTENNAS, "CDF of DS under MRT"),
    "Fig2": FigureSpec("in", Scheme.MRT, "N", MRT_ANTENNAS, "CDF of IN under MRT"),
    "Fig3": FigureSpec("in", Scheme.FZF, "N", FZF_ANTENNAS, "CDF of IN under FZF"),
    "Fig4": FigureSpec("sinr", Scheme.FZF, "K", USER_COUNTS, "SINR CDF under FZF, different number of users"),
    "Fig5": FigureSpec("sinr", Scheme.MRT, "K", USER_COUNTS, "SINR CDF under MRT, different number of users"),
    "Fig6": FigureSpec("sinr", Scheme.FZF, "N", FZF_ANTENNAS, "SINR CDF under FZF, different number of antennas"),
    "Fig7": FigureSpec("sinr", Scheme.MRT, "N", MRT_ANTENNAS, "SINR CDF under MRT, different number of antennas"),
    "Fig8": FigureSpec("sinr", Scheme.MRT, "scheme", (Scheme.MRT, Scheme.FZF), "SINR CDF, MRT against FZF"),
    "Fig9": FigureSpec("rate", Scheme.FZF, "N", FZF_ANTENNAS, "Achievable rate under FZF against antennas"),
    "Fig10": FigureSpec("rate", Scheme.MRT, "N", MRT_ANTENNAS, "Achievable rate under MRT against antennas"),
    "Fig11": FigureSpec("outage", Scheme.FZF, "N", FZF_ANTENNAS, "Outage probability under FZF"),
    "Fig12": FigureSpec("outage", Scheme.MRT, "N", MRT_ANTENNAS, "Outage probability under MRT"),
}

_COLUMN_NAMES = {
    "ds": "ds_normalized_power",
    "in": "in_normalized_power",
    "sinr": "sinr_linear",
}


def write_curve(df: DataFrame, path: str) -> str:
    """Dot decimals and newline-terminated rows regardless of locale."""
    df.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
    logging.info(f"Curve saved to {path}")
    return path


def cdf_grid(samples: np.ndarray, points: int = settings.CDF_CURVE_POINTS) -> np.ndarray:
    """Evaluation grid spanning the 0.1%..99.9% sample range."""
    low, high = np.quantile(samples, [0.001, 0.999])
    if high <= low:
        high = low * (1.0 + 1e-6) + 1e-12
    return np.linspace(low, high, points)


class FigureReproducer:
    """Regenerates the curve data of every figure as CSV files."""

    def __init__(self, base: SystemConfig = SystemConfig(), show_progress: bool = True):
        self.base = base
        self.show_progress = show_progress

    @staticmethod
    def figure_ids() -> List[str]:
        return list(FIGURES)

    def reproduce(self, figure_id: str, out_dir: str) -> List[str]:
        spec = FIGURES.get(figure_id)
        if spec is None:
            raise UnknownFigureError(f"Unknown figure {figure_id!r}; expected one of {', '.join(FIGURES)}")
        os.makedirs(out_dir, exist_ok=True)
        logging.info(f"Reproducing {figure_id}: {spec.description}")
        handler: Callable = {
            "ds": self._cdf_curves,
            "in": self._cdf_curves,
            "sinr": self._cdf_curves,
            "rate": self._rate_curves,
            "outage": self._outage_curves,
        }[spec.quantity]
        return handler(figure_id, spec, out_dir)

    def _config(self, spec: FigureSpec, value) -> SystemConfig:
        if spec.sweep == "N":
            return replace(self.base, scheme=spec.scheme, N=value)
        if spec.sweep == "K":
            N = FZF_ANTENNAS[0] if spec.scheme is Scheme.FZF else MRT_ANTENNAS[0]
            return replace(self.base, scheme=spec.scheme, K=value, N=N, focus_user=None)
        return replace(self.base, scheme=value, N=COMPARISON_ANTENNAS)

    def _label(self, spec: FigureSpec, value) -> str:
        return value.value if spec.sweep == "scheme" else f"{spec.sweep}{value}"

    def _simulate(self, config: SystemConfig):
        deployment = deploy(config)
        samples = ExperimentRunner(config, self.show_progress).simulate(deployment)
        return deployment.lsm, samples

    def _cdf_curves(self, figure_id: str, spec: FigureSpec, out_dir: str) -> List[str]:
        paths = []
        for value in spec.values:
            config = self._config(spec, value)
            lsm, samples = self._simulate(config)
            k = focus_user(config, lsm)
            model = fit_model(lsm, k, config.N, config.rho_d, config.scheme, config.noise_model)
            observed, analytic = self._marginal(spec.quantity, samples, k, model)
            grid = cdf_grid(observed)
            df = DataFrame({
                _COLUMN_NAMES[spec.quantity]: grid,
                "cdf_empirical": ecdf(observed)(grid),
                "cdf_analytic": np.asarray(analytic(grid), dtype=float),
            })
            paths.append(write_curve(df, os.path.join(out_dir, f"{figure_id}_{self._label(spec, value)}.csv")))
        return paths

    @staticmethod
    def _marginal(quantity: str, samples: SinrSamples, k: int, model):
        if quantity == "ds":
            return samples.ds[:, k], model.ds_cdf
        if quantity == "in":
            return samples.in_[:, k], model.in_cdf
        return samples.sinr[:, k], model.cdf

    @staticmethod
    def _analytic_rate(model, k: int) -> Tuple[float, str]:
        try:
            return achievable_rate(model)
        except IntegrationToleranceError as e:
            logging.warning(f"User {k}: no analytic rate ({e})")
            return float("nan"), "unavailable"

    def _rate_curves(self, figure_id: str, spec: FigureSpec, out_dir: str) -> List[str]:
        """Rates averaged over all users, one file per user count."""
        paths = []
        for K in RATE_USER_COUNTS:
            rows = []
            for N in spec.values:
                config = replace(self.base, scheme=spec.scheme, K=K, N=N, focus_user=None)
                lsm, samples = self._simulate(config)
                simulated, analytic, bound, methods = [], [], [], set()
                for k in range(K):
                    model = fit_model(lsm, k, N, config.rho_d, config.scheme, config.noise_model)
                    value, method = self._analytic_rate(model, k)
                    simulated.append(empirical_rate(samples.sinr[:, k]))
                    analytic.append(value)
                    methods.add(method)
                    bound.append(rate_lower_bound(lsm, k, N, config.rho_d, config.scheme))
                rows.append({
                    "antennas": N,
                    "rate_simulated_bps_hz": float(np.mean(simulated)),
                    "rate_analytic_bps_hz": float(np.mean(analytic)),
                    "rate_lower_bound_bps_hz": float(np.mean(bound)),
                    "analytic_method": "+".join(sorted(methods)),
                })
            paths.append(write_curve(DataFrame(rows), os.path.join(out_dir, f"{figure_id}_K{K}.csv")))
        return paths

    def _outage_curves(self, figure_id: str, spec: FigureSpec, out_dir: str) -> List[str]:
        thresholds = np.linspace(0.0, MAX_OUTAGE_THRESHOLD, settings.OUTAGE_CURVE_POINTS)
        paths = []
        for value in spec.values:
            config = self._config(spec, value)
            lsm, samples = self._simulate(config)
            k = focus_user(config, lsm)
            model = fit_model(lsm, k, config.N, config.rho_d, config.scheme, config.noise_model)
            df = DataFrame({
                "rate_threshold_bps_hz": thresholds,
                "outage_empirical": empirical_outage(samples.sinr[:, k], thresholds),
                "outage_analytic": outage(model, thresholds),
            })
            paths.append(write_curve(df, os.path.join(out_dir, f"{figure_id}_{self._label(spec, value)}.csv")))
        return paths

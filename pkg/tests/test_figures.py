# tests/test_figures.py
import os

import numpy as np
import pandas as pd
import pytest

from config.settings import settings
from core.errors import UnknownFigureError
from core.figures import FIGURES, FigureReproducer, cdf_grid
from core.scenario import SystemConfig


@pytest.fixture
def reproducer() -> FigureReproducer:
    base = SystemConfig(M=20, K=4, l_p=2, realizations=60, seed=3, workers=2)
    return FigureReproducer(base, show_progress=False)


def test_figure_ids():
    assert FigureReproducer.figure_ids() == [f"Fig{i}" for i in range(1, 13)]
    assert set(FIGURES) == set(FigureReproducer.figure_ids())


def test_unknown_figure(reproducer, tmp_path):
    with pytest.raises(UnknownFigureError):
        reproducer.reproduce("Fig99", str(tmp_path))


def test_cdf_grid_spans_sample_range():
    samples = np.random.default_rng(1).exponential(size=1000)
    grid = cdf_grid(samples)
    assert grid.size == settings.CDF_CURVE_POINTS
    assert grid[0] >= samples.min() and grid[-1] <= samples.max()
    constant = cdf_grid(np.full(10, 2.0))
    assert constant[-1] > constant[0]


def test_desired_signal_cdf_files(reproducer, tmp_path):
    paths = reproducer.reproduce("Fig1", str(tmp_path / "curves"))
    assert [os.path.basename(p) for p in paths] == ["Fig1_N2.csv", "Fig1_N4.csv", "Fig1_N8.csv"]
    with open(paths[0], "rb") as f:
        raw = f.read()
    assert b"\r" not in raw
    assert raw.splitlines()[0] == b"ds_normalized_power,cdf_empirical,cdf_analytic"
    df = pd.read_csv(paths[0])
    assert len(df) == settings.CDF_CURVE_POINTS
    assert df["cdf_empirical"].is_monotonic_increasing
    assert df["cdf_analytic"].between(0.0, 1.0).all()


def test_scheme_comparison_files(reproducer, tmp_path):
    paths = reproducer.reproduce("Fig8", str(tmp_path))
    assert [os.path.basename(p) for p in paths] == ["Fig8_mrt.csv", "Fig8_fzf.csv"]
    assert list(pd.read_csv(paths[1]).columns) == ["sinr_linear", "cdf_empirical", "cdf_analytic"]


def test_outage_curve(reproducer, tmp_path):
    paths = reproducer.reproduce("Fig12", str(tmp_path))
    assert len(paths) == 3
    df = pd.read_csv(paths[0])
    assert len(df) == settings.OUTAGE_CURVE_POINTS
    assert df["rate_threshold_bps_hz"].iloc[-1] == pytest.approx(4.0)
    assert df["outage_analytic"].is_monotonic_increasing
    assert df["outage_empirical"].is_monotonic_increasing


def test_rate_curves(reproducer, tmp_path):
    paths = reproducer.reproduce("Fig10", str(tmp_path))
    assert [os.path.basename(p) for p in paths] == ["Fig10_K10.csv", "Fig10_K20.csv"]
    df = pd.read_csv(paths[0])
    assert list(df["antennas"]) == [2, 4, 8]
    assert list(df.columns) == ["antennas", "rate_simulated_bps_hz", "rate_analytic_bps_hz",
                                "rate_lower_bound_bps_hz", "analytic_method"]
    assert (df["rate_simulated_bps_hz"] > 0).all()
    assert df["rate_lower_bound_bps_hz"].is_monotonic_increasing


@pytest.mark.slow
def test_every_figure_at_reference_scale(tmp_path):
    reproducer = FigureReproducer(SystemConfig(realizations=300, seed=1), show_progress=False)
    for figure_id in reproducer.figure_ids():
        for path in reproducer.reproduce(figure_id, str(tmp_path)):
            df = pd.read_csv(path)
            assert len(df) > 0 and not df.drop(columns="analytic_method", errors="ignore").isna().all().any()

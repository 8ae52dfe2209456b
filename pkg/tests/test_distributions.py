# tests/test_distributions.py
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import integrate, stats

from conftest import build_lsm
from core.distributions import (GammaParams, SinrDistributionModel, achievable_rate, fit_model, gamma_match, outage,
                                pdf_mass, rate_closed, rate_closed_fzf, rate_closed_mrt, rate_lower_bound,
                                rate_quadrature, sinr_cdf_fzf, sinr_cdf_fzf_scalar, sinr_cdf_mrt,
                                sinr_cdf_mrt_integral, sinr_cdf_mrt_scalar)
from core.errors import ClosedFormUnavailable, DegenerateMomentsError, DomainError
from core.moments import MomentPair, NoiseModel, ds_fzf, in_moments
from core.precoding import Scheme


def mrt_model(j1=2.3, j2=3.7, ds_scale=0.2, in_scale=0.5) -> SinrDistributionModel:
    return SinrDistributionModel(Scheme.MRT, GammaParams(j2, in_scale), ds_params=GammaParams(j1, ds_scale))


def fzf_model(ds_value=2.0, j2=3.7, in_scale=0.5) -> SinrDistributionModel:
    return SinrDistributionModel(Scheme.FZF, GammaParams(j2, in_scale), ds_value=ds_value)


def test_gamma_match_recovers_parameters():
    params = gamma_match(MomentPair(1.0, 1.4))
    assert params.shape == pytest.approx(2.5)
    assert params.scale == pytest.approx(0.4)
    assert params.mean == pytest.approx(1.0)


@pytest.mark.parametrize("m1, m2", [(1.0, 1.0), (1.0, 0.5), (0.0, 1.0)])
def test_gamma_match_degenerate(m1, m2):
    with pytest.raises(DegenerateMomentsError):
        gamma_match(MomentPair(m1, m2))


def test_gamma_params_validation():
    with pytest.raises(DomainError):
        GammaParams(0.0, 1.0)
    assert GammaParams(2.0, 3.0).cdf(-1.0) == 0.0


def test_model_contracts():
    with pytest.raises(DomainError):
        SinrDistributionModel(Scheme.MRT, GammaParams(2.0, 1.0))
    with pytest.raises(DomainError):
        SinrDistributionModel(Scheme.FZF, GammaParams(2.0, 1.0), ds_value=0.0)


def test_mrt_cdf_is_scaled_beta_prime():
    model = mrt_model()
    assert model.theta == pytest.approx(0.4)
    x = np.array([0.0, 0.01, 0.1, 0.3, 0.4, 0.7, 2.0, 10.0, 1e4])
    expected = stats.betaprime.cdf(x / model.theta, 2.3, 3.7)
    assert_allclose(sinr_cdf_mrt(model, x), expected, rtol=1e-9, atol=1e-14)
    assert model.cdf(np.inf) == 1.0


def test_mrt_cdf_large_shapes_use_incomplete_beta():
    model = mrt_model(j1=400.0, j2=900.0, ds_scale=0.01, in_scale=0.01)
    x = np.array([0.3, 0.44, 0.6, 0.99, 2.0])
    assert_allclose(sinr_cdf_mrt(model, x), stats.betaprime.cdf(x, 400.0, 900.0), rtol=1e-8, atol=1e-14)


def test_mrt_cdf_scalar_path_agrees():
    model = mrt_model()
    for x in (0.05, 0.2, 0.4, 0.9, 1.6):
        assert sinr_cdf_mrt_scalar(model, x) == pytest.approx(sinr_cdf_mrt(model, x), rel=1e-9)
    assert sinr_cdf_mrt_scalar(model, 0.0) == 0.0


def test_mrt_cdf_matches_integral_form_on_quantile_grid():
    model = mrt_model()
    grid = model.quantile(np.linspace(0.02, 0.98, 20))
    integral = [sinr_cdf_mrt_integral(model, x) for x in grid]
    assert_allclose(sinr_cdf_mrt(model, grid), integral, atol=1e-7)


def test_quantile_inverts_cdf():
    for model in (mrt_model(), fzf_model()):
        q = np.array([0.01, 0.25, 0.5, 0.75, 0.99])
        assert_allclose(model.cdf(model.quantile(q)), q, atol=1e-9)


def test_fzf_cdf_is_gamma_survival():
    model = fzf_model()
    x = np.array([0.1, 0.5, 1.0, 3.0, 20.0])
    expected = stats.gamma.sf(2.0 / x, 3.7, scale=0.5)
    assert_allclose(sinr_cdf_fzf(model, x), expected, rtol=1e-12, atol=1e-300)
    for value in x:
        assert sinr_cdf_fzf_scalar(model, value) == pytest.approx(sinr_cdf_fzf(model, value), abs=1e-12)
    assert sinr_cdf_fzf(model, 0.0) == 0.0


def test_fzf_ds_cdf_is_a_step():
    model = fzf_model()
    assert model.ds_cdf(1.999) == 0.0
    assert model.ds_cdf(2.0) == 1.0


@given(st.floats(0.3, 20.0), st.floats(0.3, 20.0), st.floats(0.05, 5.0))
@hyp_settings(max_examples=40, deadline=None)
def test_mrt_cdf_is_monotone(j1, j2, theta):
    model = mrt_model(j1=j1, j2=j2, ds_scale=theta, in_scale=1.0)
    values = model.cdf(np.geomspace(1e-4, 1e3, 60) * theta)
    assert np.all(np.diff(values) >= -1e-12)
    assert np.all((values >= 0) & (values <= 1))


@pytest.mark.parametrize("model", [mrt_model(), fzf_model()], ids=["mrt", "fzf"])
def test_pdf_is_normalized(model):
    assert pdf_mass(model) == pytest.approx(1.0, abs=1e-8)


def test_pdf_integrates_to_cdf():
    model = fzf_model()
    value, _ = integrate.quad(model.pdf, 0.0, 1.5)
    assert value == pytest.approx(model.cdf(1.5), rel=1e-8)


@pytest.mark.parametrize("model", [
    mrt_model(),
    mrt_model(ds_scale=1.5),
    mrt_model(j1=1.4, j2=8.6, ds_scale=0.05, in_scale=0.3),
    fzf_model(),
    fzf_model(ds_value=0.3, j2=5.5, in_scale=0.2),
], ids=["mrt-theta-below-one", "mrt-theta-above-one", "mrt-small", "fzf", "fzf-small"])
def test_closed_form_rate_matches_quadrature(model):
    assert rate_closed(model) == pytest.approx(rate_quadrature(model), rel=1e-6)


def test_closed_form_guards():
    with pytest.raises(ClosedFormUnavailable):
        rate_closed_mrt(mrt_model(j2=3.0))
    with pytest.raises(ClosedFormUnavailable):
        rate_closed_mrt(mrt_model(ds_scale=0.5004, in_scale=0.5))
    with pytest.raises(ClosedFormUnavailable):
        rate_closed_fzf(fzf_model(j2=4.0005))
    with pytest.raises(DomainError):
        rate_closed_fzf(mrt_model())


def test_achievable_rate_falls_back_to_quadrature():
    model = mrt_model(j2=3.0)
    estimate = achievable_rate(model)
    assert estimate.method == "quadrature"
    assert estimate.value == pytest.approx(rate_quadrature(model))
    assert achievable_rate(mrt_model()).method == "closed_form"


def test_quadrature_rate_matches_sampled_expectation():
    model = mrt_model()
    rng = np.random.default_rng(9)
    ds = rng.gamma(2.3, 0.2, 400_000)
    interference = rng.gamma(3.7, 0.5, 400_000)
    rates = np.log2(1.0 + ds / interference)
    se = rates.std() / math.sqrt(rates.size)
    assert abs(rate_quadrature(model) - rates.mean()) < 4 * se


def test_outage_is_cdf_at_rate_threshold():
    model = mrt_model()
    r = np.array([0.0, 0.5, 1.0, 2.0])
    assert_allclose(outage(model, r), model.cdf(np.exp2(r) - 1.0))
    assert np.all(np.diff(outage(model, r)) >= 0)
    with pytest.raises(DomainError):
        outage(model, -0.1)


def test_fit_model_from_deployment():
    lsm = build_lsm(M=4, K=4, l_p=2)
    mrt = fit_model(lsm, 1, 2, 1.0, Scheme.MRT)
    assert mrt.scheme is Scheme.MRT and mrt.ds_params.shape > 0
    fzf = fit_model(lsm, 1, 5, 1.0, "fzf")
    assert fzf.scheme is Scheme.FZF and fzf.ds_value > 0


def test_fzf_rate_exceeds_lower_bound():
    lsm = build_lsm(M=6, K=4, l_p=2)
    for k in range(lsm.K):
        model = fit_model(lsm, k, 5, 2.0, Scheme.FZF)
        assert rate_quadrature(model) >= rate_lower_bound(lsm, k, 5, 2.0, Scheme.FZF)


def test_lower_bound_grows_with_antennas():
    lsm = build_lsm(M=6, K=4, l_p=2)
    bounds = [rate_lower_bound(lsm, 0, N, 2.0, Scheme.MRT) for N in (2, 4, 8)]
    assert bounds == sorted(bounds)


@pytest.mark.parametrize("omega", [0.5, 2.0, 5.0])
def test_fzf_closed_form_at_moderate_omega(omega):
    model = fzf_model(ds_value=0.5 * omega, j2=3.7, in_scale=0.5)
    assert rate_closed_fzf(model) == pytest.approx(rate_quadrature(model), rel=1e-6)


def test_fzf_closed_form_unavailable_at_large_omega():
    model = fzf_model(ds_value=100.0, j2=50.5, in_scale=0.5)
    with pytest.raises(ClosedFormUnavailable):
        rate_closed_fzf(model)
    estimate = achievable_rate(model)
    assert estimate.method == "quadrature"
    assert estimate.value == pytest.approx(rate_quadrature(model))


def test_mrt_closed_form_with_large_shapes():
    model = mrt_model(j1=60.3, j2=250.7, ds_scale=0.004, in_scale=0.01)
    assert rate_closed_mrt(model) == pytest.approx(rate_quadrature(model), rel=1e-6)


def test_fit_model_defaults_to_constant_noise():
    lsm = build_lsm(M=4, K=4, l_p=2)
    model = fit_model(lsm, 1, 2, 1.0, Scheme.MRT)
    explicit = fit_model(lsm, 1, 2, 1.0, Scheme.MRT, NoiseModel.CONSTANT)
    assert model.in_params == explicit.in_params


def test_fzf_lower_bound_is_rate_at_mean_interference():
    lsm = build_lsm(M=6, K=4, l_p=2)
    for k in range(lsm.K):
        mean_in = in_moments(lsm, k, 5, 2.0, Scheme.FZF).m1
        expected = math.log2(1.0 + ds_fzf(lsm, k, 5, 2.0) / mean_in)
        assert rate_lower_bound(lsm, k, 5, 2.0, Scheme.FZF) == pytest.approx(expected, rel=1e-12)


def test_fzf_bound_is_tighter_than_mrt_bound():
    lsm = build_lsm(M=3, K=1, l_p=1)
    gaps = {scheme: rate_quadrature(fit_model(lsm, 0, 4, 100.0, scheme)) - rate_lower_bound(lsm, 0, 4, 100.0, scheme)
            for scheme in (Scheme.MRT, Scheme.FZF)}
    assert -1e-9 <= gaps[Scheme.FZF] < gaps[Scheme.MRT]

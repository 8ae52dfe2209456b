# tests/test_channel.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import build_lsm
from core.channel import (ChannelRealization, PilotSet, assign_pilots, complex_normal, draw_true_channels,
                          mmse_estimate, pilot_phase)
from core.errors import DomainError


@pytest.mark.parametrize("length", [1, 2, 5, 10])
def test_dft_pilots_are_orthogonal(length):
    pilots = PilotSet.dft(length)
    assert pilots.book.shape == (length, length)
    assert pilots.orthogonality_residual() < 1e-9


def test_pilot_length_must_be_positive():
    with pytest.raises(DomainError):
        PilotSet.dft(0)


def test_sequential_pilot_assignment():
    pilot_index, copilots = assign_pilots(5, 2)
    assert pilot_index.tolist() == [0, 1, 0, 1, 0]
    assert copilots[0].tolist() == [0, 2, 4]
    assert copilots[1].tolist() == [1, 3]
    with pytest.raises(DomainError):
        assign_pilots(3, 4)
    with pytest.raises(DomainError):
        assign_pilots(3, 0)


def test_complex_normal_variance(rng):
    draws = complex_normal(rng, 200_000, variance=2.5)
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(2.5, rel=0.02)
    assert abs(np.mean(draws)) < 0.02


def test_noiseless_pilot_projection_collects_copilot_channels(small_lsm, rng):
    pilots = PilotSet.dft(small_lsm.pilot_length)
    rho_p = 10.0
    true_h = draw_true_channels(small_lsm, 3, rng)
    pilot_rx = pilot_phase(small_lsm, true_h, pilots, rho_p, rng, add_noise=False)
    _, _, hbar = mmse_estimate(small_lsm, pilot_rx, pilots, true_h)
    for p in range(small_lsm.pilot_length):
        users = np.flatnonzero(small_lsm.pilot_index == p)
        expected = np.sqrt(rho_p) * small_lsm.pilot_length * true_h[:, :, users].sum(axis=2)
        assert_allclose(hbar[:, :, p], expected, atol=1e-10)


def test_copilot_estimates_are_parallel(small_lsm, rng):
    real = ChannelRealization.draw(small_lsm, 4, PilotSet.dft(small_lsm.pilot_length), 10.0, rng)
    k, k1 = small_lsm.copilots[0][:2]
    ratio = small_lsm.kappa[:, k1] / small_lsm.kappa[:, k]
    assert_allclose(real.est_h[:, :, k1], ratio[:, None] * real.est_h[:, :, k], rtol=1e-12)
    assert_allclose(real.est_h + real.err_h, real.true_h, atol=1e-12)
    assert real.N == 4


def test_estimate_and_error_variances(rng):
    lsm = build_lsm(M=3, K=3, l_p=2, rho_p=2.0)
    N = 4000
    real = ChannelRealization.draw(lsm, N, PilotSet.dft(lsm.pilot_length), 2.0, rng)
    est_power = np.mean(np.abs(real.est_h) ** 2, axis=1)
    err_power = np.mean(np.abs(real.err_h) ** 2, axis=1)
    assert_allclose(est_power, lsm.c, rtol=0.1)
    assert_allclose(err_power, lsm.beta - lsm.c, rtol=0.1)


def test_true_channels_need_antennas(small_lsm, rng):
    with pytest.raises(DomainError):
        draw_true_channels(small_lsm, 0, rng)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from densecode.channel import (
    ChannelConfig,
    SignalEnsemble,
    detector_noise,
    noise_variance,
    observable_variance,
    signal_variance,
)
from densecode.opa import Correction, OpaParams, ellipse_geometry


@pytest.mark.parametrize("corr", list(Correction))
def test_origin_noise_exp_r_3(corr):
    ch = ChannelConfig.from_params(OpaParams.from_squeezing(3.0), corr)
    for det in (1, 2):
        assert noise_variance(ch, det, 0.0, 0.0) == pytest.approx(1 / 9, abs=1e-14)


def test_vacuum_noise_is_unity():
    ch = ChannelConfig.vacuum()
    k = np.linspace(0, 3, 20)
    for det in (1, 2):
        assert np.allclose(noise_variance(ch, det, k, 0.2), 1.0, atol=1e-14)


@given(st.floats(0, 3), st.floats(-4, 4))
def test_detector_noise_product_bound(r, psi):
    # each detector sees an ellipse of area 1, so its variance lies in [e^-2r, e^2r]
    for det in (1, 2):
        v = detector_noise(r, psi, det)
        assert math.exp(-2 * r) * (1 - 1e-12) <= v <= math.exp(2 * r) * (1 + 1e-12)
    # orthogonal ellipses give equal noise on both detectors
    assert detector_noise(r, psi, 1) == pytest.approx(detector_noise(r, psi - math.pi / 2, 2))


def test_ideal_noise_is_exp_minus_2r():
    ch = ChannelConfig.from_params(OpaParams(math.log(10)), Correction.IDEAL)
    k = np.linspace(0, 2, 50)
    r, _, _ = ch.squeezing(k, 0.0)
    assert np.allclose(noise_variance(ch, 1, k, 0.0), np.exp(-2 * r), rtol=1e-12)
    assert np.all(noise_variance(ch, 2, k, 0.0) <= 1 + 1e-12)


def test_correction_improves_log_noise_integral():
    params = OpaParams(math.log(3))
    vals = {}
    for corr in Correction:
        ch = ChannelConfig.from_params(params, corr)
        vals[corr] = quad(lambda k: k * math.log(float(noise_variance(ch, 1, k, 0.0))), 0, 3, limit=200)[0]
    assert vals[Correction.IDEAL] <= vals[Correction.NONE]
    assert vals[Correction.QUADRATIC_LENS] <= vals[Correction.NONE]


def test_second_opa_is_rotated():
    ch = ChannelConfig.from_params(OpaParams(math.log(3), temporal_dispersion=0.5), Correction.NONE)
    k, w = np.array([0.0, 0.2, 0.5, 0.9]), 0.3
    U1, V1 = ch.coefficients(1, k, w)
    U2, V2 = ch.coefficients(2, k, w)
    U2m, V2m = ch.coefficients(2, k, -w)
    U1m, V1m = ch.coefficients(1, k, -w)
    _, psi1, _ = ellipse_geometry(U1, V1, U1m, V1m)
    _, psi2, _ = ellipse_geometry(U2, V2, U2m, V2m)
    assert np.allclose(np.sin(2 * (psi1 - psi2 - np.pi / 2)), 0, atol=1e-12)
    with pytest.raises(ValueError):
        ch.coefficients(3, k, w)


def test_signal_variance_normalisation():
    ens = SignalEnsemble(photon_flux=2.5, d_A=0.7, temporal_band=1.3)
    radial = quad(lambda k: 2 * math.pi * k * float(signal_variance(ens, k, 0.0)), 0, 20)[0]
    total = radial * ens.temporal_band / (2 * math.pi) ** 3
    assert total == pytest.approx(ens.flux_density, rel=1e-10)
    assert signal_variance(ens, 0.0, 0.0) == pytest.approx(ens.peak_snr_scale, rel=1e-14)
    assert signal_variance(ens, 0.0, 0.66) == 0.0


def test_observable_adds_signal():
    ch = ChannelConfig.from_params(OpaParams(1.0))
    ens = SignalEnsemble(3.0, 1.0)
    k = np.linspace(0, 1, 5)
    assert np.allclose(
        observable_variance(ch, ens, 2, k, 0.0),
        noise_variance(ch, 2, k, 0.0) + signal_variance(ens, k, 0.0),
    )


@settings(deadline=None)
@given(st.floats(0, 2), st.floats(0, 3), st.floats(-1, 1))
def test_noise_even_in_omega(g, k, w):
    ch = ChannelConfig.from_params(OpaParams(g, temporal_dispersion=0.7), Correction.NONE)
    for det in (1, 2):
        assert noise_variance(ch, det, k, w) == pytest.approx(noise_variance(ch, det, k, -w), rel=1e-12)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        SignalEnsemble(-1.0)
    with pytest.raises(ValueError):
        SignalEnsemble(1.0, d_A=0.0)
    with pytest.raises(ValueError):
        SignalEnsemble(1.0, 1.0, temporal_band=0.0)
    with pytest.raises(ValueError):
        detector_noise(1.0, 0.0, 3)

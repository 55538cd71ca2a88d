import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bessel_ratio_mp, kent_c_quad
from spheregof.geometry import log_surface_area
from spheregof.special import (
    bessel_i_ratio, kent_log_normalizer, kent_log_normalizer_grad, log_scaled_bessel_i,
    mean_resultant_length, mean_resultant_length_derivative, vmf_log_normalizer,
)

# mpmath besseli quotients.
RATIO_REFERENCE = [
    (1.5, 0.01, 0.0033333111113227486),
    (1.5, 1.0, 0.3130352854993313),
    (2.5, 3.0, 0.48890064032889013),
    (5.0, 50.0, 0.9132095998737405),
    (1.0, 700.0, 0.9992854588184261),
    (50.0, 10.0, 0.09903802650645796),
]

# log of 2 pi int exp(kappa t) I_0(beta (1 - t^2)) dt by adaptive quadrature.
KENT_LOG_C_REFERENCE = [
    (0.597, 1.043, 2.727476297320234),
    (5.0, 2.0, 5.40023391373112),
    (2.0, 0.5, 3.1504654900103475),
    (10.0, 1.0, 9.549998989840294),
    (0.5, 3.0, 3.598245701266431),
]


@pytest.mark.parametrize("nu,kappa,expected", RATIO_REFERENCE)
def test_bessel_ratio_reference(nu, kappa, expected):
    assert bessel_i_ratio(nu, kappa) == pytest.approx(expected, rel=1e-12)


def test_half_order_closed_forms():
    # I_{1/2}/I_{-1/2} = tanh and I_{3/2}/I_{1/2} = coth - 1/k.
    for k in (1e-6, 0.05, 0.1, 0.3, 2.0, 40.0):
        assert bessel_i_ratio(0.5, k) == pytest.approx(math.tanh(k), rel=1e-14)
        assert bessel_i_ratio(1.5, k) == pytest.approx(bessel_ratio_mp(1.5, k), rel=1e-13)


def test_bessel_ratio_at_zero_and_domain():
    assert bessel_i_ratio(2.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        bessel_i_ratio(0.2, 1.0)
    with pytest.raises(ValueError):
        bessel_i_ratio(1.5, -1.0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1.0, 1.5, 2.5, 4.0]), st.floats(1e-3, 2000.0))
def test_mean_resultant_length_monotone_and_bounded(nu, kappa):
    d = int(2 * nu)
    a = mean_resultant_length(kappa, d)
    b = mean_resultant_length(kappa * 1.01, d)
    assert 0.0 < a < 1.0
    assert b >= a


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 400.0), st.sampled_from([2, 3, 5, 10]))
def test_mean_resultant_length_matches_mpmath(kappa, d):
    assert mean_resultant_length(kappa, d) == pytest.approx(bessel_ratio_mp(d / 2, kappa), rel=1e-11)


def test_mean_resultant_length_derivative_against_finite_difference():
    for d in (2, 3, 7):
        for k in (0.4, 3.0, 30.0):
            h = 1e-6 * k
            fd = (mean_resultant_length(k + h, d) - mean_resultant_length(k - h, d)) / (2 * h)
            assert mean_resultant_length_derivative(k, d) == pytest.approx(fd, rel=1e-6)


def test_log_scaled_bessel_continuous_across_branch():
    nu = np.array([0.5, 1.5, 10.0])
    lo = log_scaled_bessel_i(nu, np.full(3, 499.999999))
    hi = log_scaled_bessel_i(nu, np.full(3, 500.000001))
    assert np.allclose(lo, hi, rtol=0, atol=1e-5)


def test_vmf_normalizer_uniform_limit():
    for d in (2, 3, 6):
        assert vmf_log_normalizer(0.0, d) == pytest.approx(-log_surface_area(d), abs=1e-14)


def test_vmf_normalizer_large_kappa_finite():
    # Large-kappa limit: C_3(k) ~ k / (2 pi) for k -> inf, scaled by e^{-k}.
    k = 1e5
    assert vmf_log_normalizer(k, 3) + k == pytest.approx(math.log(k / (2 * math.pi)), abs=1e-9)


@pytest.mark.parametrize("kappa,beta,expected", KENT_LOG_C_REFERENCE)
def test_kent_normalizer_reference(kappa, beta, expected):
    assert kent_log_normalizer(kappa, beta) == pytest.approx(expected, rel=1e-12)


def test_kent_normalizer_reduces_to_vmf():
    for k in (0.1, 1.0, 20.0):
        assert kent_log_normalizer(k, 0.0) == pytest.approx(-vmf_log_normalizer(k, 3), abs=1e-12)


def test_kent_normalizer_fresh_quadrature():
    assert math.exp(kent_log_normalizer(3.0, 1.2)) == pytest.approx(kent_c_quad(3.0, 1.2), rel=1e-11)


def test_kent_gradient_matches_quadrature_moments():
    # E[x1] and E[x2^2 - x3^2] at (2, 0.5) from 2-D quadrature.
    _, dk, db = kent_log_normalizer_grad(2.0, 0.5)
    assert dk == pytest.approx(0.530876486637489, rel=1e-9)
    assert db == pytest.approx(0.0967539155182514, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 40.0), st.floats(0.0, 30.0))
def test_kent_gradient_finite_differences(kappa, beta):
    logc, dk, db = kent_log_normalizer_grad(kappa, beta)
    assert logc == pytest.approx(kent_log_normalizer(kappa, beta), rel=1e-13)
    h = 1e-5
    fk = (kent_log_normalizer(kappa + h, beta) - kent_log_normalizer(kappa - h, beta)) / (2 * h)
    assert dk == pytest.approx(fk, rel=1e-5, abs=1e-7)
    if beta > h:
        fb = (kent_log_normalizer(kappa, beta + h) - kent_log_normalizer(kappa, beta - h)) / (2 * h)
        assert db == pytest.approx(fb, rel=1e-5, abs=1e-7)

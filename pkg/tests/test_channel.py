import math

import numpy as np
import pytest
from scipy import integrate

from rfthz.channel import (
    AlphaMuParams,
    DegenerateParameterError,
    LinkBudget,
    alpha_mu_cdf,
    alpha_mu_moment,
    alpha_mu_pdf,
    average_snrs,
    no_pointing_error,
    pointing_from_jitter,
    rf_path_loss_dB,
    thz_cdf,
    thz_moment,
    thz_path_gain,
    thz_pdf,
)

THZ = AlphaMuParams(2.0, 2.6)
PE10 = pointing_from_jitter(0.10)


def test_rayleigh_pdf_and_cdf():
    p = AlphaMuParams(2.0, 1.0)
    assert alpha_mu_pdf(0.5, p, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert alpha_mu_cdf(1.0, p, 1.0) == pytest.approx(1 - math.exp(-1.0), rel=1e-14)
    assert alpha_mu_cdf(0.0, p, 1.0) == 0.0


def test_alpha_mu_pdf_origin():
    assert alpha_mu_pdf(0.0, AlphaMuParams(2.0, 2.0), 3.0) == 0.0


def test_alpha_mu_normalisation():
    p = AlphaMuParams(2.0, 2.0)
    total = integrate.quad(lambda g: alpha_mu_pdf(g, p, 1.0), 0, 200, epsabs=0, epsrel=1e-12, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-9)


def test_alpha_mu_cdf_matches_integral():
    p = AlphaMuParams(1.5, 2.4)
    for g in (0.1, 0.7, 2.0, 6.0):
        q = integrate.quad(lambda x: alpha_mu_pdf(x, p, 2.0), 0, g, epsabs=0, epsrel=1e-12)[0]
        assert alpha_mu_cdf(g, p, 2.0) == pytest.approx(q, abs=1e-9)


def test_alpha_mu_moments():
    p = AlphaMuParams(2.0, 1.0)
    assert alpha_mu_moment(1, p, 3.0) == pytest.approx(3.0, rel=1e-14)
    assert alpha_mu_moment(2, p, 3.0) == pytest.approx(18.0, rel=1e-14)
    with pytest.raises(ValueError):
        alpha_mu_moment(-1.0, p, 1.0)


def test_alpha_mu_validation():
    with pytest.raises(ValueError):
        AlphaMuParams(2.0, -1.0)
    with pytest.raises(ValueError):
        AlphaMuParams(0.0, 1.0)
    with pytest.raises(ValueError):
        alpha_mu_pdf(-1.0, AlphaMuParams(2.0, 1.0), 1.0)


def test_thz_pdf_normalisation():
    gbar = 50.0
    f = lambda u: float(thz_pdf(math.exp(u), THZ, PE10, gbar)) * math.exp(u)
    total = integrate.quad(f, -60, math.log(1e4 * gbar), limit=400, epsabs=0, epsrel=1e-12)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_thz_pdf_origin():
    assert thz_pdf(0.0, THZ, PE10, 1.0) == 0.0


def test_thz_cdf_matches_integral():
    gbar = 10.0
    f = lambda u: float(thz_pdf(math.exp(u), THZ, PE10, gbar)) * math.exp(u)
    for g in np.logspace(-4, 1, 20):
        q = integrate.quad(f, -80, math.log(g), limit=400, epsabs=0, epsrel=1e-12)[0]
        assert thz_cdf(g, THZ, PE10, gbar) == pytest.approx(q, abs=1e-8)


def test_thz_cdf_vectorised():
    g = np.array([0.0, 0.01, 1.0, 100.0])
    out = thz_cdf(g, THZ, PE10, 1e4)
    assert out[0] == 0.0 and np.all(np.diff(out) > 0)


def test_no_pointing_limit():
    pe = no_pointing_error()
    for r in np.logspace(-2, 1, 7):
        assert thz_pdf(r, THZ, pe, 1.0) == pytest.approx(alpha_mu_pdf(r, THZ, 1.0), abs=1e-4)
        assert thz_cdf(r, THZ, pe, 1.0) == pytest.approx(alpha_mu_cdf(r, THZ, 1.0), abs=1e-4)


def test_thz_degenerate():
    p = AlphaMuParams(2.0, PE10.phi / 2.0)
    with pytest.raises(DegenerateParameterError):
        thz_pdf(1.0, p, PE10, 1.0)


def test_thz_moment_matches_integral():
    gbar = 5.0
    f = lambda u: math.exp(u) ** 1.5 * float(thz_pdf(math.exp(u), THZ, PE10, gbar)) * math.exp(u)
    q = integrate.quad(f, -60, 12, limit=400, epsabs=0, epsrel=1e-11)[0]
    assert thz_moment(1.5, THZ, PE10, gbar) == pytest.approx(q, rel=1e-8)


@pytest.mark.parametrize("sigma,phi", [(0.08, 14.478976265625), (0.15, 4.11846436), (0.02, 231.66362025)])
def test_phi_from_jitter(sigma, phi):
    assert pointing_from_jitter(sigma).phi == pytest.approx(phi, rel=1e-12)


def test_rf_path_loss():
    assert rf_path_loss_dB(100, 800e6) == pytest.approx(65.06179973983887, abs=1e-10)
    # direct arithmetic gives 59.85398 dB
    assert rf_path_loss_dB(50, 800e6) == pytest.approx(59.8545, abs=1e-3)
    assert rf_path_loss_dB(1, 1e9) == pytest.approx(32.4, abs=1e-12)


def test_thz_path_gain():
    g = thz_path_gain(50, 275e9, 55, 2.8e-4)
    assert g == pytest.approx(0.544838864775273, rel=1e-12)
    # quoted 0.5452 corresponds to c = 3e8
    assert g == pytest.approx(0.5452, rel=1e-3)
    no_abs = thz_path_gain(50, 275e9, 55, 0.0)
    assert g == pytest.approx(no_abs * math.exp(-0.5 * 2.8e-4 * 50), rel=1e-14)
    assert thz_path_gain(100, 275e9, 55, 2.8e-4) < 0.5 * g


def test_average_snrs():
    rf, thz = average_snrs(LinkBudget())
    assert 10 * math.log10(rf) == pytest.approx(80.93820026016113, abs=1e-9)
    _, thz30 = average_snrs(LinkBudget(p_tx_dBm=30.0))
    assert 10 * math.log10(thz30) == pytest.approx(98.72536158732454, abs=1e-9)
    lb = LinkBudget(p_tx_dBm=-101.0 + rf_path_loss_dB(100, 800e6) - 25.0)
    assert 10 * math.log10(average_snrs(lb)[0]) == pytest.approx(0.0, abs=1e-12)


def test_link_budget_validation():
    with pytest.raises(ValueError):
        LinkBudget(d_rf=0.0)
    with pytest.raises(ValueError):
        LinkBudget(kappa=-1.0)

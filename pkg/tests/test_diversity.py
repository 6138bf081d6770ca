import math

import numpy as np
import pytest
from scipy import integrate, stats

from rfthz.channel import AlphaMuParams, alpha_mu_cdf, alpha_mu_moment, alpha_mu_pdf
from rfthz.diversity import (
    DiversityConfig,
    NonIntegerMuError,
    Scheme,
    egc_snr,
    first_hop_cdf,
    first_hop_mean,
    first_hop_small_gamma,
    mrc_moment_match,
    mrc_pdf_exact,
    mrc_sum_moments,
    sc_cdf,
    sc_expansion,
    sc_pdf,
)
from rfthz.montecarlo import block_rng, sample_first_hop

RAY = AlphaMuParams(2.0, 1.0)


def test_sc_single_branch():
    p = AlphaMuParams(1.5, 2.4)
    cfg = DiversityConfig.iid("SC", 1, p, 3.0)
    g = np.array([0.1, 1.0, 7.0])
    assert np.allclose(sc_cdf(g, cfg), alpha_mu_cdf(g, p, 3.0), rtol=0, atol=0)
    assert np.allclose(sc_pdf(g, cfg), alpha_mu_pdf(g, p, 3.0), rtol=1e-15)


def test_sc_rayleigh_power_form():
    cfg = DiversityConfig.iid("SC", 3, RAY, 2.0)
    for g in (0.3, 2.0, 9.0):
        assert sc_cdf(g, cfg) == pytest.approx((1 - math.exp(-g / 2.0)) ** 3, rel=1e-14)
        assert sc_cdf(g, cfg, form="expansion") == pytest.approx((1 - math.exp(-g / 2.0)) ** 3, rel=1e-12)


def test_sc_expansion_matches_product():
    cfg = DiversityConfig.iid("SC", 2, AlphaMuParams(1.0, 2.0), 5.0)
    for g in np.linspace(0.2, 60.0, 20):
        assert sc_cdf(g, cfg, form="expansion") == pytest.approx(sc_cdf(g, cfg), abs=1e-10)
        assert sc_pdf(g, cfg, form="expansion") == pytest.approx(sc_pdf(g, cfg), abs=1e-10)


def test_sc_expansion_needs_integer_mu():
    with pytest.raises(NonIntegerMuError):
        sc_expansion(2, AlphaMuParams(1.0, 1.2))


def test_sc_pdf_integrates_to_one():
    cfg = DiversityConfig.iid("SC", 3, AlphaMuParams(1.5, 1.2), 4.0)
    total = integrate.quad(lambda g: float(sc_pdf(g, cfg)), 0, np.inf, limit=200, epsabs=0, epsrel=1e-10)[0]
    assert total == pytest.approx(1.0, abs=1e-8)


def test_sc_pdf_is_derivative_of_cdf():
    cfg = DiversityConfig("SC", (AlphaMuParams(1.5, 1.2), AlphaMuParams(2.0, 2.0), AlphaMuParams(1.0, 0.8)), 4.0)
    for g in (0.5, 3.0, 12.0):
        h = 1e-5 * g
        fd = (sc_cdf(g + h, cfg) - sc_cdf(g - h, cfg)) / (2 * h)
        assert sc_pdf(g, cfg) == pytest.approx(fd, rel=1e-6)


def test_sc_below_mrc():
    # the sum dominates the maximum, so the MRC CDF lies below the SC CDF
    p = AlphaMuParams(1.5, 1.0)
    sc = DiversityConfig.iid("SC", 3, p, 2.0)
    mrc = DiversityConfig.iid("MRC_APPROX", 3, p, 2.0)
    g = np.logspace(-2, 1.5, 15)
    assert np.all(sc_cdf(g, sc) >= first_hop_cdf(g, mrc))


def test_mrc_exact_single_branch():
    p = AlphaMuParams(1.5, 1.8)
    cfg = DiversityConfig.iid("MRC_EXACT", 1, p, 2.0)
    from rfthz.diversity import first_hop_pdf

    assert first_hop_pdf(1.3, cfg) == pytest.approx(alpha_mu_pdf(1.3, p, 2.0), rel=1e-8)


def test_mrc_exact_rayleigh_pair():
    cfg = DiversityConfig.iid("MRC_EXACT", 2, RAY, 2.0)
    for g in (0.2, 1.0, 4.0, 10.0):
        assert mrc_pdf_exact(g, cfg) == pytest.approx(g / 4.0 * math.exp(-g / 2.0), rel=1e-6)


def test_mrc_exact_mixed_branches_vs_histogram():
    cfg = DiversityConfig("MRC_EXACT", (AlphaMuParams(1.5, 1.8), AlphaMuParams(2.0, 1.2)), 1.0)
    w = sample_first_hop(cfg, block_rng(7, 0), 1_000_000)
    edges = np.quantile(w, np.linspace(0.05, 0.95, 6))
    counts, _ = np.histogram(w, edges)
    for i, c in enumerate(counts):
        mass = integrate.quad(lambda x: mrc_pdf_exact(x, cfg), edges[i], edges[i + 1], epsrel=1e-7)[0]
        sd = math.sqrt(len(w) * mass * (1 - mass))
        assert abs(c - len(w) * mass) < 3 * sd + 1


def test_sum_moments_rayleigh():
    cfg = DiversityConfig.iid("MRC_APPROX", 2, RAY, 1.5)
    m = mrc_sum_moments(cfg)
    assert m == pytest.approx([2 * 1.5, 6 * 1.5**2, 24 * 1.5**3], rel=1e-13)


def test_sum_moment_fractional_matches_samples():
    cfg = DiversityConfig.iid("MRC_APPROX", 2, AlphaMuParams(1.5, 1.0), 1.0)
    w = sample_first_hop(cfg, block_rng(3, 0), 2_000_000)
    est = np.sqrt(w)
    m = mrc_sum_moments(cfg, (0.5,))[0]
    assert abs(m - est.mean()) < 3 * est.std() / math.sqrt(len(w))


def test_moment_match_single_branch_identity():
    p = AlphaMuParams(1.7, 0.9)
    mm = mrc_moment_match(DiversityConfig.iid("MRC_APPROX", 1, p, 3.0))
    assert mm.params == p and mm.residual == 0.0


def test_moment_match_rayleigh_pair():
    cfg = DiversityConfig.iid("MRC_APPROX", 2, RAY, 1.0)
    mm = mrc_moment_match(cfg)
    got = [alpha_mu_moment(k, mm.params, 1.0) for k in (1, 2, 3)]
    assert got == pytest.approx([2.0, 6.0, 24.0], rel=1e-9)
    assert mm.converged


def test_moment_match_quality_five_branches():
    cfg = DiversityConfig.iid("MRC_APPROX", 5, AlphaMuParams(1.5, 1.0), 1.0)
    mm = mrc_moment_match(cfg)
    w = sample_first_hop(cfg, block_rng(11, 0), 1_000_000)
    assert stats.kstest(w, lambda x: alpha_mu_cdf(x, mm.params, 1.0)).statistic < 0.01


def test_egc_snr():
    assert egc_snr([4.0]) == pytest.approx(4.0)
    assert egc_snr([1.0, 1.0]) == pytest.approx(2.0)
    assert egc_snr([4.0, 0.0]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        egc_snr([-1.0, 2.0])


def test_first_hop_mean():
    p = AlphaMuParams(1.5, 1.2)
    cfg = DiversityConfig.iid("MRC_APPROX", 3, p, 2.0)
    assert first_hop_mean(cfg) == pytest.approx(3 * alpha_mu_moment(1, p, 2.0), rel=1e-12)
    sc = DiversityConfig.iid("SC", 2, RAY, 1.0)
    assert first_hop_mean(sc) == pytest.approx(1.5, rel=1e-9)


def test_small_gamma_law_matches_cdf():
    p = AlphaMuParams(1.5, 1.2)
    for scheme in ("SC", "MRC_APPROX"):
        cfg = DiversityConfig.iid(scheme, 2, p, 1.0)
        a, d = first_hop_small_gamma(cfg)
        g = 1e-6
        ref = first_hop_cdf(g, cfg) if scheme == "SC" else None
        if ref is not None:
            assert a * g**d == pytest.approx(ref, rel=1e-3)
        assert d == pytest.approx(2 * 1.5 * 1.2 / 2)


def test_small_gamma_law_mrc_rayleigh():
    # sum of two unit exponentials: F(g) ~ g^2 / 2
    a, d = first_hop_small_gamma(DiversityConfig.iid("MRC_EXACT", 2, RAY, 1.0))
    assert (a, d) == (pytest.approx(0.5), pytest.approx(2.0))


def test_config_validation():
    with pytest.raises(ValueError):
        DiversityConfig("SC", (), 1.0)
    with pytest.raises(ValueError):
        DiversityConfig.iid("SC", 1, RAY, 0.0)
    with pytest.raises(ValueError):
        DiversityConfig.iid("XX", 1, RAY, 1.0)
    assert DiversityConfig.iid("MRC_EXACT", 2, RAY, 1.0).scheme is Scheme.MRC_EXACT

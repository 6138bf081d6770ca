"""Per-hop SNR statistics and link-budget helpers.

RF branches follow the alpha-mu law

    f(g) = (A/2) g^(alpha mu/2 - 1) / gbar^(alpha mu/2) exp(-B (g/gbar)^(alpha/2)),

and the THz hop multiplies an alpha-mu SNR by the squared pointing gain
h_p = S0 exp(-2 r^2 / w_eq^2) with Rayleigh radial jitter r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .specfun import scaled_upper_gamma

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_W_EQ = 0.60882
# stand-in for phi -> infinity (no pointing error)
NO_POINTING_PHI = 1e6

__all__ = [
    "AlphaMuParams",
    "PointingModel",
    "LinkBudget",
    "DegenerateParameterError",
    "alpha_mu_pdf",
    "alpha_mu_cdf",
    "alpha_mu_moment",
    "alpha_mu_mellin",
    "thz_pdf",
    "thz_cdf",
    "thz_moment",
    "pointing_from_jitter",
    "no_pointing_error",
    "rf_path_loss_dB",
    "thz_path_gain",
    "average_snrs",
    "db_to_lin",
    "lin_to_db",
]


class DegenerateParameterError(ValueError):
    """Raised when parameters hit a pole coincidence of the analytic forms."""


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class AlphaMuParams:
    alpha: float
    mu: float
    omega: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "mu", "omega"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def A(self):
        return self.alpha * self.mu**self.mu / (self.omega ** (self.alpha * self.mu) * math.gamma(self.mu))

    @property
    def B(self):
        return self.mu / self.omega**self.alpha


@dataclass(frozen=True)
class PointingModel:
    sigma_s: float
    w_eq: float = DEFAULT_W_EQ
    S0: float = 0.054

    def __post_init__(self):
        if not (self.sigma_s > 0 and self.w_eq > 0):
            raise ValueError("sigma_s and w_eq must be positive")
        if not (0 < self.S0 <= 1):
            raise ValueError("S0 must lie in (0, 1]")

    @property
    def phi(self):
        return self.w_eq**2 / (4.0 * self.sigma_s**2)


def pointing_from_jitter(sigma_s, w_eq=DEFAULT_W_EQ, S0=0.054):
    return PointingModel(sigma_s=sigma_s, w_eq=w_eq, S0=S0)


def no_pointing_error(phi=NO_POINTING_PHI, w_eq=DEFAULT_W_EQ):
    """Pointing model with S0 = 1 and a very large phi."""
    return PointingModel(sigma_s=w_eq / (2.0 * math.sqrt(phi)), w_eq=w_eq, S0=1.0)


@dataclass(frozen=True)
class LinkBudget:
    f_rf: float = 800e6
    f_thz: float = 275e9
    d_rf: float = 100.0
    d_thz: float = 50.0
    g_rf_dBi: float = 25.0
    g_thz_dBi: float = 55.0
    kappa: float = 2.8e-4
    p_tx_dBm: float = 20.0
    noise_rf_dBm: float = -101.0
    noise_thz_dBm: float = -74.0
    thz_gain_is_power: bool = False

    def __post_init__(self):
        for name in ("f_rf", "f_thz", "d_rf", "d_thz"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")


def alpha_mu_pdf(gamma, p, gbar):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("gamma must be nonnegative")
    r = g / gbar
    e = p.alpha * p.mu / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = math.log(p.A / 2.0) - math.log(gbar) + (e - 1.0) * np.log(r) - p.B * r ** (p.alpha / 2.0)
        out = np.exp(logv)
    if np.any(g == 0):
        at0 = 0.0 if e > 1 else (np.inf if e < 1 else p.A / (2.0 * gbar))
        out = np.where(g == 0, at0, out)
    return out[()] if out.ndim == 0 else out


def alpha_mu_cdf(gamma, p, gbar):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("gamma must be nonnegative")
    out = special.gammainc(p.mu, p.B * (g / gbar) ** (p.alpha / 2.0))
    return out[()] if np.ndim(out) == 0 else out


def alpha_mu_moment(k, p, gbar):
    """E[gamma^k]; valid whenever mu + 2k/alpha > 0 (k may be negative)."""
    arg = p.mu + 2.0 * k / p.alpha
    if arg <= 0:
        raise ValueError("moment does not exist: mu + 2k/alpha <= 0")
    return math.exp(
        k * math.log(gbar) + special.gammaln(arg) - special.gammaln(p.mu) - (2.0 * k / p.alpha) * math.log(p.B)
    )


def alpha_mu_mellin(p, gbar):
    """(log_scale, Gamma factor list) for E[gamma^u] as a function of u.

    Returns ``(log_base, offset, weight)`` so that
    E[gamma^u] = exp(u * log_base) Gamma(offset + weight u) / Gamma(mu).
    """
    return math.log(gbar) - (2.0 / p.alpha) * math.log(p.B), p.mu, 2.0 / p.alpha


def _check_thz(p, pe):
    if abs(p.alpha * p.mu - pe.phi) < 1e-9:
        raise DegenerateParameterError(
            "phi coincides with alpha*mu; perturb phi by about 1e-6 relative to proceed"
        )


def thz_pdf(gamma, p, pe, gbar):
    _check_thz(p, pe)
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(g < 0):
        raise ValueError("gamma must be nonnegative")
    phi, a, mu = pe.phi, p.alpha, p.mu
    out = np.zeros_like(g)
    pos = g > 0
    r = g[pos] / gbar
    x = p.B * pe.S0 ** (-a) * r ** (a / 2.0)
    # x^(phi/a) Gamma(mu - phi/a, x) = x^mu E_(1 - mu + phi/a)(x)
    core = np.exp(mu * np.log(x) - special.gammaln(mu)) * scaled_upper_gamma(mu - phi / a, x)
    out[pos] = phi / (2.0 * gbar) * core / r
    if np.any(~pos):
        e = min(phi, a * mu) / 2.0
        out[~pos] = 0.0 if e > 1 else np.inf
    return out[0] if np.ndim(gamma) == 0 else out


def thz_cdf(gamma, p, pe, gbar):
    _check_thz(p, pe)
    g = np.atleast_1d(np.asarray(gamma, dtype=float))
    if np.any(g < 0):
        raise ValueError("gamma must be nonnegative")
    phi, a, mu = pe.phi, p.alpha, p.mu
    out = np.zeros_like(g)
    pos = g > 0
    x = p.B * pe.S0 ** (-a) * (g[pos] / gbar) ** (a / 2.0)
    tail = np.exp(mu * np.log(x) - special.gammaln(mu)) * scaled_upper_gamma(mu - phi / a, x)
    out[pos] = special.gammainc(mu, x) + tail
    out = np.clip(out, 0.0, 1.0)
    return out[0] if np.ndim(gamma) == 0 else out


def thz_moment(t, p, pe, gbar):
    """E[gamma_THz^t] for t > -min(phi, alpha mu)/2."""
    phi = pe.phi
    if not (p.mu + 2.0 * t / p.alpha > 0 and phi + 2.0 * t > 0):
        raise ValueError("THz moment does not exist for this order")
    return alpha_mu_moment(t, p, gbar) * pe.S0 ** (2.0 * t) * phi / (phi + 2.0 * t)


def rf_path_loss_dB(d_rf, f_rf):
    if d_rf <= 0 or f_rf <= 0:
        raise ValueError("distance and frequency must be positive")
    return 32.4 + 17.3 * math.log10(d_rf) + 20.0 * math.log10(f_rf * 1e-9)


def thz_path_gain(d_thz, f_thz, g_thz_dBi, kappa):
    """Linear amplitude gain c G / (4 pi f d) exp(-kappa d / 2)."""
    if d_thz <= 0 or f_thz <= 0 or kappa < 0:
        raise ValueError("invalid THz link geometry")
    G = 10.0 ** (g_thz_dBi / 10.0)
    return SPEED_OF_LIGHT * G / (4.0 * math.pi * f_thz * d_thz) * math.exp(-0.5 * kappa * d_thz)


def average_snrs(lb):
    """Linear (gbar_RF, gbar_THz) from a link budget."""
    rf_db = lb.p_tx_dBm + lb.g_rf_dBi - rf_path_loss_dB(lb.d_rf, lb.f_rf) - lb.noise_rf_dBm
    gain = thz_path_gain(lb.d_thz, lb.f_thz, lb.g_thz_dBi, lb.kappa)
    gain_db = (10.0 if lb.thz_gain_is_power else 20.0) * math.log10(gain)
    thz_db = lb.p_tx_dBm + gain_db - lb.noise_thz_dBm
    return 10.0 ** (rf_db / 10.0), 10.0 ** (thz_db / 10.0)

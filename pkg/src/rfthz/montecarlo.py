"""Monte-Carlo oracle for the end-to-end link.

Samples are drawn in fixed-size blocks.  Block ``b`` uses its own Philox
stream seeded by ``SeedSequence(master_seed, spawn_key=(b,))`` and per-block
accumulators are merged in block order, so estimates depend only on
(system, n_samples, master_seed) and never on the worker count.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .diversity import Scheme, egc_snr
from .e2e import SystemModel, fixed_gain_constant

__all__ = [
    "SimConfig",
    "Estimate",
    "Metric",
    "block_rng",
    "sample_alpha_mu",
    "sample_pointing_gain",
    "sample_thz",
    "sample_first_hop",
    "sample_e2e",
    "estimate_metric",
    "estimate_metrics",
]

DEFAULT_BLOCK = 1 << 18
MIN_SAMPLES = 10_000


@dataclass(frozen=True)
class SimConfig:
    sys: SystemModel
    n_samples: int
    master_seed: int = 20240607
    n_workers: int = 1
    block_size: int = DEFAULT_BLOCK
    relaying: str = "af"

    def __post_init__(self):
        if self.n_samples < 1 or self.n_workers < 1 or self.block_size < 1:
            raise ValueError("n_samples, n_workers and block_size must be positive")
        if self.relaying not in ("af", "df"):
            raise ValueError("relaying must be 'af' or 'df'")


@dataclass(frozen=True)
class Estimate:
    mean: float
    ci95_halfwidth: float
    n: int
    ci_low: float
    ci_high: float

    def contains(self, value):
        return self.ci_low <= value <= self.ci_high


@dataclass(frozen=True)
class Metric:
    kind: str
    gamma_th: float = 0.0
    p: float = 0.5
    q: float = 1.0

    @classmethod
    def outage(cls, gamma_th):
        return cls("outage", gamma_th=gamma_th)

    @classmethod
    def ber(cls, p=0.5, q=1.0):
        return cls("ber", p=p, q=q)

    @classmethod
    def capacity(cls):
        return cls("capacity")

    def values(self, r):
        if self.kind == "outage":
            return (r < self.gamma_th).astype(float)
        if self.kind == "ber":
            if self.p == 0.5:
                return 0.5 * special.erfc(np.sqrt(self.q * r))
            return 0.5 * special.gammaincc(self.p, self.q * r)
        if self.kind == "capacity":
            return np.log2(1.0 + r)
        raise ValueError(f"unknown metric {self.kind!r}")


def block_rng(master_seed, block):
    ss = np.random.SeedSequence(master_seed, spawn_key=(int(block),))
    return np.random.Generator(np.random.Philox(ss))


def sample_alpha_mu(p, gbar, rng, size=None):
    """gamma = gbar (G / B)^(2/alpha) with G ~ Gamma(mu, 1)."""
    return gbar * (rng.gamma(p.mu, 1.0, size=size) / p.B) ** (2.0 / p.alpha)


def sample_pointing_gain(pe, rng, size=None):
    """h_p = S0 exp(-2 r^2 / w_eq^2) with Rayleigh(sigma_s) radial jitter."""
    r = rng.rayleigh(pe.sigma_s, size=size)
    return pe.S0 * np.exp(-2.0 * r**2 / pe.w_eq**2)


def sample_thz(sys, rng, size=None):
    h = sample_pointing_gain(sys.pointing, rng, size)
    return sample_alpha_mu(sys.thz, sys.gbar_thz, rng, size) * h**2


def sample_first_hop(cfg, rng, size):
    g = np.stack([sample_alpha_mu(b, cfg.gbar_rf, rng, size) for b in cfg.branches], axis=-1)
    if cfg.scheme == Scheme.SC:
        return g.max(axis=-1)
    if cfg.scheme == Scheme.EGC:
        return egc_snr(g)
    return g.sum(axis=-1)


def sample_e2e(sys, rng, size=None, c_const=None, relaying="af"):
    """End-to-end SNR draws: W V / (V + C) for AF, min(W, V) for DF."""
    n = 1 if size is None else size
    w = sample_first_hop(sys.rf, rng, n)
    v = sample_thz(sys, rng, n)
    if relaying == "df":
        out = np.minimum(w, v)
    else:
        C = fixed_gain_constant(sys.rf, sys.relay) if c_const is None else c_const
        out = w * v / (v + C)
    return out[0] if size is None else out


def _block_stats(cfg, metrics, block, n, c_const):
    rng = block_rng(cfg.master_seed, block)
    r = sample_e2e(cfg.sys, rng, n, c_const=c_const, relaying=cfg.relaying)
    out = []
    for m in metrics:
        x = m.values(r)
        mean = float(x.mean())
        out.append((n, mean, float(((x - mean) ** 2).sum())))
    return out


def _merge(acc, part):
    # Chan et al. pairwise update of (count, mean, M2)
    n_a, mean_a, m2_a = acc
    n_b, mean_b, m2_b = part
    n = n_a + n_b
    d = mean_b - mean_a
    return n, mean_a + d * n_b / n, m2_a + m2_b + d * d * n_a * n_b / n


def _wilson(count, n, z):
    p = count / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(centre - half, 0.0), min(centre + half, 1.0)


def estimate_metrics(metrics, cfg):
    """Estimates for several metrics from one shared set of samples."""
    if cfg.n_samples < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are required")
    metrics = list(metrics)
    c_const = fixed_gain_constant(cfg.sys.rf, cfg.sys.relay)
    sizes = [cfg.block_size] * (cfg.n_samples // cfg.block_size)
    if cfg.n_samples % cfg.block_size:
        sizes.append(cfg.n_samples % cfg.block_size)
    jobs = list(enumerate(sizes))
    if cfg.n_workers > 1:
        with ThreadPoolExecutor(cfg.n_workers) as pool:
            parts = list(pool.map(lambda j: _block_stats(cfg, metrics, j[0], j[1], c_const), jobs))
    else:
        parts = [_block_stats(cfg, metrics, b, n, c_const) for b, n in jobs]

    z = float(stats.norm.ppf(0.975))
    out = []
    for k, m in enumerate(metrics):
        acc = parts[0][k]
        for p in parts[1:]:
            acc = _merge(acc, p[k])
        n, mean, m2 = acc
        half = z * math.sqrt(m2 / (n - 1) / n) if n > 1 else math.inf
        lo, hi = mean - half, mean + half
        if m.kind == "outage":
            count = round(mean * n)
            if count < 10:
                warnings.warn(f"only {count} outage events in {n} samples", RuntimeWarning, stacklevel=2)
            if count < 30:
                lo, hi = _wilson(count, n, z)
                half = 0.5 * (hi - lo)
        out.append(Estimate(mean=mean, ci95_halfwidth=half, n=n, ci_low=lo, ci_high=hi))
    return out


def estimate_metric(metric, cfg):
    return estimate_metrics([metric], cfg)[0]

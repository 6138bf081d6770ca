"""First-hop combined-SNR statistics for SC, MRC and EGC receivers.

Besides densities and CDFs, every analytic scheme exposes a Mellin-Barnes
representation of its negative moments E[W^-s] (``first_hop_rep``).  The
end-to-end module multiplies these by kernel and THz factors to build the
Fox-H specs for outage, BER and capacity.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .channel import AlphaMuParams, alpha_mu_cdf, alpha_mu_moment, alpha_mu_pdf
from .specfun import MAX_VARS, FoxHSpec, GammaFactor, foxh_eval, DEN, NUM

__all__ = [
    "Scheme",
    "DiversityConfig",
    "SCTerm",
    "SCExpansion",
    "MomentMatchedParams",
    "MomentMatchError",
    "NonIntegerMuError",
    "RepTerm",
    "sc_expansion",
    "sc_cdf",
    "sc_pdf",
    "mrc_pdf_exact",
    "mrc_cdf_exact",
    "mrc_sum_moments",
    "mrc_moment_match",
    "egc_snr",
    "first_hop_mean",
    "first_hop_cdf",
    "first_hop_pdf",
    "first_hop_rep",
    "first_hop_small_gamma",
]


class Scheme(str, enum.Enum):
    SC = "SC"
    MRC_EXACT = "MRC_EXACT"
    MRC_APPROX = "MRC_APPROX"
    EGC = "EGC"


class NonIntegerMuError(ValueError):
    pass


class MomentMatchError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class DiversityConfig:
    scheme: Scheme
    branches: tuple
    gbar_rf: float
    moment_mode: str = "snr"

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ValueError("at least one branch is required")
        if not self.gbar_rf > 0:
            raise ValueError("gbar_rf must be positive")
        if self.moment_mode not in ("snr", "envelope"):
            raise ValueError("moment_mode must be 'snr' or 'envelope'")

    @classmethod
    def iid(cls, scheme, n_antennas, params, gbar_rf, **kw):
        return cls(scheme, (params,) * int(n_antennas), gbar_rf, **kw)

    @property
    def n_antennas(self):
        return len(self.branches)

    @property
    def is_iid(self):
        return all(b == self.branches[0] for b in self.branches)

    @property
    def integer_mu(self):
        return all(float(b.mu).is_integer() for b in self.branches)

    def with_gbar(self, gbar_rf):
        return DiversityConfig(self.scheme, self.branches, gbar_rf, self.moment_mode)


# --- selection combining ---------------------------------------------------


@dataclass(frozen=True)
class SCTerm:
    """sign * coef * x^J * exp(-k x), with x = B (gamma/gbar)^(alpha/2)."""

    k: int
    indices: tuple
    coef: float
    sign: int
    J: int
    exponent: float  # J * alpha / 2, the power of gamma/gbar


@dataclass(frozen=True)
class SCExpansion:
    kind: str
    n_antennas: int
    params: AlphaMuParams
    terms: tuple = field(default=())

    def evaluate(self, gamma, gbar):
        g = np.asarray(gamma, dtype=float)
        p = self.params
        x = p.B * (g / gbar) ** (p.alpha / 2.0)
        total = np.zeros_like(x)
        for t in self.terms:
            with np.errstate(divide="ignore", invalid="ignore"):
                v = t.coef * np.exp(t.J * np.log(x) - t.k * x) if t.J else t.coef * np.exp(-t.k * x)
            total = total + t.sign * np.where(x == 0, 1.0 if t.J == 0 else 0.0, v)
        if self.kind == "pdf":
            total = total * alpha_mu_pdf(g, p, gbar)
        return total[()] if total.ndim == 0 else total


def _weak_compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def _q_power_terms(k, mu):
    """Terms of [Gamma(mu, x)/Gamma(mu)]^k = e^{-kx} (sum_{t<mu} x^t/t!)^k."""
    out = []
    for idx in _weak_compositions(k, mu):
        multinom = math.factorial(k)
        coef = 1.0
        J = 0
        for t, kt in enumerate(idx):
            multinom //= math.factorial(kt)
            coef /= math.factorial(t) ** kt
            J += t * kt
        out.append((idx, multinom * coef, J))
    return out


def sc_expansion(n_antennas, params, kind="cdf"):
    """Series form of F^N (``kind="cdf"``) or N F^(N-1) f (``kind="pdf"``)."""
    if not float(params.mu).is_integer():
        raise NonIntegerMuError("the SC series needs integer mu; use the product form instead")
    mu = int(params.mu)
    N = int(n_antennas)
    power = N if kind == "cdf" else N - 1
    lead = 1 if kind == "cdf" else N
    terms = []
    for k in range(power + 1):
        binom = math.comb(power, k)
        for idx, c, J in _q_power_terms(k, mu):
            terms.append(
                SCTerm(
                    k=k,
                    indices=idx,
                    coef=lead * binom * c,
                    sign=-1 if k % 2 else 1,
                    J=J,
                    exponent=J * params.alpha / 2.0,
                )
            )
    return SCExpansion(kind=kind, n_antennas=N, params=params, terms=tuple(terms))


def _check_scheme(cfg, *schemes):
    if cfg.scheme not in schemes:
        raise ValueError(f"operation needs scheme in {[s.value for s in schemes]}, got {cfg.scheme.value}")


def sc_cdf(gamma, cfg, form="power"):
    """Selection-combining CDF; ``form="expansion"`` uses the integer-mu series."""
    _check_scheme(cfg, Scheme.SC)
    if form == "expansion":
        if not cfg.is_iid:
            raise ValueError("series form is only available for i.i.d. branches")
        return sc_expansion(cfg.n_antennas, cfg.branches[0], "cdf").evaluate(gamma, cfg.gbar_rf)
    out = 1.0
    for b in cfg.branches:
        out = out * alpha_mu_cdf(gamma, b, cfg.gbar_rf)
    return out


def sc_pdf(gamma, cfg, form="power"):
    """Density of max(gamma_1..gamma_N): sum_i f_i prod_{j != i} F_j."""
    _check_scheme(cfg, Scheme.SC)
    if form == "expansion":
        if not cfg.is_iid:
            raise ValueError("series form is only available for i.i.d. branches")
        return sc_expansion(cfg.n_antennas, cfg.branches[0], "pdf").evaluate(gamma, cfg.gbar_rf)
    g = np.asarray(gamma, dtype=float)
    F = [alpha_mu_cdf(g, b, cfg.gbar_rf) for b in cfg.branches]
    out = 0.0
    for i, b in enumerate(cfg.branches):
        term = alpha_mu_pdf(g, b, cfg.gbar_rf)
        for j, Fj in enumerate(F):
            if j != i:
                term = term * Fj
        out = out + term
    return out


# --- Mellin-Barnes representation of E[W^-s] -------------------------------


@dataclass(frozen=True)
class RepTerm:
    """One term of E[W^-s] = sum coef * (1/2 pi i)^m int prod Gamma(...) z_s^-s prod z_e^-e.

    ``factors`` carry weights over (s, e_1..e_m).
    """

    coef: float
    factors: tuple
    log_zs: float
    log_ze: tuple = ()

    @property
    def m(self):
        return len(self.log_ze)


def _beta(p, gbar):
    # scale of gamma = beta * G^(2/alpha), G ~ Gamma(mu, 1)
    return math.log(gbar) - (2.0 / p.alpha) * math.log(p.B)


def _alpha_mu_rep(p, gbar):
    return [
        RepTerm(
            coef=1.0 / math.gamma(p.mu),
            factors=(GammaFactor(p.mu, (-2.0 / p.alpha,), NUM),),
            log_zs=_beta(p, gbar),
        )
    ]


def _sc_rep(cfg):
    p = cfg.branches[0]
    exp = sc_expansion(cfg.n_antennas, p, "pdf")
    lb = _beta(p, cfg.gbar_rf)
    terms = []
    for t in exp.terms:
        kk = t.k + 1
        a = t.J + p.mu
        coef = t.sign * t.coef * math.exp(-special.gammaln(p.mu) - a * math.log(kk))
        terms.append(
            RepTerm(
                coef=coef,
                factors=(GammaFactor(a, (-2.0 / p.alpha,), NUM),),
                log_zs=lb - (2.0 / p.alpha) * math.log(kk),
            )
        )
    return terms


def _mrc_rep(cfg):
    br = cfg.branches
    N = len(br)
    if N == 1:
        return _alpha_mu_rep(br[0], cfg.gbar_rf)
    lbs = [_beta(b, cfg.gbar_rf) for b in br]
    m = N - 1
    dim = 1 + m
    facs = [GammaFactor(0.0, (1.0,) + (0.0,) * m, DEN)]
    for i in range(m):
        e = [0.0] * dim
        e[1 + i] = 1.0
        facs.append(GammaFactor(0.0, tuple(e), NUM))
        e2 = [0.0] * dim
        e2[1 + i] = -2.0 / br[i].alpha
        facs.append(GammaFactor(br[i].mu, tuple(e2), NUM))
    last = (1.0,) + (-1.0,) * m
    facs.append(GammaFactor(0.0, last, NUM))
    aN = br[-1].alpha
    facs.append(GammaFactor(br[-1].mu, tuple(-2.0 / aN * w for w in last), NUM))
    coef = math.exp(-sum(special.gammaln(b.mu) for b in br))
    return [
        RepTerm(
            coef=coef,
            factors=tuple(facs),
            log_zs=lbs[-1],
            log_ze=tuple(lbs[i] - lbs[-1] for i in range(m)),
        )
    ]


def first_hop_rep(cfg):
    """Mellin-Barnes terms for E[W^-s]; see :class:`RepTerm`.

    Each term holds on Re(s) < alpha mu / 2 of its own gamma factor; the MRC
    term additionally needs 0 < Re(e_i) < Re(s) for its auxiliary variables.
    """
    if cfg.scheme == Scheme.SC:
        if cfg.n_antennas == 1:
            return _alpha_mu_rep(cfg.branches[0], cfg.gbar_rf)
        if not (cfg.is_iid and cfg.integer_mu):
            raise NonIntegerMuError("SC closed forms need i.i.d. branches with integer mu")
        return _sc_rep(cfg)
    if cfg.scheme == Scheme.MRC_EXACT:
        if cfg.n_antennas > MAX_VARS:
            raise ValueError("too many antennas for the exact MRC path; use MRC_APPROX")
        return _mrc_rep(cfg)
    if cfg.scheme == Scheme.MRC_APPROX:
        mm = mrc_moment_match(cfg)
        return _alpha_mu_rep(mm.params, cfg.gbar_rf)
    raise ValueError("EGC has no analytic representation")


def _eval_rep_kernel(cfg, gamma, kernel, rtol=None):
    """sum over terms of (1/2 pi i) int E[W^-s] gamma^s kernel(s) ds.

    ``kernel`` is a list of extra GammaFactors in the single variable s.
    """
    total, err = 0.0, 0.0
    for t in first_hop_rep(cfg):
        facs = list(t.factors)
        for f in kernel:
            facs.append(GammaFactor(f.offset, (f.weights[0],) + (0.0,) * t.m, f.side))
        args = (math.exp(t.log_zs) / gamma,) + tuple(math.exp(v) for v in t.log_ze)
        spec = FoxHSpec(factors=facs, args=args)
        r = foxh_eval(spec, rtol=rtol)
        total += t.coef * r.value
        err += abs(t.coef) * r.abs_err_estimate
    return total, err


# beyond this union-bound tail mass the deep-tail contour integrals are pure
# cancellation noise, and the true values are below double resolution
_TAIL_CUT = 1e-16


def _sum_tail_bound(gamma, cfg):
    n = cfg.n_antennas
    return sum(1.0 - float(alpha_mu_cdf(gamma / n, b, cfg.gbar_rf)) for b in cfg.branches)


def mrc_pdf_exact(gamma, cfg, rtol=None):
    """MRC sum density from its Mellin-Barnes form (Fox-H in N variables)."""
    _check_scheme(cfg, Scheme.MRC_EXACT)
    if gamma <= 0 or _sum_tail_bound(gamma, cfg) < _TAIL_CUT:
        return 0.0
    val, _ = _eval_rep_kernel(cfg, gamma, [], rtol=rtol)
    return max(val / gamma, 0.0)


def mrc_cdf_exact(gamma, cfg, rtol=None):
    _check_scheme(cfg, Scheme.MRC_EXACT)
    if gamma <= 0:
        return 0.0
    if _sum_tail_bound(gamma, cfg) < _TAIL_CUT:
        return 1.0
    # gamma^s / s = gamma^s Gamma(s) / Gamma(1 + s)
    kernel = [GammaFactor(0.0, (1.0,), NUM), GammaFactor(1.0, (1.0,), DEN)]
    val, _ = _eval_rep_kernel(cfg, gamma, kernel, rtol=rtol)
    return val


# --- MRC moment matching ---------------------------------------------------


@dataclass(frozen=True)
class MomentMatchedParams:
    params: AlphaMuParams
    gbar: float
    residual: float
    converged: bool
    orders: tuple


def _sum_moment_integer(cfg, k):
    br = cfg.branches
    total = 0.0
    for comp in _weak_compositions(k, len(br)):
        c = math.factorial(k)
        v = 1.0
        for b, ki in zip(br, comp):
            c //= math.factorial(ki)
            if ki:
                v *= alpha_mu_moment(ki, b, cfg.gbar_rf)
        total += c * v
    return total


def _laplace(b, gbar, s, complement=False):
    # E[exp(-s gamma)] (or 1 minus it) for one alpha-mu branch, in x = log G
    # with G ~ Gamma(mu)
    sb = s * math.exp(_beta(b, gbar))
    e = 2.0 / b.alpha
    lgm = special.gammaln(b.mu)
    if complement:
        f = lambda x: -math.expm1(-sb * math.exp(e * x)) * math.exp(b.mu * x - math.exp(x) - lgm)
    else:
        f = lambda x: math.exp(-sb * math.exp(e * x) + b.mu * x - math.exp(x) - lgm)
    # the integrand peaks near the smaller of the two decay scales
    peak = min(math.log(b.mu), (math.log(b.mu / (e * sb))) / e)
    hi = math.log(800.0 + b.mu)
    if not complement:
        hi = min(hi, math.log(800.0 / sb) / e + 1.0)
        if hi <= -800.0 / b.mu:
            return 0.0
    cuts = sorted({max(min(peak + d, hi), -800.0 / b.mu) for d in (-20, -8, -3, 0, 3)} | {-800.0 / b.mu, hi})
    return sum(integrate.quad(f, a, c, limit=100, epsabs=0, epsrel=1e-12)[0] for a, c in zip(cuts, cuts[1:]))


def _sum_moment_fractional(cfg, nu):
    # W^nu = nu / Gamma(1 - nu) int_0^inf (1 - e^{-sW}) s^{-nu-1} ds, 0 < nu < 1
    def integrand(u):
        s = math.exp(u)
        log_prod = 0.0
        for b in cfg.branches:
            m = _laplace(b, cfg.gbar_rf, s, complement=True)
            if m >= 1.0:
                return s ** (-nu)
            log_prod += math.log1p(-m)
        return -math.expm1(log_prod) * s ** (-nu)

    # the integrand only varies over a few decades around s ~ 1 / gbar
    c = -math.log(cfg.gbar_rf)
    cuts = [-60.0] + [c + d for d in (-12, -6, -3, 0, 3, 6, 12)] + [60.0]
    val = sum(integrate.quad(integrand, a, b, limit=200, epsabs=1e-15, epsrel=1e-11)[0] for a, b in zip(cuts, cuts[1:]))
    return nu / math.gamma(1.0 - nu) * val


def mrc_sum_moments(cfg, orders=(1, 2, 3)):
    """Exact moments E[(sum gamma_i)^k] for the given orders."""
    out = []
    for k in orders:
        if float(k).is_integer():
            out.append(_sum_moment_integer(cfg, int(k)))
        else:
            whole = math.floor(k)
            if whole:
                raise ValueError("fractional orders above 1 are not supported")
            out.append(_sum_moment_fractional(cfg, k))
    return np.array(out)


def _alpha_mu_log_ratio(alpha, mu, orders):
    # log(E[g^k] / E[g^k0]^(k/k0)) for a unit-scale alpha-mu law, k over orders[1:]
    k0 = orders[0]
    base = special.gammaln(mu + 2 * k0 / alpha) - special.gammaln(mu)
    return np.array(
        [special.gammaln(mu + 2 * k / alpha) - special.gammaln(mu) - (k / k0) * base for k in orders[1:]]
    )


def mrc_moment_match(cfg, tol=1e-10):
    """Single alpha-mu law matching three moments of the MRC output SNR.

    ``cfg.moment_mode == "snr"`` matches E[W^k], k = 1, 2, 3; ``"envelope"``
    matches E[R^k] with R = sqrt(W), k = 1, 2, 4.
    """
    _check_scheme(cfg, Scheme.MRC_APPROX, Scheme.MRC_EXACT)
    orders = (1, 2, 3) if cfg.moment_mode == "snr" else (0.5, 1, 2)
    if cfg.n_antennas == 1:
        return MomentMatchedParams(cfg.branches[0], cfg.gbar_rf, 0.0, True, orders)
    return _moment_match_cached(cfg.branches, cfg.gbar_rf, orders, tol)


_MM_CACHE: dict = {}


def _moment_match_cached(branches, gbar, orders, tol):
    key = (branches, gbar, orders, tol)
    if key in _MM_CACHE:
        return _MM_CACHE[key]
    cfg = DiversityConfig(Scheme.MRC_APPROX, branches, gbar)
    m = mrc_sum_moments(cfg, orders)
    target = np.log(m[1:]) - (np.array(orders[1:]) / orders[0]) * math.log(m[0])

    def resid(v):
        return _alpha_mu_log_ratio(math.exp(v[0]), math.exp(v[1]), orders) - target

    x0 = np.log([np.mean([b.alpha for b in branches]), len(branches) * np.mean([b.mu for b in branches])])
    sol = optimize.least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    alpha, mu = float(np.exp(sol.x[0])), float(np.exp(sol.x[1]))
    res = float(np.max(np.abs(sol.fun)))
    # scale: E[W^k0] = beta^k0 Gamma(mu + 2k0/alpha)/Gamma(mu), beta = gbar * Omega^2 mu^(-2/alpha)
    k0 = orders[0]
    log_beta = (math.log(m[0]) - special.gammaln(mu + 2 * k0 / alpha) + special.gammaln(mu)) / k0
    omega = math.sqrt(math.exp(log_beta) * mu ** (2.0 / alpha) / gbar)
    out = MomentMatchedParams(AlphaMuParams(alpha, mu, omega), gbar, res, res < tol, orders)
    if not out.converged:
        raise MomentMatchError(f"moment matching did not converge (residual {res:.3g})", best=out)
    _MM_CACHE[key] = out
    return out


def egc_snr(branch_snrs):
    """(sum sqrt(gamma_i))^2 / N along the last axis."""
    g = np.asarray(branch_snrs, dtype=float)
    if np.any(g < 0):
        raise ValueError("branch SNRs must be nonnegative")
    return np.sqrt(g).sum(axis=-1) ** 2 / g.shape[-1]


# --- generic first-hop helpers ---------------------------------------------


@functools.lru_cache(maxsize=256)
def first_hop_mean(cfg):
    """E[W] for the combined first-hop SNR (cached per configuration)."""
    br, gbar = cfg.branches, cfg.gbar_rf
    if cfg.scheme in (Scheme.MRC_EXACT, Scheme.MRC_APPROX):
        return sum(alpha_mu_moment(1, b, gbar) for b in br)
    if cfg.scheme == Scheme.EGC:
        m1 = [alpha_mu_moment(1, b, gbar) for b in br]
        mh = [alpha_mu_moment(0.5, b, gbar) for b in br]
        cross = sum(mh[i] * mh[j] for i in range(len(br)) for j in range(len(br)) if i != j)
        return (sum(m1) + cross) / len(br)
    if len(br) == 1:
        return alpha_mu_moment(1, br[0], gbar)
    # E[max] = int_0^inf (1 - prod F_i) dx, in log coordinates
    def f(u):
        x = gbar * math.exp(u)
        return (1.0 - float(sc_cdf(x, cfg))) * x

    return integrate.quad(f, -40, 12, limit=400, epsabs=0, epsrel=1e-11)[0]


def first_hop_cdf(gamma, cfg):
    if cfg.scheme == Scheme.SC:
        return sc_cdf(gamma, cfg)
    if cfg.scheme == Scheme.MRC_APPROX:
        return alpha_mu_cdf(gamma, mrc_moment_match(cfg).params, cfg.gbar_rf)
    if cfg.scheme == Scheme.MRC_EXACT:
        if cfg.n_antennas == 1:
            return alpha_mu_cdf(gamma, cfg.branches[0], cfg.gbar_rf)
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        out = np.array([mrc_cdf_exact(x, cfg) for x in g])
        return out[0] if np.ndim(gamma) == 0 else out
    raise ValueError("EGC statistics are Monte-Carlo only")


def first_hop_pdf(gamma, cfg):
    if cfg.scheme == Scheme.SC:
        return sc_pdf(gamma, cfg)
    if cfg.scheme == Scheme.MRC_APPROX:
        return alpha_mu_pdf(gamma, mrc_moment_match(cfg).params, cfg.gbar_rf)
    if cfg.scheme == Scheme.MRC_EXACT:
        if cfg.n_antennas == 1:
            return alpha_mu_pdf(gamma, cfg.branches[0], cfg.gbar_rf)
        g = np.atleast_1d(np.asarray(gamma, dtype=float))
        out = np.array([mrc_pdf_exact(x, cfg) for x in g])
        return out[0] if np.ndim(gamma) == 0 else out
    raise ValueError("EGC statistics are Monte-Carlo only")


def first_hop_small_gamma(cfg):
    """(a_W, d_W) with F_W(gamma) ~ a_W (gamma / gbar)^d_W as gamma -> 0.

    All branches share gbar_rf; MRC uses the exact sum law (not the matched fit).
    """
    br = cfg.branches
    a = [b.B**b.mu / math.gamma(b.mu + 1.0) for b in br]
    d = [b.alpha * b.mu / 2.0 for b in br]
    if cfg.scheme == Scheme.SC:
        return float(np.prod(a)), float(sum(d))
    if cfg.scheme in (Scheme.MRC_EXACT, Scheme.MRC_APPROX):
        num = sum(math.log(ai) + special.gammaln(di + 1.0) for ai, di in zip(a, d))
        D = sum(d)
        return math.exp(num - special.gammaln(D + 1.0)), float(D)
    raise ValueError("EGC has no analytic small-SNR law")

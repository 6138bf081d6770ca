"""End-to-end statistics of the fixed-gain AF RF-THz link.

The end-to-end SNR is R = W V / (V + C), with W the combined first-hop SNR, V
the THz SNR (alpha-mu fading with pointing errors) and C the relay constant.

Closed forms are evaluated as Mellin-Barnes (Fox-H) integrals.  Writing
y = C / V, the outage probability is F_R(gamma) = E[F_W(gamma (1 + y))].  With

    (1 + y)^s = 1 + (1/2 pi i) int Gamma(t) Gamma(-s - t) / Gamma(-s) y^-t dt,
    -1 < Re t < -Re s,

the constant term reproduces F_W(gamma) and the remaining double integral
only involves E[W^-s], E[V^t] and elementary gamma factors, so all metrics
become a first-hop functional plus one Fox-H term per first-hop Mellin term.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from .channel import (
    AlphaMuParams,
    DegenerateParameterError,
    LinkBudget,
    PointingModel,
    alpha_mu_moment,
    average_snrs,
    thz_cdf,
    thz_pdf,
)
from .diversity import (
    DiversityConfig,
    Scheme,
    first_hop_cdf,
    first_hop_mean,
    first_hop_pdf,
    first_hop_rep,
    first_hop_small_gamma,
    _laplace,
)
from .specfun import DEN, NUM, FoxHError, FoxHSpec, GammaFactor, foxh_eval

log = logging.getLogger(__name__)

__all__ = [
    "Method",
    "RelayConfig",
    "SystemModel",
    "MetricResult",
    "BerModulation",
    "fixed_gain_constant",
    "e2e_cdf",
    "e2e_pdf",
    "outage",
    "outage_asymptotic",
    "diversity_order",
    "avg_ber",
    "ergodic_capacity",
    "build_outage_specs",
]


class Method(str, enum.Enum):
    EXACT = "exact"
    APPROX = "approx"
    ASYMPTOTIC = "asymptotic"
    MONTECARLO = "montecarlo"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class RelayConfig:
    mode: str = "auto"
    c_const: float | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "manual"):
            raise ValueError("relay mode must be 'auto' or 'manual'")
        if self.mode == "manual" and not (self.c_const and self.c_const > 0):
            raise ValueError("manual relay mode needs a positive c_const")


@dataclass(frozen=True)
class SystemModel:
    rf: DiversityConfig
    thz: AlphaMuParams
    pointing: PointingModel
    gbar_thz: float
    relay: RelayConfig = field(default_factory=RelayConfig)
    budget: LinkBudget | None = None

    def __post_init__(self):
        if not self.gbar_thz > 0:
            raise ValueError("gbar_thz must be positive")

    @classmethod
    def from_budget(cls, rf_scheme, branches, thz, pointing, budget, relay=None, moment_mode="snr"):
        g_rf, g_thz = average_snrs(budget)
        rf = DiversityConfig(rf_scheme, tuple(branches), g_rf, moment_mode)
        return cls(rf, thz, pointing, g_thz, relay or RelayConfig(), budget)

    def with_snrs(self, gbar_rf=None, gbar_thz=None):
        rf = self.rf if gbar_rf is None else self.rf.with_gbar(gbar_rf)
        return replace(self, rf=rf, gbar_thz=self.gbar_thz if gbar_thz is None else gbar_thz)

    @property
    def c(self):
        return fixed_gain_constant(self.rf, self.relay)


@dataclass(frozen=True)
class MetricResult:
    value: float
    method: Method
    err: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))


@dataclass(frozen=True)
class BerModulation:
    p: float = 0.5
    q: float = 1.0

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive")


def fixed_gain_constant(rf, relay=None):
    """C = 1 + E[W] in auto mode (semi-blind fixed gain)."""
    if relay is not None and relay.mode == "manual":
        return float(relay.c_const)
    return 1.0 + first_hop_mean(rf)


# --- Fox-H spec construction ------------------------------------------------


def _thz_t_factors(sys):
    """log z_t contribution, coefficient and factors of E[V^t] in variable t."""
    p, pe = sys.thz, sys.pointing
    if abs(p.alpha * p.mu - pe.phi) < 1e-9:
        raise DegenerateParameterError("phi coincides with alpha*mu; perturb phi by about 1e-6 relative")
    log_beta = math.log(sys.gbar_thz) + 2.0 * math.log(pe.S0) - (2.0 / p.alpha) * math.log(p.B)
    coef = pe.phi / (2.0 * math.gamma(p.mu))
    facs = [
        (p.mu, 2.0 / p.alpha, NUM),
        (pe.phi / 2.0, 1.0, NUM),
        (pe.phi / 2.0 + 1.0, 1.0, DEN),
    ]
    return log_beta, coef, facs


def _lift(weights_s, m, w_t):
    return (weights_s,) + (0.0,) * m + (w_t,)


def _second_hop_specs(sys, kind, gamma=None, mod=None):
    """(coefficient, FoxHSpec) pairs whose weighted sum is the THz-coupled term.

    Variables are ordered (s, first-hop auxiliaries..., t) for the outage,
    pdf and BER kernels, and (u, auxiliaries..., t) for capacity.
    """
    C = fixed_gain_constant(sys.rf, sys.relay)
    log_bt, coef_t, thz_facs = _thz_t_factors(sys)
    out = []
    for term in first_hop_rep(sys.rf):
        m = term.m
        facs = []
        s_sign = -1.0 if kind == "capacity" else 1.0
        for f in term.factors:
            w = list(f.weights)
            w[0] *= s_sign
            facs.append(GammaFactor(f.offset, tuple(w) + (0.0,), f.side))
        for off, w, side in thz_facs:
            facs.append(GammaFactor(off, _lift(0.0, m, w), side))
        coef = term.coef * coef_t
        log_zt = math.log(C) - log_bt
        if kind == "capacity":
            # ln(1+R) kernel Gamma(u)Gamma(1-u)/Gamma(1+u) R^u and the
            # (1 + C/V)^-u split Gamma(t) Gamma(u - t) / Gamma(u)
            facs += [
                GammaFactor(0.0, _lift(1.0, m, 0.0), NUM),
                GammaFactor(1.0, _lift(-1.0, m, 0.0), NUM),
                GammaFactor(1.0, _lift(1.0, m, 0.0), DEN),
                GammaFactor(0.0, _lift(0.0, m, 1.0), NUM),
                GammaFactor(0.0, _lift(1.0, m, -1.0), NUM),
            ]
            log_zs = -term.log_zs
        else:
            # Gamma(t) on -1 < Re t < 0 written as -Gamma(1+t)Gamma(-t)/Gamma(1-t)
            facs += [
                GammaFactor(1.0, _lift(0.0, m, 1.0), NUM),
                GammaFactor(0.0, _lift(0.0, m, -1.0), NUM),
                GammaFactor(1.0, _lift(0.0, m, -1.0), DEN),
                GammaFactor(0.0, _lift(-1.0, m, -1.0), NUM),
                GammaFactor(0.0, _lift(-1.0, m, 0.0), DEN),
            ]
            coef = -coef
            if kind == "cdf":
                facs += [GammaFactor(0.0, _lift(1.0, m, 0.0), NUM), GammaFactor(1.0, _lift(1.0, m, 0.0), DEN)]
                log_zs = term.log_zs - math.log(gamma)
            elif kind == "pdf":
                log_zs = term.log_zs - math.log(gamma)
                coef /= gamma
            elif kind == "ber":
                facs += [
                    GammaFactor(mod.p, _lift(1.0, m, 0.0), NUM),
                    GammaFactor(0.0, _lift(1.0, m, 0.0), NUM),
                    GammaFactor(1.0, _lift(1.0, m, 0.0), DEN),
                ]
                log_zs = term.log_zs + math.log(mod.q)
                coef /= 2.0 * math.gamma(mod.p)
            else:
                raise ValueError(kind)
        args = (math.exp(log_zs),) + tuple(math.exp(v) for v in term.log_ze) + (math.exp(log_zt),)
        out.append((coef, FoxHSpec(factors=facs, args=args)))
    return out


def build_outage_specs(gamma, sys):
    """Fox-H specs of the THz-coupled outage term (for inspection and tests)."""
    return _second_hop_specs(sys, "cdf", gamma=gamma)


def _first_hop_specs(cfg, mod):
    # E[Gamma(p, qW)] / (2 Gamma(p)) via the same kernel without the THz part
    out = []
    for term in first_hop_rep(cfg):
        m = term.m
        facs = list(term.factors)
        pad = (0.0,) * m
        facs += [
            GammaFactor(mod.p, (1.0,) + pad, NUM),
            GammaFactor(0.0, (1.0,) + pad, NUM),
            GammaFactor(1.0, (1.0,) + pad, DEN),
        ]
        args = (math.exp(term.log_zs + math.log(mod.q)),) + tuple(math.exp(v) for v in term.log_ze)
        out.append((term.coef / (2.0 * math.gamma(mod.p)), FoxHSpec(factors=facs, args=args)))
    return out


def _sum_specs(pairs):
    val, err = 0.0, 0.0
    for coef, spec in pairs:
        r = foxh_eval(spec)
        val += coef * r.value
        err += abs(coef) * r.abs_err_estimate
    return val, err


def _analytic_method(sys):
    if sys.rf.scheme == Scheme.EGC:
        return None
    if sys.rf.scheme == Scheme.SC and sys.rf.n_antennas > 1 and not (sys.rf.is_iid and sys.rf.integer_mu):
        return None
    return Method.APPROX if sys.rf.scheme == Scheme.MRC_APPROX else Method.EXACT


def _require_analytic_hop(sys):
    if sys.rf.scheme == Scheme.EGC and sys.rf.n_antennas > 1:
        raise ValueError("EGC end-to-end statistics are available by Monte-Carlo only")


# --- quadrature forms --------------------------------------------------------


def _hop_pdf(x, sys):
    return first_hop_pdf(x, sys.rf)


def _cdf_quad(gamma, sys, tol=1e-8):
    """F_W(g) + int_g^inf F_T(C g / (x - g)) f_W(x) dx, with x = g (1 + e^u)."""
    C = fixed_gain_constant(sys.rf, sys.relay)

    def f(u):
        x = gamma * (1.0 + math.exp(u))
        return float(thz_cdf(C * math.exp(-u), sys.thz, sys.pointing, sys.gbar_thz)) * float(
            _hop_pdf(x, sys)
        ) * gamma * math.exp(u)

    lo, hi = _u_range(gamma, sys)
    val, err = integrate.quad(f, lo, hi, limit=400, epsabs=0.0, epsrel=tol)
    return float(first_hop_cdf(gamma, sys.rf)) + val, err


def _pdf_quad(gamma, sys, tol=1e-8):
    C = fixed_gain_constant(sys.rf, sys.relay)

    def f(u):
        eu = math.exp(u)
        x = gamma * (1.0 + eu)
        return float(thz_pdf(C / eu, sys.thz, sys.pointing, sys.gbar_thz)) * C * (1.0 + eu) / eu * float(
            _hop_pdf(x, sys)
        )

    lo, hi = _u_range(gamma, sys)
    return integrate.quad(f, lo, hi, limit=400, epsabs=0.0, epsrel=tol)


def _u_range(gamma, sys):
    # the first-hop density is negligible beyond ~1e6 mean SNRs
    m = first_hop_mean(sys.rf)
    hi = math.log(max(1e6 * m / gamma, 10.0))
    return -60.0, hi


_GL16 = np.polynomial.legendre.leggauss(16)


def _cdf_quad_vec(gammas, sys, panel=0.5):
    """Vectorised F_R on an array of thresholds (fixed composite Gauss-Legendre in u)."""
    g = np.asarray(gammas, dtype=float)
    C = fixed_gain_constant(sys.rf, sys.relay)
    m = first_hop_mean(sys.rf)
    hi = math.log(max(1e6 * m / g.min(), 10.0))
    edges = np.arange(-40.0, hi + panel, panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    u = (mid[:, None] + half[:, None] * _GL16[0]).ravel()
    wu = (half[:, None] * _GL16[1]).ravel()
    eu = np.exp(u)
    ft = thz_cdf(C / eu, sys.thz, sys.pointing, sys.gbar_thz)
    x = g[:, None] * (1.0 + eu[None, :])
    fw = np.asarray(first_hop_pdf(x.ravel(), sys.rf)).reshape(x.shape)
    inner = (fw * (g[:, None] * eu[None, :]) * (ft * wu)[None, :]).sum(1)
    return np.asarray(first_hop_cdf(g, sys.rf)) + inner


def _ber_quad(sys, mod):
    """q^p / (2 Gamma(p)) int g^(p-1) e^(-q g) F_R(g) dg, in log coordinates."""
    p, q = mod.p, mod.q

    def f(v):
        g = math.exp(v) / q
        F = float(_cdf_quad_vec(np.array([g]), sys)[0])
        return math.exp(p * math.log(q * g) - q * g - special.gammaln(p)) * F

    val, err = integrate.quad(f, -60, math.log(60.0 + 2 * p), limit=300, epsabs=0, epsrel=1e-7)
    return 0.5 * val, 0.5 * err


def _capacity_quad(sys):
    # E[ln(1+R)] = int_0^inf (1 - F_R(g)) / (1 + g) dg
    def f(v):
        g = math.exp(v)
        return (1.0 - float(_cdf_quad_vec(np.array([g]), sys)[0])) * g / (1.0 + g)

    hi = math.log(first_hop_mean(sys.rf) * 1e6 + 10.0)
    val, err = integrate.quad(f, -40, hi, limit=400, epsabs=0, epsrel=1e-7)
    return val / math.log(2.0), err / math.log(2.0)


def _capacity_laplace(sys, n_nodes=160):
    """E[log2(1+R)] from first-hop Laplace transforms (any first-hop scheme).

    Conditioned on V, R = k W with k = V/(V + C), and
    E[ln(1 + k W)] = int_0^inf (1 - L_W(k s)) e^{-s} / s ds.
    """
    C = fixed_gain_constant(sys.rf, sys.relay)
    br, gbar = sys.rf.branches, sys.rf.gbar_rf

    def laplace_w(s):
        if sys.rf.scheme == Scheme.MRC_EXACT:
            out = 1.0
            for b in br:
                out *= _laplace(b, gbar, s)
            return out
        raise ValueError("Laplace capacity path is only used for exact MRC")

    def inner(k):
        f = lambda v: -math.expm1(math.log(laplace_w(k * math.exp(v)))) * math.exp(-math.exp(v))
        return integrate.quad(f, -40, math.log(60.0), limit=200, epsrel=1e-8)[0]

    def outer(v):
        x = math.exp(v)
        val = float(thz_pdf(x, sys.thz, sys.pointing, sys.gbar_thz)) * x
        return val * inner(x / (x + C)) if val > 0 else 0.0

    lo = math.log(sys.gbar_thz) - 60.0
    hi = math.log(sys.gbar_thz) + 8.0
    val, err = integrate.quad(outer, lo, hi, limit=200, epsrel=1e-7)
    return val / math.log(2.0), err / math.log(2.0)


# --- public metrics ----------------------------------------------------------


def _tagged(value, err, method):
    return MetricResult(float(value), method, float(abs(err)))


def e2e_cdf(gamma, sys, method="auto"):
    """P(R <= gamma) as a :class:`MetricResult`."""
    _require_analytic_hop(sys)
    if gamma <= 0:
        return MetricResult(0.0, Method.EXACT, 0.0)
    am = _analytic_method(sys)
    if method == "quadrature" or am is None:
        v, e = _cdf_quad(gamma, sys)
        return _tagged(v, e, Method.QUADRATURE)
    try:
        jv, je = _sum_specs(_second_hop_specs(sys, "cdf", gamma=gamma))
    except (FoxHError, ValueError) as exc:
        log.warning("Fox-H outage evaluation failed (%s); using quadrature", exc)
        v, e = _cdf_quad(gamma, sys)
        return _tagged(v, e, Method.QUADRATURE)
    fw = float(first_hop_cdf(gamma, sys.rf))
    return _tagged(min(max(fw + jv, 0.0), 1.0), je, am)


def e2e_pdf(gamma, sys, method="auto"):
    _require_analytic_hop(sys)
    if gamma <= 0:
        return MetricResult(0.0, Method.EXACT, 0.0)
    am = _analytic_method(sys)
    if method == "quadrature" or am is None:
        v, e = _pdf_quad(gamma, sys)
        return _tagged(v, e, Method.QUADRATURE)
    try:
        jv, je = _sum_specs(_second_hop_specs(sys, "pdf", gamma=gamma))
    except (FoxHError, ValueError) as exc:
        log.warning("Fox-H density evaluation failed (%s); using quadrature", exc)
        v, e = _pdf_quad(gamma, sys)
        return _tagged(v, e, Method.QUADRATURE)
    return _tagged(float(first_hop_pdf(gamma, sys.rf)) + jv, je, am)


def outage(gamma_th, sys, method="auto"):
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    if method == "asymptotic":
        return outage_asymptotic(gamma_th, sys)
    return e2e_cdf(gamma_th, sys, method="quadrature" if method == "quadrature" else "auto")


def diversity_order(sys):
    rf = sum(b.alpha * b.mu / 2.0 for b in sys.rf.branches)
    return min(rf, sys.thz.alpha * sys.thz.mu / 2.0, sys.pointing.phi / 2.0)


def _thz_small_gamma(sys):
    """(a_T, d_T) with F_T(v) ~ a_T (v / gbar_thz)^d_T as v -> 0."""
    p, pe = sys.thz, sys.pointing
    phi, am = pe.phi, p.alpha * p.mu
    x_scale = p.B * pe.S0 ** (-p.alpha)
    if abs(am - phi) < 1e-9:
        raise DegenerateParameterError("phi coincides with alpha*mu; perturb phi by about 1e-6 relative")
    if phi < am:
        a = x_scale ** (phi / p.alpha) * math.gamma(p.mu - phi / p.alpha) / math.gamma(p.mu)
        return a, phi / 2.0
    a = x_scale**p.mu * phi / (p.mu * (phi - am) * math.gamma(p.mu))
    return a, am / 2.0


def _neg_moment_w(cfg, d):
    """E[W^-d] for 0 < d < d_W."""
    sch = cfg.scheme
    if sch == Scheme.MRC_APPROX:
        from .diversity import mrc_moment_match

        return alpha_mu_moment(-d, mrc_moment_match(cfg).params, cfg.gbar_rf)
    if cfg.n_antennas == 1:
        return alpha_mu_moment(-d, cfg.branches[0], cfg.gbar_rf)
    if sch == Scheme.MRC_EXACT:
        # W^-d = 1/Gamma(d) int tau^(d-1) e^(-tau W) d tau
        def f(v):
            tau = math.exp(v)
            prod = 1.0
            for b in cfg.branches:
                prod *= _laplace(b, cfg.gbar_rf, tau)
            return tau**d * prod

        mid = -math.log(cfg.gbar_rf)
        return integrate.quad(f, mid - 40, mid + 40, limit=400, epsrel=1e-10)[0] / math.gamma(d)

    def g(v):
        x = cfg.gbar_rf * math.exp(v)
        return x ** (1.0 - d) * float(first_hop_pdf(x, cfg))

    return integrate.quad(g, -60, 12, limit=400, epsrel=1e-10)[0]


def _mean_one_plus_ratio_pow(sys, C, d):
    """E[(1 + C/V)^d] over the THz SNR V."""
    def f(v):
        x = sys.gbar_thz * math.exp(v)
        return (1.0 + C / x) ** d * float(thz_pdf(x, sys.thz, sys.pointing, sys.gbar_thz)) * x

    return integrate.quad(f, -80, 10, limit=400, epsrel=1e-10)[0]


def outage_asymptotic(gamma_th, sys):
    """Leading high-SNR term of the outage probability.

    Requires gbar_rf == gbar_thz.  In auto relay mode the constant is taken
    as its high-SNR limit C = E[W].
    """
    _require_analytic_hop(sys)
    gbar = sys.rf.gbar_rf
    if not math.isclose(gbar, sys.gbar_thz, rel_tol=1e-12):
        raise ValueError("asymptotic outage assumes gbar_rf == gbar_thz")
    a_w, d_w = first_hop_small_gamma(sys.rf)
    a_t, d_t = _thz_small_gamma(sys)
    if abs(d_w - d_t) < 1e-9:
        raise DegenerateParameterError(
            "first-hop and THz exponents coincide; perturb phi or mu by about 1e-6 relative"
        )
    C = sys.relay.c_const if sys.relay.mode == "manual" else first_hop_mean(sys.rf)
    r = gamma_th / gbar
    if d_w < d_t:
        val = a_w * r**d_w * _mean_one_plus_ratio_pow(sys, C, d_w)
    else:
        val = a_t * r**d_t * C**d_t * _neg_moment_w(sys.rf, d_t)
    return MetricResult(val, Method.ASYMPTOTIC, 0.0)


def avg_ber(sys, mod=None, method="auto"):
    mod = mod or BerModulation()
    _require_analytic_hop(sys)
    am = _analytic_method(sys)
    if method == "quadrature" or am is None:
        v, e = _ber_quad(sys, mod)
        return _tagged(v, e, Method.QUADRATURE)
    try:
        v1, e1 = _sum_specs(_first_hop_specs(sys.rf, mod))
        v2, e2 = _sum_specs(_second_hop_specs(sys, "ber", mod=mod))
    except (FoxHError, ValueError) as exc:
        log.warning("Fox-H BER evaluation failed (%s); using quadrature", exc)
        v, e = _ber_quad(sys, mod)
        return _tagged(v, e, Method.QUADRATURE)
    return _tagged(v1 + v2, e1 + e2, am)


def ergodic_capacity(sys, method="auto"):
    """E[log2(1 + R)] in bits/s/Hz."""
    _require_analytic_hop(sys)
    am = _analytic_method(sys)
    if sys.rf.scheme == Scheme.MRC_EXACT and sys.rf.n_antennas > 1 and method != "quadrature":
        # positive moments of the exact sum have no term-wise Mellin form here
        v, e = _capacity_laplace(sys)
        return _tagged(v, e, Method.QUADRATURE)
    if method == "quadrature" or am is None:
        v, e = _capacity_quad(sys)
        return _tagged(v, e, Method.QUADRATURE)
    try:
        v, e = _sum_specs(_second_hop_specs(sys, "capacity"))
    except (FoxHError, ValueError) as exc:
        log.warning("Fox-H capacity evaluation failed (%s); using quadrature", exc)
        v, e = _capacity_quad(sys)
        return _tagged(v, e, Method.QUADRATURE)
    return _tagged(v / math.log(2.0), e / math.log(2.0), am)

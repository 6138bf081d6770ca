"""Complex gamma helpers and a multivariate Fox H-function evaluator.

The H-function is handled in its Mellin-Barnes form

    H = (1 / 2 pi i)^n  int ... int  prod_num Gamma(a + w.s) / prod_den Gamma(a + w.s)
                                     * prod_j z_j^(-s_j)  ds_1 ... ds_n

with every integration variable running along a vertical line Re s_j = c_j.
With this convention ``H^{1,0}_{0,1}[z | -; (0,1)]`` is the single factor
Gamma(s) and evaluates to exp(-z).  Factors of the form Gamma(b - B s) are
written with a negative weight.

The integrand is assembled in log-space and integrated with composite
Gauss-Legendre panels on each axis: geometrically growing panels around the
peak, uniform panels across the oscillatory band where the integrand is still
significant, and a few wide panels out to the truncation point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

__all__ = [
    "FoxHError",
    "GammaPoleError",
    "ContourError",
    "NonConvergenceError",
    "GammaFactor",
    "FoxHSpec",
    "EvalResult",
    "complex_log_gamma",
    "incomplete_gamma",
    "upper_gamma",
    "select_contours",
    "foxh_eval",
    "MAX_VARS",
]

MAX_VARS = 4
NUM = "num"
DEN = "den"

_POLE_TOL = 1e-14
_CONTOUR_POLE_MARGIN = 1e-6
_PANEL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_PANEL_ORDER)

_MAX_PANEL_WIDTH = 2.0
# refinement stops once the tensor grid would exceed this many points
_MAX_GRID = 3e7


class FoxHError(Exception):
    """Base class for special-function evaluation failures."""


class GammaPoleError(FoxHError, ValueError):
    pass


class ContourError(FoxHError, ValueError):
    pass


class NonConvergenceError(FoxHError, RuntimeError):
    def __init__(self, msg, last_delta=None):
        super().__init__(msg)
        self.last_delta = last_delta


def complex_log_gamma(z):
    """Principal-branch log Gamma(z) for complex ``z``.

    Raises GammaPoleError within 1e-14 of a non-positive integer.
    """
    z = complex(z)
    if z.real <= 0.5 and abs(z.imag) < _POLE_TOL:
        k = round(z.real)
        if k <= 0 and abs(z.real - k) < _POLE_TOL:
            raise GammaPoleError(f"log-gamma pole at z={z}")
    return complex(special.loggamma(z))


def _upper_gamma_cf(a, x):
    # modified Lentz continued fraction, valid for any real a once x >= 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 2000):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 3e-16):
            break
    return np.exp(-x + a * np.log(x)) * h


def upper_gamma(a, x):
    """Vectorised upper incomplete gamma Gamma(a, x) for real ``a`` (any sign).

    For ``a <= 0`` the argument must be strictly positive.
    """
    x = np.asarray(x, dtype=float)
    a = float(a)
    if a > 0:
        return special.gammaincc(a, x) * special.gamma(a)
    if np.any(x <= 0):
        raise ValueError("upper incomplete gamma with a <= 0 needs x > 0")
    out = np.zeros_like(x)
    # beyond ~800 the result underflows: Gamma(a, x) ~ x^(a-1) e^-x
    big = (x >= 1.0) & (x < 800.0)
    if np.any(big):
        out[big] = _upper_gamma_cf(a, x[big])
    small = ~big
    if np.any(small):
        xs = x[small]
        n = math.ceil(-a)
        a0 = a + n
        if a0 == 0.0:
            val = special.exp1(xs)
        else:
            val = special.gammaincc(a0, xs) * special.gamma(a0)
        # downward recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x) / s
        s = a0
        for _ in range(n):
            s -= 1.0
            val = (val - np.exp(s * np.log(xs) - xs)) / s
        out[small] = val
    return out


def _expint_cf(nu, x):
    # E_nu(x) = int_1^inf t^-nu e^(-x t) dt by modified Lentz; fast once nu + x is large
    tiny = 1e-300
    b = x + nu
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 5000):
        an = -i * (nu - 1.0 + i)
        b = b + 2.0
        d = 1.0 / np.where(np.abs(an * d + b) < tiny, tiny, an * d + b)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 3e-16):
            break
    return h * np.exp(-x)


def scaled_upper_gamma(a, x):
    """x^(-a) Gamma(a, x), which equals the exponential integral E_(1-a)(x).

    Stays finite for very negative ``a`` where Gamma(a, x) itself overflows.
    """
    x = np.asarray(x, dtype=float)
    a = float(a)
    if np.any(x <= 0):
        raise ValueError("scaled upper gamma needs x > 0")
    if a > -10.0:
        with np.errstate(over="ignore"):
            return np.exp(-a * np.log(x)) * upper_gamma(a, x)
    return _expint_cf(1.0 - a, x)


def incomplete_gamma(kind, a, x):
    """Upper (``kind="upper"``) or lower (``kind="lower"``) incomplete gamma."""
    if kind == "lower":
        if a <= 0 or np.any(np.asarray(x) < 0):
            raise ValueError("lower incomplete gamma needs a > 0 and x >= 0")
        res = special.gammainc(a, x) * special.gamma(a)
    elif kind == "upper":
        if a <= 0 and np.any(np.asarray(x) <= 0):
            raise ValueError("upper incomplete gamma with a <= 0 needs x > 0")
        if np.any(np.asarray(x) < 0):
            raise ValueError("upper incomplete gamma needs x >= 0")
        res = upper_gamma(a, x)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return float(res) if np.ndim(res) == 0 else res


@dataclass(frozen=True)
class GammaFactor:
    """One factor Gamma(offset + sum_j weights[j] * s_j) of the integrand."""

    offset: float
    weights: tuple
    side: str = NUM

    def __post_init__(self):
        if self.side not in (NUM, DEN):
            raise ValueError(f"side must be {NUM!r} or {DEN!r}")
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass
class FoxHSpec:
    """Mellin-Barnes integrand description.

    ``value = sign * exp(log_scale) * H`` where H is the normalised contour
    integral described in the module docstring.
    """

    factors: tuple
    args: tuple
    contour_anchors: tuple | None = None
    truncation: float = 40.0
    nodes_per_axis: int | None = None
    log_scale: float = 0.0
    sign: float = 1.0

    def __post_init__(self):
        self.factors = tuple(self.factors)
        self.args = tuple(float(z) for z in self.args)
        n = len(self.args)
        if n < 1:
            raise ValueError("at least one integration variable is required")
        for z in self.args:
            if not (math.isfinite(z) and z > 0):
                raise ValueError(f"Fox-H arguments must be finite and positive, got {z}")
        for f in self.factors:
            if len(f.weights) != n:
                raise ValueError("factor weight length does not match number of variables")
        for j in range(n):
            if not any(f.side == NUM and f.weights[j] != 0 for f in self.factors):
                raise ValueError(f"variable {j} has no numerator factor (degenerate)")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        if self.contour_anchors is not None:
            self.contour_anchors = tuple(float(c) for c in self.contour_anchors)
            if len(self.contour_anchors) != n:
                raise ValueError("one contour anchor per variable is required")
            if _min_num_margin(self, np.asarray(self.contour_anchors)) < _CONTOUR_POLE_MARGIN:
                raise ContourError("contour anchors do not separate the pole families")

    @property
    def num_vars(self):
        return len(self.args)

    def arrays(self):
        w = np.array([f.weights for f in self.factors], dtype=float)
        a = np.array([f.offset for f in self.factors], dtype=float)
        sgn = np.array([1.0 if f.side == NUM else -1.0 for f in self.factors])
        logz = np.log(np.array(self.args))
        return a, w, sgn, logz

    def to_dict(self):
        return {
            "num_vars": self.num_vars,
            "factors": [
                {"offset": f.offset, "weights": list(f.weights), "side": f.side}
                for f in self.factors
            ],
            "args": list(self.args),
            "contour_anchors": None if self.contour_anchors is None else list(self.contour_anchors),
            "truncation": self.truncation,
            "nodes_per_axis": self.nodes_per_axis,
            "log_scale": self.log_scale,
            "sign": self.sign,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        factors = [GammaFactor(f["offset"], tuple(f["weights"]), f["side"]) for f in d["factors"]]
        anchors = d.get("contour_anchors")
        return cls(
            factors=factors,
            args=tuple(d["args"]),
            contour_anchors=None if anchors is None else tuple(anchors),
            truncation=d.get("truncation", 40.0),
            nodes_per_axis=d.get("nodes_per_axis"),
            log_scale=d.get("log_scale", 0.0),
            sign=d.get("sign", 1.0),
        )

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class EvalResult:
    value: float
    abs_err_estimate: float
    nodes_used: int
    truncation_used: float
    anchors: tuple = field(default=())


def _min_num_margin(spec, c):
    a, w, sgn, _ = spec.arrays()
    num = sgn > 0
    if not np.any(num):
        return np.inf
    return float(np.min(a[num] + w[num] @ c))


def select_contours(spec):
    """Midpoint anchors separating left and right pole families.

    Works variable by variable (Gauss-Seidel sweeps): for variable j the
    numerator factors with positive weight give a lower bound, those with
    negative weight an upper bound, other variables held at their current
    anchors.  A missing bound is replaced by the other bound +/- 1.
    """
    a, w, sgn, _ = spec.arrays()
    num = sgn > 0
    an, wn = a[num], w[num]
    n = spec.num_vars
    c = np.zeros(n)
    for _ in range(200):
        old = c.copy()
        for j in range(n):
            col = wn[:, j]
            nz = col != 0
            rest = an[nz] + wn[nz] @ c - col[nz] * c[j]
            bound = -rest / col[nz]
            pos = col[nz] > 0
            lo = bound[pos].max() if np.any(pos) else -np.inf
            hi = bound[~pos].min() if np.any(~pos) else np.inf
            if not np.isfinite(hi):
                c[j] = lo + 0.5
            elif not np.isfinite(lo):
                c[j] = hi - 0.5
            else:
                c[j] = 0.5 * (lo + hi)
        if np.max(np.abs(c - old)) < 1e-13:
            break
    if _min_num_margin(spec, c) > _CONTOUR_POLE_MARGIN:
        return tuple(float(x) for x in c)
    return tuple(float(x) for x in _chebyshev_anchor(an, wn, n))


def _chebyshev_anchor(an, wn, n):
    # maximise the smallest numerator argument: max d s.t. a + W c >= d, d <= 1
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-wn, np.ones((len(an), 1))])
    res = optimize.linprog(
        cost,
        A_ub=a_ub,
        b_ub=an,
        bounds=[(-1e3, 1e3)] * n + [(None, 1.0)],
        method="highs",
    )
    if not res.success or res.x[-1] <= _CONTOUR_POLE_MARGIN:
        raise ContourError("no anchors separate the pole families")
    return res.x[:n]


def _real_log_magnitude(c, a, w, sgn, logz):
    x = a + w @ c
    num = sgn > 0
    val = special.gammaln(x[num]).sum()
    # denominator factors only enter through their growth; near-pole zeros of
    # 1/Gamma would otherwise attract the optimiser to misleading points
    val -= special.gammaln(np.maximum(x[~num], 1.0)).sum()
    return val - c @ logz


def _real_log_magnitude_grad(c, a, w, sgn, logz):
    x = a + w @ c
    num = sgn > 0
    g = w[num].T @ special.digamma(x[num])
    xd = x[~num]
    dd = np.where(xd > 1.0, special.digamma(np.maximum(xd, 1.0)), 0.0)
    g -= w[~num].T @ dd
    return g - logz


def _saddle_anchors(spec, c0):
    """Shift anchors toward the minimum of the real-axis integrand magnitude.

    The integral is contour independent; placing the line near the saddle
    keeps the integrand comparable to the result and avoids cancellation.
    """
    a, w, sgn, logz = spec.arrays()
    num = sgn > 0
    margin0 = _min_num_margin(spec, c0)
    margin = min(0.1, 0.5 * margin0)
    cons = {
        "type": "ineq",
        "fun": lambda c: a[num] + w[num] @ c - margin,
        "jac": lambda c: w[num],
    }
    box = [(x - 60.0, x + 60.0) for x in c0]
    res = optimize.minimize(
        _real_log_magnitude,
        c0,
        args=(a, w, sgn, logz),
        jac=_real_log_magnitude_grad,
        method="SLSQP",
        constraints=[cons],
        bounds=box,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    c = res.x
    if (not np.all(np.isfinite(c))) or _min_num_margin(spec, c) < 0.5 * margin:
        return np.asarray(c0)
    if _real_log_magnitude(c, a, w, sgn, logz) > _real_log_magnitude(np.asarray(c0), a, w, sgn, logz):
        return np.asarray(c0)
    return c


def _axis_scales(c, a, w, sgn):
    x = a + w @ c
    curv = (sgn[:, None] * w**2 * special.polygamma(1, np.where(sgn > 0, x, np.maximum(x, 1.0)))[:, None]).sum(0)
    sigma = 1.0 / np.sqrt(np.maximum(curv, 1e-4))
    num = sgn > 0
    scales = []
    for j in range(w.shape[1]):
        col = np.abs(w[num, j])
        nz = col > 0
        dist = np.min(x[num][nz] / col[nz])
        scales.append(max(min(sigma[j], dist, 5.0), 1e-3))
    return np.array(scales)


def _log_integrand_line(c, y, a, w, sgn, logz, log_ref):
    # y: (m, n) points on the shifted contour
    s = c[None, :] + 1j * y
    args = a[None, :] + s @ w.T
    return (special.loggamma(args) * sgn[None, :]).sum(1) - s @ logz - log_ref


def _effective_width(c, a, w, sgn, logz, log_ref, j, scale, trunc, thr):
    """Half-width along axis j beyond which the integrand stays below ``thr``."""
    y = scale * 1.25 ** np.arange(0, 400)
    y = y[y <= trunc]
    probe = np.zeros((2 * len(y), len(c)))
    probe[: len(y), j] = y
    probe[len(y) :, j] = -y
    mag = np.exp(np.real(_log_integrand_line(c, probe, a, w, sgn, logz, log_ref)))
    big = np.maximum(mag[: len(y)], mag[len(y) :]) > thr
    if not np.any(big):
        return scale
    return min(1.25 * y[np.nonzero(big)[0].max()], trunc)


def _axis_edges(scale, width, trunc, h=_MAX_PANEL_WIDTH):
    # geometric panels around the peak, uniform panels up to ``width``, then
    # doubling panels out to the truncation point
    pos = [0.0]
    step = scale
    while pos[-1] < width:
        pos.append(pos[-1] + step)
        step = min(2.0 * step, h)
    while pos[-1] < trunc:
        step *= 2.0
        pos.append(min(pos[-1] + step, trunc))
    pos = np.array(pos)
    return np.concatenate([-pos[::-1], pos[1:]])


def _panel_nodes(edges, split):
    e = np.interp(np.linspace(0, len(edges) - 1, (len(edges) - 1) * split + 1), np.arange(len(edges)), edges)
    half = 0.5 * (e[1:] - e[:-1])
    mid = 0.5 * (e[1:] + e[:-1])
    y = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    wy = (half[:, None] * _GL_W[None, :]).ravel()
    return y, wy


def _grid_sum(c, a, w, sgn, logz, log_ref, ys, wys, block=1 << 20):
    """Sum of integrand * weights over the tensor grid.

    Factors that involve a single variable are evaluated once per axis; only
    coupled factors are evaluated on the full grid, in blocks of axis-0 rows
    reduced in a fixed order.
    """
    n = len(ys)
    base = a + w @ c
    nnz = (w != 0).sum(1)
    const = complex(-(c @ logz) - log_ref)
    for f in np.nonzero(nnz == 0)[0]:
        const += sgn[f] * special.loggamma(base[f] + 0j)
    axis_log = []
    for j in range(n):
        lv = -1j * ys[j] * logz[j]
        for f in np.nonzero((nnz == 1) & (w[:, j] != 0))[0]:
            lv = lv + sgn[f] * special.loggamma(base[f] + 1j * w[f, j] * ys[j])
        axis_log.append(lv)
    multi = np.nonzero(nnz > 1)[0]
    wm, bm, sm = w[multi], base[multi], sgn[multi]

    if n > 1:
        mesh = np.meshgrid(*ys[1:], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        lmesh = np.meshgrid(*axis_log[1:], indexing="ij")
        log_rest = np.sum(np.stack([m.ravel() for m in lmesh], axis=1), axis=1)
        wmesh = np.meshgrid(*wys[1:], indexing="ij")
        wt_rest = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
        im_rest = pts @ wm[:, 1:].T
    else:
        log_rest = np.zeros(1, dtype=complex)
        wt_rest = np.ones(1)
        im_rest = np.zeros((1, len(multi)))
    m_rest = len(wt_rest)
    rows = max(1, block // max(m_rest * max(len(multi), 1), 1))
    total = 0.0 + 0.0j
    total_abs = 0.0
    for start in range(0, len(ys[0]), rows):
        y0 = ys[0][start : start + rows]
        lv = const + axis_log[0][start : start + rows, None] + log_rest[None, :]
        if len(multi):
            args = bm[None, None, :] + 1j * (im_rest[None, :, :] + y0[:, None, None] * wm[None, None, :, 0])
            lv = lv + (special.loggamma(args) * sm).sum(-1)
        v = np.exp(lv) * (wys[0][start : start + rows, None] * wt_rest[None, :])
        total += v.sum()
        total_abs += np.abs(v).sum()
    return total, total_abs


def foxh_eval(spec, rtol=None, max_vars=MAX_VARS):
    """Numerically evaluate the Mellin-Barnes integral described by ``spec``."""
    n = spec.num_vars
    if n > max_vars:
        raise ValueError(f"{n}-variate H-function exceeds the cap of {max_vars} variables")
    if rtol is None:
        rtol = 1e-8 if n <= 2 else 1e-5
    a, w, sgn, logz = spec.arrays()
    if spec.contour_anchors is not None:
        c = np.asarray(spec.contour_anchors, dtype=float)
    else:
        c = _saddle_anchors(spec, np.asarray(select_contours(spec)))
    if _min_num_margin(spec, c) < _CONTOUR_POLE_MARGIN:
        raise ContourError("anchors within 1e-6 of a numerator pole")

    decay = (np.abs(w) * (sgn[:, None] > 0)).sum(0) - (np.abs(w) * (sgn[:, None] < 0)).sum(0)
    if np.any(decay <= 0):
        raise ContourError("integrand does not decay along every contour")

    zero = np.zeros((1, n))
    log_ref = float(np.real(_log_integrand_line(c, zero, a, w, sgn, logz, 0.0))[0])
    scales = _axis_scales(c, a, w, sgn)
    thr = rtol * 1e-3

    # truncation: double from the configured value until the edge is negligible
    trunc = np.full(n, float(spec.truncation))
    tail_ratio = np.zeros(n)
    for j in range(n):
        for _ in range(6):
            probe = np.zeros((2, n))
            probe[:, j] = [-trunc[j], trunc[j]]
            lv = np.real(_log_integrand_line(c, probe, a, w, sgn, logz, log_ref))
            tail_ratio[j] = float(np.exp(lv.max()))
            if tail_ratio[j] < thr:
                break
            trunc[j] *= 2.0

    edges = [
        _axis_edges(scales[j], _effective_width(c, a, w, sgn, logz, log_ref, j, scales[j], trunc[j], thr), trunc[j])
        for j in range(n)
    ]
    n_panels = np.array([len(e) - 1 for e in edges])
    split = 1
    if spec.nodes_per_axis:
        split = max(1, int(math.ceil(spec.nodes_per_axis / (_PANEL_ORDER * n_panels.min()))))

    def integrate(r):
        ys, wys = [], []
        for e in edges:
            y, wy = _panel_nodes(e, r)
            ys.append(y)
            wys.append(wy)
        tot, tot_abs = _grid_sum(c, a, w, sgn, logz, log_ref, ys, wys)
        norm = (2.0 * math.pi) ** n
        return tot.real / norm, tot_abs / norm

    prev, _ = integrate(split)
    delta = np.inf
    prev_raw = np.inf
    while True:
        split *= 2
        if np.prod((n_panels * split * _PANEL_ORDER).astype(float)) > _MAX_GRID:
            raise NonConvergenceError(
                f"Fox-H refinement stalled at {int(n_panels.max() * split // 2 * _PANEL_ORDER)} nodes/axis "
                f"(last relative delta {delta:.3g})",
                last_delta=delta,
            )
        cur, cur_abs = integrate(split)
        raw_delta = abs(cur - prev)
        floor = 64 * np.finfo(float).eps * cur_abs
        delta = raw_delta / max(abs(cur), 1e-300)
        tol = max(rtol * abs(cur), floor)
        # once refinement contracts geometrically, the newer estimate is
        # better than the last difference by roughly the contraction ratio
        ratio = raw_delta / prev_raw
        predicted = raw_delta * ratio if (math.isfinite(prev_raw) and ratio < 0.5) else raw_delta
        if raw_delta <= tol or predicted <= tol:
            raw_delta = min(raw_delta, max(predicted, floor))
            break
        prev, prev_raw = cur, raw_delta

    scale = math.exp(log_ref + spec.log_scale)
    tail_est = float(tail_ratio.max()) * cur_abs
    err = max(raw_delta, floor, tail_est) * scale
    return EvalResult(
        value=spec.sign * cur * scale,
        abs_err_estimate=float(err),
        nodes_used=int(n_panels.max() * split * _PANEL_ORDER),
        truncation_used=float(trunc.max()),
        anchors=tuple(float(x) for x in c),
    )

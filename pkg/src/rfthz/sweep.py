"""Parameter sweeps, table output and analytic-vs-simulation reports."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from .e2e import avg_ber, ergodic_capacity, outage
from .montecarlo import Metric, SimConfig, estimate_metrics

__all__ = ["Row", "RunManifest", "run_sweep", "compare_report", "to_csv", "to_json", "read_csv", "COLUMNS"]

COLUMNS = ("axis", "axis_value", "scheme", "n_antennas", "metric", "method", "value", "err", "ci_low", "ci_high", "status")
ANALYTIC = ("exact", "approx", "quadrature")
TOOL_VERSION = "0.1.0"


@dataclass
class Row:
    axis: str
    axis_value: float
    scheme: str
    n_antennas: int
    metric: str
    method: str
    value: float = math.nan
    err: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    status: str = "ok"
    ratio: float | None = None
    seconds: float = 0.0
    requested: str = ""


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    master_seed: int
    n_samples: int
    timestamp: str
    methods: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _analytic(metric, method, sys, cfg):
    m = "quadrature" if method == "quadrature" else ("asymptotic" if method == "asymptotic" else "auto")
    if metric == "outage":
        return outage(cfg.gamma_th, sys, method=m)
    if m == "asymptotic":
        raise ValueError("asymptotic form is only available for outage")
    if metric == "ber":
        return avg_ber(sys, cfg.modulation(), method=m)
    return ergodic_capacity(sys, method=m)


def _point(cfg, axis, value, scheme, spec, n_samples, seed, workers):
    """All rows for one (axis value, scheme) pair."""
    pc = cfg.with_axis(axis, value)
    n_ant = int(pc.get("rf", "n_antennas"))
    scheme_eff = "SC" if n_ant == 1 and scheme != "EGC" else scheme
    methods = ("montecarlo",) if scheme == "EGC" and n_ant > 1 else spec.methods
    rows = []
    try:
        sys = pc.system(scheme=scheme_eff)
    except Exception as exc:  # per-point failure, recorded in-row
        return [Row(axis, value, scheme, n_ant, m, meth, status=f"error: {exc}") for m in spec.metrics for meth in methods]

    for method in methods:
        if method == "montecarlo":
            continue
        for metric in spec.metrics:
            if method == "asymptotic" and metric != "outage":
                continue
            row = Row(axis, value, scheme, n_ant, metric, method, requested=method)
            t0 = time.perf_counter()
            try:
                res = _analytic(metric, method, sys, pc)
                row.value, row.err, row.method = res.value, res.err, res.method.value
            except Exception as exc:
                row.status = f"error: {type(exc).__name__}: {exc}"
            row.seconds = time.perf_counter() - t0
            rows.append(row)

    if "montecarlo" in methods:
        ms = []
        for metric in spec.metrics:
            if metric == "outage":
                ms.append(Metric.outage(pc.gamma_th))
            elif metric == "ber":
                mod = pc.modulation()
                ms.append(Metric.ber(mod.p, mod.q))
            else:
                ms.append(Metric.capacity())
        t0 = time.perf_counter()
        try:
            ests = estimate_metrics(ms, SimConfig(sys, n_samples, seed, workers, pc.get("montecarlo", "block_size")))
            dt = (time.perf_counter() - t0) / len(ms)
            for metric, e in zip(spec.metrics, ests):
                rows.append(Row(axis, value, scheme, n_ant, metric, "montecarlo", e.mean, e.ci95_halfwidth,
                                e.ci_low, e.ci_high, seconds=dt, requested="montecarlo"))
        except Exception as exc:
            rows.extend(Row(axis, value, scheme, n_ant, m, "montecarlo", status=f"error: {exc}") for m in spec.metrics)

    # ratio of asymptotic to exact (or approximate) outage at the same point
    by = {(r.metric, r.requested): r for r in rows}
    for r in rows:
        if r.requested == "asymptotic":
            ref = by.get((r.metric, "exact")) or by.get((r.metric, "approx"))
            if ref is not None and r.status == "ok" and ref.status == "ok" and ref.value > 0:
                r.ratio = r.value / ref.value
    order = {m: i for i, m in enumerate(methods)}
    mo = {m: i for i, m in enumerate(spec.metrics)}
    rows.sort(key=lambda r: (order[r.requested] if r.requested in order else 0, mo[r.metric]))
    return rows


def run_sweep(cfg, spec=None, n_samples=None, seed=None, workers=None):
    """Evaluate every (axis value x scheme x metric x method) combination.

    Returns ``(rows, manifest)``.  Rows come back in input order regardless of
    how many workers evaluate the points.
    """
    spec = spec or cfg.sweep()
    mc = cfg.values["montecarlo"]
    n_samples = int(n_samples or mc["samples"])
    seed = int(mc["seed"] if seed is None else seed)
    workers = int(workers or mc["workers"])
    jobs = [(v, s) for v in spec.values for s in spec.schemes]

    def run(job):
        return _point(cfg, spec.axis, job[0], job[1], spec, n_samples, seed, 1)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    rows = [r for p in parts for r in p]
    manifest = RunManifest(
        config_hash=cfg.digest(),
        tool_version=TOOL_VERSION,
        master_seed=seed,
        n_samples=n_samples,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        methods=[f"{r.axis_value!r}/{r.scheme}/{r.metric}/{r.requested}:{r.method}" for r in rows],
    )
    return rows, manifest


def _num(x):
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _columns(rows, timing):
    cols = list(COLUMNS)
    if any(r.ratio is not None or r.requested == "asymptotic" for r in rows):
        cols.append("ratio")
    if timing:
        cols.append("seconds")
    return cols


def _record(r, cols):
    out = {}
    for c in cols:
        v = getattr(r, c)
        out[c] = _num(v) if c in ("value", "err", "ci_low", "ci_high", "ratio", "seconds", "axis_value") else str(v)
    return out


def to_csv(rows, timing=False):
    cols = _columns(rows, timing)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(_record(r, cols))
    return buf.getvalue()


def to_json(rows, timing=False):
    cols = _columns(rows, timing)
    recs = []
    for r in rows:
        rec = {}
        for c in cols:
            v = getattr(r, c)
            if isinstance(v, float) and math.isnan(v):
                v = None
            rec[c] = v
        recs.append(rec)
    return json.dumps(recs, indent=1) + "\n"


def read_csv(text):
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        def f(k):
            v = rec.get(k, "")
            return math.nan if v in ("", None) else float(v)

        ratio = rec.get("ratio")
        rows.append(Row(rec["axis"], f("axis_value"), rec["scheme"], int(rec["n_antennas"]), rec["metric"],
                        rec["method"], f("value"), f("err"), f("ci_low"), f("ci_high"), rec.get("status", "ok"),
                        float(ratio) if ratio else None, requested=rec["method"]))
    return rows


@dataclass
class Verdict:
    axis_value: float
    scheme: str
    metric: str
    method: str
    value: float
    mc_value: float
    rel_dev: float
    inside_ci: bool | None
    status: str

    @property
    def failed(self):
        return self.status == "FAIL"


def compare_report(rows, min_prob=1e-4):
    """Per-point deviation of analytic rows from simulation rows.

    A point fails when an analytic value falls outside the simulation's 95%
    interval; outage/BER points below ``min_prob`` are reported but not gated.
    Returns ``(verdicts, ok)``.
    """
    groups = {}
    for r in rows:
        groups.setdefault((r.axis_value, r.scheme, r.n_antennas, r.metric), []).append(r)
    verdicts = []
    for (av, sch, _, metric), rs in groups.items():
        mcs = [r for r in rs if r.method == "montecarlo" and r.status == "ok"]
        others = [r for r in rs if r.method != "montecarlo" and r.status == "ok"]
        refs = mcs or others[:1]
        if not refs:
            continue
        ref = refs[0]
        for r in others:
            if r is ref:
                continue
            dev = abs(r.value - ref.value) / abs(ref.value) if ref.value else abs(r.value - ref.value)
            if ref.method != "montecarlo":
                inside, status = None, ("PASS" if dev == 0 else "INFO")
            else:
                inside = ref.ci_low <= r.value <= ref.ci_high
                gated = r.method in ANALYTIC and not (metric in ("outage", "ber") and ref.value < min_prob)
                status = ("PASS" if inside else "FAIL") if gated else "INFO"
            verdicts.append(Verdict(av, sch, metric, r.method, r.value, ref.value, dev, inside, status))
    return verdicts, not any(v.failed for v in verdicts)


def format_report(verdicts):
    lines = [f"{'axis':>10} {'scheme':>10} {'metric':>9} {'method':>11} {'value':>13} {'reference':>13} {'rel.dev':>9}  verdict"]
    for v in verdicts:
        lines.append(
            f"{v.axis_value:>10.4g} {v.scheme:>10} {v.metric:>9} {v.method:>11} {v.value:>13.6e} "
            f"{v.mc_value:>13.6e} {v.rel_dev:>9.2e}  {v.status}"
        )
    n_fail = sum(v.failed for v in verdicts)
    lines.append(f"{len(verdicts)} comparisons, {n_fail} outside the 95% interval")
    return "\n".join(lines)

"""Command-line entry point: ``rfthz {eval,sweep,compare,selftest}``.

Exit status is 0 on success, 1 when a comparison or acceptance check fails
and 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from .e2e import avg_ber, e2e_cdf, e2e_pdf, ergodic_capacity, outage
from .montecarlo import Metric, SimConfig, estimate_metric
from .sweep import compare_report, format_report, read_csv, run_sweep, to_csv, to_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _common(p):
    p.add_argument("--config", help="configuration file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="master seed for Monte-Carlo runs")
    p.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    ap = argparse.ArgumentParser(prog="rfthz", description="Hybrid RF/THz dual-hop link analysis")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate one metric at one operating point")
    _common(p)
    p.add_argument("--metric", choices=("outage", "ber", "capacity", "cdf", "pdf"), default="outage")
    p.add_argument("--method", choices=("auto", "quadrature", "asymptotic", "montecarlo"), default="auto")
    p.add_argument("--scheme", choices=("SC", "MRC_EXACT", "MRC_APPROX", "EGC"))
    p.add_argument("--n-antennas", type=int)
    p.add_argument("--gbar-rf-db", type=float, help="override the RF SNR (dB)")
    p.add_argument("--gamma-db", type=float, help="argument for cdf/pdf, threshold for outage (dB)")

    p = sub.add_parser("sweep", help="run the configured parameter sweep")
    _common(p)
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="append a wall-clock seconds column")

    p = sub.add_parser("compare", help="analytic-vs-simulation report")
    _common(p)
    p.add_argument("--table", help="compare an existing CSV table instead of running the sweep")
    p.add_argument("--min-prob", type=float, help="outage/BER values below this are not gated")

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,6")
    p.add_argument("--out", help="write the records CSV here")
    return ap


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.set("montecarlo", "seed", args.seed)
    if getattr(args, "samples", None) is not None:
        cfg.set("montecarlo", "samples", args.samples)
    return cfg.validate()


def cmd_eval(args):
    cfg = _load(args)
    if args.gbar_rf_db is not None:
        cfg = cfg.with_axis("gbar_rf_db", args.gbar_rf_db)
    if args.n_antennas is not None:
        cfg = cfg.with_axis("n_antennas", args.n_antennas)
    system = cfg.system(scheme=args.scheme)
    gamma = 10 ** (args.gamma_db / 10) if args.gamma_db is not None else cfg.gamma_th
    mod = cfg.modulation()
    if args.method == "montecarlo":
        if args.metric in ("cdf", "pdf"):
            raise ValueError("Monte-Carlo evaluation supports outage, ber and capacity")
        metric = {"outage": Metric.outage(gamma), "ber": Metric.ber(mod.p, mod.q), "capacity": Metric.capacity()}[args.metric]
        mc = cfg.values["montecarlo"]
        e = estimate_metric(metric, SimConfig(system, mc["samples"], mc["seed"], 1, mc["block_size"]))
        rec = {"metric": args.metric, "method": "montecarlo", "value": e.mean, "err": e.ci95_halfwidth,
               "ci_low": e.ci_low, "ci_high": e.ci_high, "n": e.n}
    else:
        m = args.method
        if args.metric == "outage":
            r = outage(gamma, system, method=m)
        elif m == "asymptotic":
            raise ValueError("the asymptotic form is only available for outage")
        elif args.metric == "ber":
            r = avg_ber(system, mod, method=m)
        elif args.metric == "capacity":
            r = ergodic_capacity(system, method=m)
        elif args.metric == "cdf":
            r = e2e_cdf(gamma, system, method=m)
        else:
            r = e2e_pdf(gamma, system, method=m)
        rec = {"metric": args.metric, "method": r.method.value, "value": r.value, "err": r.err}
    rec["scheme"] = system.rf.scheme.value
    rec["n_antennas"] = system.rf.n_antennas
    if args.format == "json":
        _emit(json.dumps(rec, indent=1) + "\n", args.out)
    else:
        keys = list(rec)
        _emit(",".join(keys) + "\n" + ",".join(repr(rec[k]) if isinstance(rec[k], float) else str(rec[k]) for k in keys) + "\n", args.out)
    return EXIT_OK


def _write_table(rows, manifest, args, timing=False):
    text = to_json(rows, timing) if args.format == "json" else to_csv(rows, timing)
    _emit(text, args.out)
    if args.out:
        with open(args.out + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json())
    else:
        sys.stderr.write(manifest.to_json())


def cmd_sweep(args):
    cfg = _load(args)
    rows, manifest = run_sweep(cfg, workers=args.workers)
    _write_table(rows, manifest, args, timing=args.timing)
    return EXIT_OK


def cmd_compare(args):
    min_prob = args.min_prob
    if args.table:
        with open(args.table, encoding="utf-8") as fh:
            rows = read_csv(fh.read())
        if min_prob is None:
            min_prob = 1e-4
    else:
        cfg = _load(args)
        spec = cfg.sweep()
        if "montecarlo" not in spec.methods:
            spec = replace(spec, methods=spec.methods + ("montecarlo",))
        rows, manifest = run_sweep(cfg, spec)
        if min_prob is None:
            min_prob = cfg.get("montecarlo", "min_prob")
        if args.out:
            _write_table(rows, manifest, args)
    verdicts, ok = compare_report(rows, min_prob=min_prob)
    print(format_report(verdicts))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_selftest(args):
    from .acceptance import CRITERIA, records_csv, run_all

    keys = [k.strip() for k in args.criteria.split(",")] if args.criteria else list(CRITERIA)
    for k in keys:
        if k not in CRITERIA:
            raise ValueError(f"unknown criterion {k!r}")
    results = run_all(keys)
    if args.out:
        _emit(records_csv(results), args.out)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_FAIL


COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "compare": cmd_compare, "selftest": cmd_selftest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

import json

import pytest

from rfthz.config import loads_config
from rfthz.e2e import avg_ber, ergodic_capacity, outage
from rfthz.sweep import COLUMNS, Row, compare_report, format_report, read_csv, run_sweep, to_csv, to_json

BASE = """
[rf]
alpha = 1.5
mu = 1.2

[thz]
alpha = 2.0
mu = 2.6
sigma_s = 0.1

[sweep]
values = {values}
methods = {methods}
schemes = {schemes}
metrics = {metrics}

[montecarlo]
samples = 200000
"""


def cfg(values="20", methods="exact", schemes="SC", metrics="outage, ber, capacity", extra=""):
    return loads_config(BASE.format(values=values, methods=methods, schemes=schemes, metrics=metrics) + extra)


def test_single_point_matches_direct_call():
    c = cfg()
    rows, _ = run_sweep(c)
    s = c.with_axis("gbar_rf_db", 20.0).system()
    direct = {
        "outage": outage(c.gamma_th, s).value,
        "ber": avg_ber(s, c.modulation()).value,
        "capacity": ergodic_capacity(s).value,
    }
    assert {r.metric: r.value for r in rows} == direct
    assert all(r.method == "exact" and r.status == "ok" for r in rows)


def test_asymptotic_and_exact_give_ratio_column():
    c = cfg(values="30", methods="exact, asymptotic", metrics="outage", extra="[snr]\nmode = scale\nthz = equal\n")
    rows, _ = run_sweep(c)
    assert {r.method for r in rows} == {"exact", "asymptotic"}
    asym = next(r for r in rows if r.method == "asymptotic")
    exact = next(r for r in rows if r.method == "exact")
    assert asym.ratio == pytest.approx(asym.value / exact.value)
    header = to_csv(rows).splitlines()[0].split(",")
    assert header == list(COLUMNS) + ["ratio"]


def test_output_is_deterministic():
    c = cfg(values="10, 20", methods="exact, montecarlo")
    a, ma = run_sweep(c)
    b, mb = run_sweep(c, workers=2)
    assert to_csv(a) == to_csv(b)
    assert to_json(a) == to_json(b)
    assert ma.config_hash == mb.config_hash and ma.master_seed == mb.master_seed
    assert "seconds" not in to_csv(a).splitlines()[0]
    assert "seconds" in to_csv(a, timing=True).splitlines()[0]


def test_monotone_outage_columns():
    c = cfg(values="0, 10, 20, 30, 40, 50", schemes="SC, MRC_APPROX", metrics="outage")
    c.set("rf", "n_antennas", 2)
    rows, _ = run_sweep(c)
    for scheme in ("SC", "MRC_APPROX"):
        col = [r.value for r in rows if r.scheme == scheme]
        assert len(col) == 6
        assert all(b <= a for a, b in zip(col, col[1:]))


def test_egc_rows_are_simulated():
    c = cfg(schemes="EGC", metrics="outage")
    c.set("rf", "n_antennas", 2)
    rows, _ = run_sweep(c)
    assert [r.method for r in rows] == ["montecarlo"]


def test_point_failures_stay_in_row():
    c = cfg(values="20", methods="exact", metrics="outage")
    c.set("thz", "sigma_s", -1.0)
    rows, _ = run_sweep(c)
    assert rows and rows[0].status.startswith("error")


def test_csv_round_trip():
    rows, _ = run_sweep(cfg(values="10", methods="exact, montecarlo"))
    back = read_csv(to_csv(rows))
    assert [(r.metric, r.method, r.value) for r in back] == [(r.metric, r.method, r.value) for r in rows]
    recs = json.loads(to_json(rows))
    assert recs[0]["axis"] == "gbar_rf_db" and set(COLUMNS) <= set(recs[0])


def test_identical_columns_zero_deviation():
    rows = [
        Row("gbar_rf_db", 10.0, "SC", 1, "outage", "exact", 0.2, 0.0),
        Row("gbar_rf_db", 10.0, "SC", 1, "outage", "quadrature", 0.2, 0.0),
    ]
    verdicts, ok = compare_report(rows)
    assert ok and all(v.rel_dev == 0.0 for v in verdicts)


def test_report_passes_on_correct_model():
    rows, _ = run_sweep(cfg(values="10, 20", methods="exact, montecarlo"))
    verdicts, ok = compare_report(rows)
    assert ok, format_report(verdicts)
    assert len(verdicts) == 6


def test_wrong_relay_constant_is_flagged():
    # analytic rows use a manual C = 1e6 while the simulation keeps the true constant
    good = cfg(values="10, 20", methods="montecarlo")
    bad = cfg(values="10, 20", methods="exact", extra="[relay]\nmode = manual\nc_const = 1e6\n")
    rows = run_sweep(good)[0] + run_sweep(bad)[0]
    verdicts, ok = compare_report(rows)
    assert not ok
    assert sum(v.failed for v in verdicts) >= 4
    assert "outside the 95% interval" in format_report(verdicts)

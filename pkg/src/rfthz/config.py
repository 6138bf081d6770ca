"""INI-style run configuration with baked-in defaults.

Every section and key is optional; an empty file yields the default system
(275 GHz / 800 MHz link, kappa = 2.8e-4, S0 = 0.054, noise -101 / -74 dBm,
BER p = 0.5, q = 1).  Unknown sections or keys are rejected with their line
and column.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

from .channel import AlphaMuParams, LinkBudget, PointingModel, alpha_mu_moment, average_snrs
from .diversity import DiversityConfig, Scheme
from .e2e import BerModulation, RelayConfig, SystemModel

__all__ = ["ConfigError", "RunConfig", "SweepSpec", "load_config", "loads_config", "dump_config", "SWEEP_AXES"]


def _floats(text):
    return tuple(float(x) for x in _items(text))


def _items(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if str(text).strip() == "" else float(text)


def _str(text):
    return str(text).strip()


def _int(text):
    return int(str(text).strip())


# section -> key -> (parser, default)
SCHEMA = {
    "rf": {
        "scheme": (_str, "SC"),
        "n_antennas": (_int, 1),
        "alpha": (_floats, (2.0,)),
        "mu": (_floats, (2.5,)),
        "omega": (_floats, (1.0,)),
        "moment_mode": (_str, "snr"),
    },
    "thz": {
        "alpha": (float, 1.5),
        "mu": (float, 0.8),
        "omega": (float, 1.0),
        "sigma_s": (float, 0.08),
        "w_eq": (float, 0.60882),
        "s0": (float, 0.054),
    },
    "budget": {
        "f_rf": (float, 800e6),
        "f_thz": (float, 275e9),
        "d_rf": (float, 100.0),
        "d_thz": (float, 50.0),
        "g_rf_dbi": (float, 25.0),
        "g_thz_dbi": (float, 55.0),
        "kappa": (float, 2.8e-4),
        "p_tx_dbm": (float, 20.0),
        "noise_rf_dbm": (float, -101.0),
        "noise_thz_dbm": (float, -74.0),
        "thz_gain": (_str, "amplitude"),
    },
    "snr": {
        "mode": (_str, "mean"),
        "gbar_rf_db": (_opt_float, None),
        "thz": (_str, "offset"),
        "thz_offset_db": (_opt_float, None),
        "gbar_thz_db": (_opt_float, None),
    },
    "relay": {
        "mode": (_str, "auto"),
        "c_const": (_opt_float, None),
    },
    "metrics": {
        "gamma_th_db": (float, 4.0),
        "ber_p": (float, 0.5),
        "ber_q": (float, 1.0),
    },
    "sweep": {
        "axis": (_str, "gbar_rf_db"),
        "values": (_floats, (10.0, 20.0, 30.0, 40.0)),
        "metrics": (_items, ["outage", "ber", "capacity"]),
        "methods": (_items, ["exact"]),
        "schemes": (_items, ["SC"]),
    },
    "montecarlo": {
        "samples": (_int, 1_000_000),
        "seed": (_int, 20240607),
        "workers": (_int, 1),
        "block_size": (_int, 1 << 18),
        "min_prob": (float, 1e-4),
    },
}

SWEEP_AXES = ("tx_power_dbm", "gbar_rf_db", "gbar_thz_db", "n_antennas", "sigma_s", "mu_thz", "alpha_thz", "d_rf")
METRICS = ("outage", "ber", "capacity")
METHODS = ("exact", "approx", "asymptotic", "montecarlo", "quadrature")


class ConfigError(ValueError):
    def __init__(self, msg, line=None, col=None):
        where = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + where)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    metrics: tuple
    methods: tuple
    schemes: tuple

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep values must be nonempty")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}")
        for s in self.schemes:
            try:
                Scheme(s)
            except ValueError:
                raise ConfigError(f"unknown scheme {s!r}") from None


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]

    def set(self, section, key, value):
        self.values[section][key] = value

    def copy(self):
        return RunConfig({s: dict(v) for s, v in self.values.items()})

    # -- model construction --------------------------------------------------

    def budget(self):
        b = self.values["budget"]
        if b["thz_gain"] not in ("amplitude", "power"):
            raise ConfigError("budget.thz_gain must be 'amplitude' or 'power'")
        return LinkBudget(
            f_rf=b["f_rf"],
            f_thz=b["f_thz"],
            d_rf=b["d_rf"],
            d_thz=b["d_thz"],
            g_rf_dBi=b["g_rf_dbi"],
            g_thz_dBi=b["g_thz_dbi"],
            kappa=b["kappa"],
            p_tx_dBm=b["p_tx_dbm"],
            noise_rf_dBm=b["noise_rf_dbm"],
            noise_thz_dBm=b["noise_thz_dbm"],
            thz_gain_is_power=b["thz_gain"] == "power",
        )

    def branches(self, n_antennas=None):
        rf = self.values["rf"]
        n = int(n_antennas if n_antennas is not None else rf["n_antennas"])
        if n < 1:
            raise ConfigError("rf.n_antennas must be >= 1")
        cols = []
        for key in ("alpha", "mu", "omega"):
            v = rf[key]
            if len(v) == 1:
                v = v * n
            elif len(v) != n:
                raise ConfigError(f"rf.{key} needs 1 or n_antennas values")
            cols.append(v)
        try:
            return tuple(AlphaMuParams(a, m, o) for a, m, o in zip(*cols))
        except ValueError as exc:
            raise ConfigError(f"invalid RF branch parameters: {exc}") from None

    def thz(self):
        t = self.values["thz"]
        try:
            return AlphaMuParams(t["alpha"], t["mu"], t["omega"]), PointingModel(t["sigma_s"], t["w_eq"], t["s0"])
        except ValueError as exc:
            raise ConfigError(f"invalid THz parameters: {exc}") from None

    def snr_db(self):
        """(gbar_RF, gbar_THz) in dB as configured, before mean/scale conversion."""
        s = self.values["snr"]
        b_rf, b_thz = (10.0 * math.log10(x) for x in average_snrs(self.budget()))
        rf_db = b_rf if s["gbar_rf_db"] is None else s["gbar_rf_db"]
        mode = s["thz"]
        if mode == "offset":
            off = (b_thz - b_rf) if s["thz_offset_db"] is None else s["thz_offset_db"]
            thz_db = rf_db + off
        elif mode == "fixed":
            thz_db = b_thz if s["gbar_thz_db"] is None else s["gbar_thz_db"]
        elif mode == "equal":
            thz_db = rf_db
        else:
            raise ConfigError("snr.thz must be 'offset', 'fixed' or 'equal'")
        return rf_db, thz_db

    def system(self, scheme=None, n_antennas=None):
        rf = self.values["rf"]
        scheme = scheme or rf["scheme"]
        br = self.branches(n_antennas)
        thz, pe = self.thz()
        rf_db, thz_db = self.snr_db()
        g_rf, g_thz = 10.0 ** (rf_db / 10.0), 10.0 ** (thz_db / 10.0)
        mode = self.values["snr"]["mode"]
        if mode == "mean":
            # configured values are mean SNRs; convert to the distribution scale
            g_rf /= sum(alpha_mu_moment(1, b, 1.0) for b in br) / len(br)
            g_thz /= alpha_mu_moment(1, thz, 1.0) * pe.S0**2 * pe.phi / (pe.phi + 2.0)
        elif mode != "scale":
            raise ConfigError("snr.mode must be 'mean' or 'scale'")
        r = self.values["relay"]
        try:
            relay = RelayConfig(r["mode"], r["c_const"])
            div = DiversityConfig(Scheme(scheme), br, g_rf, rf["moment_mode"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return SystemModel(div, thz, pe, g_thz, relay, self.budget())

    def modulation(self):
        m = self.values["metrics"]
        return BerModulation(m["ber_p"], m["ber_q"])

    @property
    def gamma_th(self):
        return 10.0 ** (self.values["metrics"]["gamma_th_db"] / 10.0)

    def sweep(self):
        s = self.values["sweep"]
        return SweepSpec(s["axis"], tuple(s["values"]), tuple(s["metrics"]), tuple(s["methods"]), tuple(s["schemes"]))

    def with_axis(self, axis, value):
        """Copy with one sweep-axis value applied."""
        c = self.copy()
        if axis == "tx_power_dbm":
            c.set("budget", "p_tx_dbm", float(value))
            c.set("snr", "gbar_rf_db", None)
        elif axis == "gbar_rf_db":
            c.set("snr", "gbar_rf_db", float(value))
        elif axis == "gbar_thz_db":
            c.set("snr", "thz", "fixed")
            c.set("snr", "gbar_thz_db", float(value))
        elif axis == "n_antennas":
            c.set("rf", "n_antennas", int(value))
        elif axis == "sigma_s":
            c.set("thz", "sigma_s", float(value))
        elif axis == "mu_thz":
            c.set("thz", "mu", float(value))
        elif axis == "alpha_thz":
            c.set("thz", "alpha", float(value))
        elif axis == "d_rf":
            c.set("budget", "d_rf", float(value))
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        return c

    def validate(self):
        self.system()
        self.sweep()
        self.modulation()
        mc = self.values["montecarlo"]
        if mc["samples"] < 1 or mc["workers"] < 1 or mc["block_size"] < 1:
            raise ConfigError("montecarlo samples, workers and block_size must be positive")
        return self

    def digest(self):
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


def _locate(text, section, key):
    cur = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            cur = m.group(1).strip().lower()
            if key is None and cur == section:
                return i, line.index("[") + 1
            continue
        if key is not None and cur == section:
            m = re.match(r"(\s*)([^=:\s]+)\s*[=:]", line)
            if m and m.group(2).strip().lower() == key:
                return i, len(m.group(1)) + 1
    return None, None


def loads_config(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        msg = str(getattr(exc, "message", exc)).splitlines()[0]
        raise ConfigError(f"cannot parse configuration: {msg}", line, 1 if line else None) from None
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for values_s in values.values():
        for k, v in values_s.items():
            if isinstance(v, list):
                values_s[k] = list(v)
    for section in parser.sections():
        sec = section.strip().lower()
        if sec not in SCHEMA:
            line, col = _locate(text, sec, None)
            raise ConfigError(f"unknown section [{section}]", line, col)
        for key, raw in parser.items(section):
            if key not in SCHEMA[sec]:
                line, col = _locate(text, sec, key)
                raise ConfigError(f"unknown key {sec}.{key}", line, col)
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(raw)
            except ValueError as exc:
                line, col = _locate(text, sec, key)
                raise ConfigError(f"bad value for {sec}.{key}: {exc}", line, col) from None
    return RunConfig(values).validate()


def load_config(path=None):
    if path is None:
        return loads_config("")
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read())


def dump_config(cfg):
    """Canonical text form: every section and key, in schema order."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[section][key])}".rstrip())
        lines.append("")
    return "\n".join(lines)

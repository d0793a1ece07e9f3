"""INI-style run configuration.

Sections and keys (``*`` = mandatory)::

    [model]    d1* d2* p* q* mu* rho* h0*
               a_base* a_amplitude a_wavenumber   (same for b_*)
               H_family H_slope* H_saturation     (same for G_*)
               J1_family J1_width J1_radius*      (same for J2_*)
    [initial]  family u_amplitude v_amplitude
    [grid]     dx* window_factor
    [run]      horizon dt sample_every vanish_density vanish_speed
               spread_safety spread_length_factor spread_density_fraction
               tol_rel mu_start max_doublings
    [output]   directory snapshots

Unknown sections or keys are errors. :func:`write_config` echoes the full
effective configuration, defaults included, in a form that parses back to
an identical :class:`RunConfig`.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .discretize import Grid, build_grid
from .errors import ConfigError, GridError
from .freeboundary import ClassifierConfig
from .model import (CoefficientField, InitialData, KernelSpec, ModelParams, NonlinearitySpec,
                    validate)

_REQ = object()

SCHEMA = {
    "model": {
        "d1": (float, _REQ), "d2": (float, _REQ), "p": (float, _REQ), "q": (float, _REQ),
        "mu": (float, _REQ), "rho": (float, _REQ), "h0": (float, _REQ),
        "a_base": (float, _REQ), "a_amplitude": (float, 0.0), "a_wavenumber": (float, 0.0),
        "b_base": (float, _REQ), "b_amplitude": (float, 0.0), "b_wavenumber": (float, 0.0),
        "H_family": (str, "monod"), "H_slope": (float, _REQ), "H_saturation": (float, 1.0),
        "G_family": (str, "monod"), "G_slope": (float, _REQ), "G_saturation": (float, 1.0),
        "J1_family": (str, "quartic-bump"), "J1_width": (float, 0.5), "J1_radius": (float, _REQ),
        "J2_family": (str, "quartic-bump"), "J2_width": (float, 0.5), "J2_radius": (float, _REQ),
    },
    "initial": {
        "family": (str, "cosine-bump"), "u_amplitude": (float, 1.0), "v_amplitude": (float, 1.0),
    },
    "grid": {"dx": (float, _REQ), "window_factor": (float, 20.0)},
    "run": {
        "horizon": (float, 200.0), "dt": (float, math.nan), "sample_every": (float, 1.0),
        "vanish_density": (float, 1e-7), "vanish_speed": (float, 1e-9),
        "spread_safety": (float, 1.25), "spread_length_factor": (float, 20.0),
        "spread_density_fraction": (float, 0.5),
        "tol_rel": (float, 0.05), "mu_start": (float, 1e-3), "max_doublings": (int, 2),
    },
    "output": {"directory": (str, "fbepi-out"), "snapshots": (bool, False)},
}


@dataclass
class RunConfig:
    values: dict  # section -> key -> typed value, every key present
    params: ModelParams
    initial: InitialData
    grid: Grid
    classifier: ClassifierConfig
    source: str | None = None
    lines: dict = field(default_factory=dict, repr=False)

    def run(self, key):
        return self.values["run"][key]

    @property
    def dt(self) -> float | None:
        dt = self.values["run"]["dt"]
        return None if math.isnan(dt) else dt

    def __eq__(self, other):
        # floats are echoed with repr, so equal text means equal values (nan included)
        return isinstance(other, RunConfig) and format_config(self) == format_config(other)


def _locate(text: str) -> dict:
    """Map (section, key) -> line number by scanning the raw text."""
    where, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]$", s)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = no
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            where[(section, m.group(1).strip())] = no
    return where


def _convert(kind, raw: str):
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    return kind(raw.strip())


def parse_config_text(text: str, source: str | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"syntax error: {exc.message if hasattr(exc, 'message') else exc}", line, source) from exc
    where = _locate(text)
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", where.get((sec, None)), source)
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", where.get((sec, key)), source)
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (kind, default) in keys.items():
            if cp.has_option(sec, key):
                raw = cp.get(sec, key)
                try:
                    values[sec][key] = _convert(kind, raw)
                except ValueError as exc:
                    raise ConfigError(f"[{sec}] {key}: expected {kind.__name__}, got {raw!r}",
                                      where.get((sec, key)), source) from exc
            elif default is _REQ:
                raise ConfigError(f"missing mandatory key {key!r} in [{sec}]", where.get((sec, None)), source)
            else:
                values[sec][key] = default
    return _build(values, where, source)


def _build(values: dict, where: dict, source) -> RunConfig:
    m = values["model"]

    def kernel(k):
        return KernelSpec(m[f"{k}_family"], m[f"{k}_width"], m[f"{k}_radius"])

    def coupling(k):
        return NonlinearitySpec(m[f"{k}_family"], m[f"{k}_slope"], m[f"{k}_saturation"])

    def coeff(k):
        return CoefficientField(m[f"{k}_base"], m[f"{k}_amplitude"], m[f"{k}_wavenumber"])

    ini = values["initial"]
    initial = InitialData(ini["family"], ini["u_amplitude"], ini["v_amplitude"])
    g = values["grid"]
    try:
        grid = build_grid(m["h0"], g["dx"], g["window_factor"])
    except GridError as exc:
        line = where.get(("grid", "dx")) or where.get(("model", "h0"))
        raise ConfigError(str(exc), line, source) from exc
    params = ModelParams(d1=m["d1"], d2=m["d2"], p=m["p"], q=m["q"], a=coeff("a"), b=coeff("b"),
                         H=coupling("H"), G=coupling("G"), J1=kernel("J1"), J2=kernel("J2"),
                         mu=m["mu"], rho=m["rho"], h0=grid.h0)
    report = validate(params, initial)
    if not report.ok:
        first = report.failures[0]
        sec_key = _failure_location(first.name)
        raise ConfigError("invalid parameters: " + "; ".join(f"{c.name}: {c.message}" for c in report.failures),
                          where.get(sec_key), source)
    r = values["run"]
    classifier = ClassifierConfig(r["vanish_density"], r["vanish_speed"], r["spread_safety"],
                                  r["spread_length_factor"], r["spread_density_fraction"])
    return RunConfig(values, params, initial, grid, classifier, source, where)


def _failure_location(check_name: str):
    head = check_name.split(".")[0]
    table = {"J1": "J1_radius", "J2": "J2_radius", "H": "H_slope", "G": "G_slope", "a": "a_base", "b": "b_base"}
    if head == "IC":
        return ("initial", None)
    return ("model", table.get(head, head))


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(path)) from exc
    return parse_config_text(text, str(path))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key in keys:
            lines.append(f"{key} = {_fmt(cfg.values[sec][key])}")
        lines.append("")
    return "\n".join(lines)


def write_config(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(format_config(cfg))
    return path

"""Command-line entry point.

Every subcommand reads one INI config and writes into
``<outdir>/<subcommand>/<timestamp>/``: the echoed ``effective_config.ini``,
its data files, and ``manifest.json`` with a sha256 for each file.

Exit codes: 0 success or spreading, 1 vanishing, 2 undecided, 64 usage
error, 65 config error, 70 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA, RunConfig, _build, format_config, parse_config
from .errors import ConfigError, FbepiError, ThresholdError
from .freeboundary import SPREADING, VANISHING, run
from .spectral import (assemble, operator_R0, principal_eig_direct, spectral_grid)
from .steady import bifurcation_scan, solve_coexistence
from .thresholds import (critical_half_width, dichotomy_table, find_mu_hat, _coexistence_or_none)

EXIT_OK, EXIT_VANISH, EXIT_UNDECIDED = 0, 1, 2
EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 64, 65, 70

log = logging.getLogger("fbepi")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- output helpers -----------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, obj) -> Path:
    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"not serializable: {type(o).__name__}")

    path.write_text(json.dumps(obj, indent=2, default=default, allow_nan=True) + "\n")
    return path


class RunDir:
    """One timestamped output directory plus its manifest."""

    def __init__(self, root: Path, subcommand: str):
        stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%S_%fZ")
        path = Path(root) / subcommand / stamp
        n = 1
        while path.exists():
            path = Path(root) / subcommand / f"{stamp}-{n}"
            n += 1
        path.mkdir(parents=True)
        self.path = path

    def __truediv__(self, name):
        return self.path / name

    def finish(self, exit_code: int, extra: dict | None = None) -> Path:
        files = []
        for f in sorted(p for p in self.path.rglob("*") if p.is_file() and p.name != "manifest.json"):
            files.append({"path": str(f.relative_to(self.path)),
                          "sha256": hashlib.sha256(f.read_bytes()).hexdigest(),
                          "bytes": f.stat().st_size})
        manifest = {"fbepi_version": __version__, "exit_code": exit_code, "files": files}
        manifest.update(extra or {})
        return write_json(self.path / "manifest.json", manifest)


def _range(text: str, kind: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"expected a:b:{kind}, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        third = int(parts[2]) if kind == "n" else float(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad range {text!r}: {exc}") from exc
    if kind == "n":
        if third < 1:
            raise UsageError("n must be >= 1")
        return np.linspace(lo, hi, third)
    if third <= 0 or hi < lo:
        raise UsageError(f"bad range {text!r}: need step > 0 and a <= b")
    count = int(math.floor((hi - lo) / third + 1e-9)) + 1
    return lo + third * np.arange(count)


def _floats(text: str):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad value list {text!r}") from exc


# -- subcommands --------------------------------------------------------------


def _eigen_rows(cfg: RunConfig, zs):
    params, dx = cfg.params, cfg.grid.dx
    sg = spectral_grid(dx, float(max(zs)), params)
    rows = []
    for Z in zs:
        op = assemble(params, sg, float(Z))
        eig = principal_eig_direct(op)
        try:
            r0 = operator_R0(params, sg, float(Z))
        except FbepiError:
            r0 = math.nan
        rows.append((op.Z, eig.lam, r0, eig.iterations, eig.residual))
    return rows


EIGEN_HEADER = ("Z", "lambda_star", "rho_at_zero", "iterations", "residual")


def cmd_eigen(cfg: RunConfig, args, out: RunDir) -> int:
    zs = _range(args.sweep_z, "step") if args.sweep_z else [args.z if args.z is not None else cfg.grid.h0]
    write_csv(out / "eigen.csv", EIGEN_HEADER, _eigen_rows(cfg, zs))
    return EXIT_OK


def cmd_steady(cfg: RunConfig, args, out: RunDir) -> int:
    cs = solve_coexistence(cfg.params)
    write_json(out / "steady.json", {"u_star": cs.u_star, "v_star": cs.v_star, "R0": cs.R0,
                                     "residuals": [cs.residual_u, cs.residual_v], "extinct": cs.extinct})
    if args.bifurcation:
        pts = bifurcation_scan(cfg.params, _range(args.bifurcation, "n"))
        write_csv(out / "bifurcation.csv", ("mu", "u_star", "v_star", "residual"),
                  [(p.mu, p.u_star, p.v_star, p.residual) for p in pts])
    return EXIT_OK


def _simulate(cfg: RunConfig, snapshots: bool):
    params, grid = cfg.params, cfg.grid
    try:
        cd = critical_half_width(params, grid)
        z_star = cd.z_star if cd.found else None
    except FbepiError:
        z_star = None
    coex = _coexistence_or_none(params) if params.constant_coefficients else None
    trace = run(params, grid, cfg.initial, cfg.run("horizon"), cfg.run("sample_every"), dt=cfg.dt,
                classifier=cfg.classifier, z_star=z_star, coexistence=coex, snapshots=snapshots)
    return trace, z_star


def _label_code(label: str) -> int:
    return {SPREADING: EXIT_OK, VANISHING: EXIT_VANISH}.get(label, EXIT_UNDECIDED)


def cmd_simulate(cfg: RunConfig, args, out: RunDir) -> int:
    snaps = args.snapshots or cfg.values["output"]["snapshots"]
    trace, z_star = _simulate(cfg, snaps)
    write_csv(out / "trace.csv", ("t", "g", "h", "phi", "sup_u", "sup_v"), trace.rows())
    if snaps:
        sd = out / "snapshots"
        sd.mkdir()
        header = ["x"] + [f"t={fmt(t)}" for t, _, _ in trace.snapshots]
        for name, k in (("u", 1), ("v", 2)):
            cols = [s[k] for s in trace.snapshots]
            write_csv(sd / f"{name}.csv", header, zip(trace.x, *cols))
    write_json(out / "summary.json", {
        "classification": trace.classification, "evidence": trace.evidence,
        "t_final": trace.final.t, "g": trace.final.g, "h": trace.final.h,
        "dt": trace.dt, "steps": trace.final.steps, "clamped_mass": trace.final.clamp,
        "z_star": z_star,
    })
    return _label_code(trace.classification)


def cmd_threshold(cfg: RunConfig, args, out: RunDir) -> int:
    params = cfg.params
    if args.table:
        mus = _floats(args.mu_values)
        h0s = _floats(args.h0_values) if args.h0_values else [cfg.grid.h0]
        rows = dichotomy_table(params, cfg.grid.dx, cfg.values["grid"]["window_factor"], mus, h0s,
                               cfg.initial, cfg.run("horizon"), cfg.classifier)
        write_csv(out / "dichotomy.csv", ("h0", "lambda_star", "z_star", "mu", "classification"),
                  [(r.h0, r.lambda_star, r.z_star, r.mu, r.classification) for r in rows])
        return EXIT_OK
    try:
        res = find_mu_hat(params, cfg.grid, cfg.initial, cfg.run("horizon"), cfg.run("tol_rel"),
                          cfg.classifier, cfg.run("mu_start"), max_doublings=cfg.run("max_doublings"),
                          jobs=args.jobs, sample_every=cfg.run("sample_every"))
    except ThresholdError as exc:
        msg = str(exc)
        vanish = msg.startswith("R0 <= 1")
        write_json(out / "threshold.json", {"error": msg, "outcome": "vanishing" if vanish else "failed"})
        if vanish:
            return EXIT_VANISH
        raise
    write_json(out / "threshold.json", res.to_dict())
    write_csv(out / "probes.csv", ("mu", "classification", "t_final", "g", "h", "horizon", "warning"),
              [(p.mu, p.classification, p.t_final, p.g, p.h, p.horizon, p.warning) for p in res.probes])
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------


def _with_value(cfg: RunConfig, param: str, value: float) -> RunConfig:
    if "." in param:
        sec, key = param.split(".", 1)
    else:
        sec = next((s for s, keys in SCHEMA.items() if param in keys), None)
        key = param
    if sec not in SCHEMA or key not in SCHEMA[sec]:
        raise UsageError(f"unknown parameter {param!r}")
    values = copy.deepcopy(cfg.values)
    kind = SCHEMA[sec][key][0]
    values[sec][key] = kind(value)
    return _build(values, cfg.lines, cfg.source)


def _sweep_job(job):
    cfg, op, z = job
    if op == "eigen":
        Z = z if z is not None else cfg.grid.h0
        (row,) = _eigen_rows(cfg, [Z])
        return list(row)
    if op == "steady":
        cs = solve_coexistence(cfg.params)
        return [cs.u_star, cs.v_star, cs.R0, max(cs.residual_u, cs.residual_v)]
    trace, _ = _simulate(cfg, False)
    st = trace.final
    return [trace.classification, st.t, st.g, st.h, trace.phi[-1]]


SWEEP_HEADERS = {
    "eigen": list(EIGEN_HEADER),
    "steady": ["u_star", "v_star", "R0", "residual"],
    "simulate": ["classification", "t_final", "g", "h", "phi"],
}


def cmd_sweep(cfg: RunConfig, args, out: RunDir) -> int:
    if not args.param or not args.values:
        raise UsageError("sweep needs --param and --values")
    values = _floats(args.values)
    jobs = [(_with_value(cfg, args.param, v), args.op, args.z) for v in values]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, jobs))  # map keeps input order
    else:
        results = [_sweep_job(j) for j in jobs]
    write_csv(out / "sweep.csv", [args.param] + SWEEP_HEADERS[args.op],
              [[v] + r for v, r in zip(values, results)])
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "eigen": cmd_eigen, "steady": cmd_steady,
            "threshold": cmd_threshold, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fbepi", description="Nonlocal two-species free-boundary epidemic model.")
    p.add_argument("--version", action="version", version=f"fbepi {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("config", help="INI configuration file")
        sp.add_argument("--outdir", help="output root (default: [output] directory)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    sp = common(sub.add_parser("simulate", help="integrate the free-boundary system"))
    sp.add_argument("--snapshots", action="store_true", help="write full-field CSV matrices")
    sp = common(sub.add_parser("eigen", help="principal eigenvalue and R0"))
    sp.add_argument("--sweep-z", metavar="A:B:STEP")
    sp.add_argument("--z", type=float, help="single half-width (default: h0)")
    sp = common(sub.add_parser("steady", help="coexistence state"))
    sp.add_argument("--bifurcation", metavar="MU_LO:MU_HI:N")
    sp = common(sub.add_parser("threshold", help="critical expansion rate"))
    sp.add_argument("--table", action="store_true", help="dichotomy table instead of a bracket")
    sp.add_argument("--mu-values", default="0.01,0.1,1,10")
    sp.add_argument("--h0-values")
    sp = common(sub.add_parser("sweep", help="repeat an operation over one parameter"))
    sp.add_argument("--param")
    sp.add_argument("--values")
    sp.add_argument("--op", choices=sorted(SWEEP_HEADERS), default="eigen")
    sp.add_argument("--z", type=float)
    return p


def run_subcommand(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = RunDir(args.outdir or cfg.values["output"]["directory"], args.command)
    (out / "effective_config.ini").write_text(format_config(cfg))
    try:
        code = COMMANDS[args.command](cfg, args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        code = EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except FbepiError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    out.finish(code, {"command": args.command, "argv": list(argv if argv is not None else sys.argv[1:])})
    print(out.path)
    return code


def main(argv=None):
    sys.exit(run_subcommand(argv))


if __name__ == "__main__":
    main()

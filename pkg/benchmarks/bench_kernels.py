"""Compiled kernels vs the numpy fallback.

Times ``euler_fields`` and ``boundary_flux`` from both backends on the
reference model, then a full run in a subprocess per backend (selected with
``FBEPI_BACKEND``). Usage::

    python3 benchmarks/bench_kernels.py [--repeat 200] [--horizon 50]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fbepi import _pycore
from fbepi.discretize import build_grid, build_operators
from fbepi.freeboundary import _coupling_args, _kernel_args
from fbepi.model import CoefficientField, KernelSpec, ModelParams, NonlinearitySpec

try:
    from fbepi import _core
except ImportError:
    _core = None

RUN_SNIPPET = """
import time
from fbepi import BACKEND
from fbepi.discretize import build_grid
from fbepi.freeboundary import run
from fbepi.model import InitialData
from bench_kernels import reference
P = reference()
g = build_grid(P.h0, 0.05, 300)
t0 = time.perf_counter()
tr = run(P, g, InitialData(), {horizon}, 1.0, stop_on_classification=False)
print(BACKEND, time.perf_counter() - t0, tr.h[-1])
"""


def reference():
    bump = KernelSpec("quartic-bump", 0.5, 1.0)
    monod = NonlinearitySpec("monod", 2.0, 1.0)
    return ModelParams(d1=1.0, d2=1.0, p=0.2, q=0.2, a=CoefficientField(1.0), b=CoefficientField(1.0),
                       H=monod, G=monod, J1=bump, J2=bump, mu=1.0, rho=0.5, h0=0.2)


def kernel_times(repeat):
    P = reference()
    g = build_grid(1.0, 0.05, 40)
    ops = build_operators(P, g)
    lo, hi = g.active_range(-10.0, 10.0)
    rng = np.random.default_rng(0)
    u, v = np.zeros(g.n), np.zeros(g.n)
    u[lo:hi + 1] = rng.uniform(0, 1, hi - lo + 1)
    v[lo:hi + 1] = rng.uniform(0, 1, hi - lo + 1)
    uo, vo = np.empty(g.n), np.empty(g.n)
    args = (ops.stencil1, ops.stencil2, P.d1, P.d2, P.p, P.q, ops.a_values, ops.b_values,
            *_coupling_args(P.H), *_coupling_args(P.G), g.dx, 0.01, uo, vo)
    kargs = _kernel_args(P.J1)
    rows = []
    for name, mod in (("cython", _core), ("python", _pycore)):
        if mod is None:
            continue
        te = min(timeit.repeat(lambda: mod.euler_fields(u, v, lo, hi, *args), number=repeat, repeat=3)) / repeat
        tb = min(timeit.repeat(lambda: mod.boundary_flux(u, lo, hi, -g.x_max, g.dx, 10.0, 1, *kargs),
                               number=repeat, repeat=3)) / repeat
        rows.append((name, te, tb))
    return hi - lo + 1, rows


def full_runs(horizon):
    here = os.path.dirname(os.path.abspath(__file__))
    out = []
    for backend in ("cython", "python"):
        env = dict(os.environ, FBEPI_BACKEND=backend, PYTHONPATH=here + os.pathsep + os.environ.get("PYTHONPATH", ""))
        res = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(horizon=horizon)], env=env,
                             capture_output=True, text=True, check=True)
        name, secs, h = res.stdout.split()
        out.append((backend, name, float(secs), float(h)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--horizon", type=float, default=50.0)
    args = ap.parse_args()

    n, rows = kernel_times(args.repeat)
    print(f"kernels on {n} active cells, best of 3 x {args.repeat}")
    print(f"{'backend':8s} {'euler_fields':>14s} {'boundary_flux':>14s}")
    for name, te, tb in rows:
        print(f"{name:8s} {te * 1e6:11.1f} us {tb * 1e6:11.1f} us")
    if len(rows) == 2:
        print(f"speedup  {rows[1][1] / rows[0][1]:13.1f}x {rows[1][2] / rows[0][2]:13.1f}x")

    print(f"\nfull run to t = {args.horizon:g} (h0 = 0.2, dx = 0.05)")
    runs = full_runs(args.horizon)
    for requested, loaded, secs, h in runs:
        print(f"{requested:8s} loaded {loaded:7s} {secs:8.2f} s  h(T) = {h:.12g}")


if __name__ == "__main__":
    main()

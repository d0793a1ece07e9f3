import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fbepi import _backend, _pycore
from fbepi.discretize import build_grid, build_operators
from fbepi.freeboundary import _coupling_args, _kernel_args
from fbepi.model import CoefficientField, KernelSpec, NonlinearitySpec

from conftest import reference_params

core = pytest.importorskip("fbepi._core", reason="compiled extension not built")


def _fields(n, rng, lo, hi):
    u = np.zeros(n)
    v = np.zeros(n)
    u[lo : hi + 1] = rng.uniform(0, 2, hi - lo + 1)
    v[lo : hi + 1] = rng.uniform(0, 2, hi - lo + 1)
    return u, v


CASES = [
    reference_params(),
    reference_params(p=-0.7, q=0.0, H=NonlinearitySpec("linear", 1.5)),
    reference_params(J1=KernelSpec("truncated-gaussian", 0.2, 0.8), G=NonlinearitySpec("linear", 0.3)),
]


def test_backend_selected():
    assert _backend.BACKEND == "cython"


@pytest.mark.parametrize("P", CASES)
def test_euler_kernels_agree(P):
    g = build_grid(1.0, 0.05, 8)
    ops = build_operators(P, g)
    rng = np.random.default_rng(3)
    lo, hi = g.active_range(-1.7, 2.3)
    u, v = _fields(g.n, rng, lo, hi)
    args = (ops.stencil1, ops.stencil2, P.d1, P.d2, P.p, P.q, ops.a_values, ops.b_values,
            *_coupling_args(P.H), *_coupling_args(P.G), g.dx, 0.01)
    outs = []
    for mod in (core, _pycore):
        uo, vo = np.empty(g.n), np.empty(g.n)
        clamp = mod.euler_fields(u, v, lo, hi, *args, uo, vo)
        outs.append((uo, vo, clamp))
    (u1, v1, c1), (u2, v2, c2) = outs
    assert np.allclose(u1, u2, rtol=0, atol=1e-12) and np.allclose(v1, v2, rtol=0, atol=1e-12)
    assert c1 == pytest.approx(c2, abs=1e-12)


def test_clamp_accounting_agrees():
    P = reference_params(p=0.0, q=0.0, a=CoefficientField(40.0))
    g = build_grid(1.0, 0.05, 8)
    ops = build_operators(P, g)
    lo, hi = g.active_range(-1.0, 1.0)
    u, v = _fields(g.n, np.random.default_rng(0), lo, hi)
    clamps = []
    for mod in (core, _pycore):
        uo, vo = np.empty(g.n), np.empty(g.n)
        clamps.append(mod.euler_fields(u, v, lo, hi, ops.stencil1, ops.stencil2, P.d1, P.d2, 0.0, 0.0,
                                       ops.a_values, ops.b_values, *_coupling_args(P.H),
                                       *_coupling_args(P.G), g.dx, 0.1, uo, vo))
        assert uo.min() >= 0
    assert clamps[0] > 0
    assert clamps[0] == pytest.approx(clamps[1], rel=1e-12)


@pytest.mark.parametrize("J", [KernelSpec("quartic-bump", 0.5, 1.0), KernelSpec("truncated-gaussian", 0.3, 1.2)])
@pytest.mark.parametrize("side, pos", [(1, 1.37), (-1, -1.12)])
def test_boundary_flux_agrees(J, side, pos):
    g = build_grid(1.0, 0.05, 8)
    lo, hi = g.active_range(-1.12, 1.37)
    u, _ = _fields(g.n, np.random.default_rng(5), lo, hi)
    a = core.boundary_flux(u, lo, hi, -g.x_max, g.dx, pos, side, *_kernel_args(J))
    b = _pycore.boundary_flux(u, lo, hi, -g.x_max, g.dx, pos, side, *_kernel_args(J))
    assert a == pytest.approx(b, rel=1e-12)


_RUN = """
import json
from fbepi import _backend
from fbepi.discretize import build_grid
from fbepi.freeboundary import run
from fbepi.model import InitialData
from conftest import reference_params
g = build_grid(0.5, 0.05, 20)
tr = run(reference_params(h0=g.h0), g, InitialData(), 10.0, 1.0, stop_on_classification=False)
print(json.dumps([_backend.BACKEND, tr.h, tr.g, tr.phi]))
"""


def test_full_run_matches_across_backends(tmp_path):
    here = os.path.dirname(__file__)
    results = {}
    for name in ("cython", "python"):
        env = dict(os.environ, FBEPI_BACKEND=name, PYTHONPATH=here)
        out = subprocess.run([sys.executable, "-c", _RUN], env=env, capture_output=True, text=True, check=True)
        backend, h, g, phi = json.loads(out.stdout)
        assert backend == name
        results[name] = np.array([h, g, phi])
    assert np.allclose(results["cython"], results["python"], rtol=1e-11, atol=1e-12)

import math
from dataclasses import replace

import numpy as np
import pytest

from fbepi.discretize import build_operators
from fbepi.errors import EigenError, GridError, NoRootError
from fbepi.model import CoefficientField, KernelSpec, NonlinearitySpec
from fbepi.spectral import (SupercriticalError, assemble, collatz_wielandt_bounds, critical_domain,
                            dense_principal_eigenvalue, diffusion_limit_probe, hadamard_derivative,
                            lambda_star, operator_R0, principal_eig_direct, principal_eig_resolvent,
                            rho_curve, spectral_grid, transport_bound)

from conftest import reference_params

LIN = NonlinearitySpec("linear", 0.5)
ZERO = NonlinearitySpec("linear", 0.0)


@pytest.fixture(scope="module")
def ref_op():
    P = reference_params()
    g = spectral_grid(0.05, 3.0, P)
    return P, g, assemble(P, g, 3.0)


def test_toy_two_by_two():
    eig = principal_eig_direct(np.array([[-1.0, 0.5], [0.5, -1.0]]))
    assert eig.lam == pytest.approx(-0.5, abs=1e-12)
    assert np.allclose(eig.phi, [1.0, 1.0])


def test_non_metzler_rejected():
    with pytest.raises(EigenError, match="Metzler"):
        principal_eig_direct(np.array([[-1.0, -0.5], [0.5, -1.0]]))


def test_assemble_structure(ref_op):
    P, g, op = ref_op
    n = op.n
    assert op.L.shape == (2 * n, 2 * n)
    assert np.allclose(op.L, op.L_J + op.L_T)
    assert np.allclose(op.L[:n, n:], 2.0 * np.eye(n))
    dec = assemble(replace(P, H=ZERO, G=ZERO), g, 3.0)
    assert not dec.L[:n, n:].any() and not dec.L[n:, :n].any()


def test_no_drift_operator_is_symmetric():
    P = reference_params(p=0.0, q=0.0)
    op = assemble(P, spectral_grid(0.05, 2.0, P), 2.0)
    assert np.allclose(op.L, op.L.T)


def test_domain_exceeds_window():
    P = reference_params()
    with pytest.raises(GridError, match="domain exceeds window"):
        assemble(P, spectral_grid(0.05, 2.0, P), 5.0)


def test_direct_matches_dense_oracle(ref_op):
    _, _, op = ref_op
    eig = principal_eig_direct(op)
    assert eig.lam == pytest.approx(dense_principal_eigenvalue(op), abs=1e-10)
    assert eig.residual < 1e-10
    assert eig.phi.min() > 0
    assert eig.pairing(eig.phi) == pytest.approx(1.0)


def test_decoupled_blocks_take_the_max():
    P = reference_params(H=ZERO, G=ZERO, b=CoefficientField(2.0))
    g = spectral_grid(0.05, 2.0, P)
    op = assemble(P, g, 2.0)
    n = op.n
    eig = principal_eig_direct(op)
    blocks = [np.linalg.eigvals(op.L[:n, :n]).real.max(), np.linalg.eigvals(op.L[n:, n:]).real.max()]
    assert eig.decoupled
    assert eig.lam == pytest.approx(max(blocks), abs=1e-10)


def test_rho_is_one_at_lambda_star(ref_op):
    _, _, op = ref_op
    lam = principal_eig_direct(op).lam
    assert rho_curve(op.L_T, op.L_J, lam) == pytest.approx(1.0, abs=1e-8)
    assert rho_curve(op.L_T, op.L_J, lam + 10) < rho_curve(op.L_T, op.L_J, lam)


def test_rho_below_transport_bound_errors(ref_op):
    _, _, op = ref_op
    s = np.linalg.eigvals(op.L_T).real.max()
    with pytest.raises(EigenError, match="spectral bound"):
        rho_curve(op.L_T, op.L_J, s - 0.5)


@pytest.mark.parametrize("method", ["brent", "bisect"])
def test_resolvent_route_agrees(ref_op, method):
    _, _, op = ref_op
    a = principal_eig_direct(op)
    b = principal_eig_resolvent(op, method=method)
    assert b.lam == pytest.approx(a.lam, abs=1e-9)
    assert np.allclose(a.phi, b.phi, atol=1e-6)


def test_resolvent_bad_bracket(ref_op):
    _, _, op = ref_op
    lam = principal_eig_direct(op).lam
    with pytest.raises(NoRootError):
        principal_eig_resolvent(op, bracket=(lam + 1, lam + 2))


def test_collatz_wielandt(ref_op):
    _, _, op = ref_op
    eig = principal_eig_direct(op)
    lo, hi = collatz_wielandt_bounds(op, eig.phi)
    assert lo == pytest.approx(eig.lam, abs=1e-9) and hi == pytest.approx(eig.lam, abs=1e-9)
    lo, hi = collatz_wielandt_bounds(op, np.ones(op.L.shape[0]))
    assert lo <= eig.lam <= hi
    with pytest.raises(ValueError, match="must be positive"):
        collatz_wielandt_bounds(op, np.zeros(op.L.shape[0]))


def test_critical_domain_reference():
    P = reference_params()
    g = spectral_grid(0.05, 3.0, P)
    cd = critical_domain(P, g, (0.05, 3.0))
    assert cd.found
    dx = g.dx
    assert lambda_star(P, g, cd.z_star - dx) < 0 <= lambda_star(P, g, cd.z_star)
    assert lambda_star(P, g, cd.z_star + dx) > 0


def test_critical_domain_none_when_R0_small():
    P = reference_params(H=LIN, G=LIN)
    g = spectral_grid(0.05, 4.0, P)
    cd = critical_domain(P, g, (0.05, 4.0))
    assert not cd.found and cd.message.startswith("none")


def test_critical_domain_supercritical_start():
    P = reference_params()
    g = spectral_grid(0.05, 3.0, P)
    with pytest.raises(SupercriticalError, match="already supercritical"):
        critical_domain(P, g, (2.0, 3.0))


@pytest.mark.parametrize("j", [1, 2])
def test_hadamard_matches_finite_difference(j):
    P = reference_params(d1=0.7, d2=1.9, p=-0.3, q=0.4)
    g = spectral_grid(0.05, 2.0, P)
    hd = hadamard_derivative(P, g, 2.0, j)
    d = getattr(P, f"d{j}")
    h = 1e-5 * d
    up = lambda_star(replace(P, **{f"d{j}": d + h}), g, 2.0)
    dn = lambda_star(replace(P, **{f"d{j}": d - h}), g, 2.0)
    assert hd == pytest.approx((up - dn) / (2 * h), rel=1e-4)


def test_hadamard_decoupled_symmetric_is_rayleigh():
    P = reference_params(p=0.0, q=0.0, H=ZERO, G=ZERO, b=CoefficientField(2.0))
    g = spectral_grid(0.05, 2.0, P)
    ops = build_operators(P, g)
    eig = principal_eig_direct(assemble(P, g, 2.0, ops))
    idx = g.interior(g.snap(2.0))
    W = ops.W1[np.ix_(idx, idx)]
    phi = eig.phi1
    rayleigh = phi @ (W @ phi - phi) / (phi @ phi)
    assert hadamard_derivative(P, g, 2.0, 1, ops, eig) == pytest.approx(rayleigh, rel=1e-9)
    assert hadamard_derivative(P, g, 2.0, 2, ops, eig) == pytest.approx(0.0, abs=1e-12)


def test_hadamard_vanishes_for_narrow_kernels_without_drift():
    # W ~ I + (sigma^2 / 2) d^2/dx^2, so the derivative shrinks like sigma^2
    vals = []
    for sigma in (0.1, 0.05, 0.025):
        J = KernelSpec("truncated-gaussian", sigma, 4 * sigma)
        P = reference_params(J1=J, J2=J, p=0.0, q=0.0)
        vals.append(abs(hadamard_derivative(P, spectral_grid(0.0125, 1.0, P), 1.0, 1)))
    assert vals[-1] < 5e-4
    for wide, narrow in zip(vals, vals[1:]):
        assert wide / narrow == pytest.approx(4.0, rel=0.1)


def test_operator_R0():
    P = reference_params(H=NonlinearitySpec("linear", 1e-3), G=NonlinearitySpec("linear", 1e-3))
    g = spectral_grid(0.05, 1.0, P)
    assert operator_R0(P, g, 0.3) < 1
    bad = reference_params(H=NonlinearitySpec("monod", 5.0), G=NonlinearitySpec("monod", 5.0),
                           a=CoefficientField(0.2), b=CoefficientField(0.2), p=0.0, q=0.0)
    with pytest.raises(EigenError, match="transport part not invertible at 0"):
        operator_R0(bad, g, 0.5)


def test_transport_bound_dominates_spectral_bound(ref_op):
    _, _, op = ref_op
    assert transport_bound(op) >= np.linalg.eigvals(op.L_T).real.max() - 1e-12


def test_small_d1_limit():
    P = reference_params(p=0.0, q=0.0)
    g = spectral_grid(0.05, 2.0, P)
    lam0 = lambda_star(replace(P, d1=0.0), g, 2.0)
    rows = diffusion_limit_probe(P, g, 2.0, [1e-2, 1e-3, 1e-4, 1e-5])
    gaps = [abs(r.lam - lam0) for r in rows]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 1e-4


def test_diffusion_probe_is_continuous_and_hinted():
    P = reference_params()
    g = spectral_grid(0.05, 2.0, P)
    rows = diffusion_limit_probe(P, g, 2.0, [1.0, 1.0 + 1e-6])
    assert abs(rows[0].lam - rows[1].lam) < 1e-5
    assert rows[0].hint == "plateau" and rows[0].r1 < 1


def test_lambda_star_monotone_in_Z():
    P = reference_params()
    g = spectral_grid(0.05, 3.0, P)
    lams = [lambda_star(P, g, Z) for Z in (0.5, 1.0, 2.0, 3.0)]
    assert all(b > a for a, b in zip(lams, lams[1:]))
    assert math.isfinite(lams[-1])

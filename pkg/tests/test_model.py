import math

import numpy as np
import pytest
from scipy.integrate import quad

from fbepi.errors import ParameterError
from fbepi.model import (CoefficientField, InitialData, KernelSpec, NonlinearitySpec,
                         coercivity_constant, kernel_tail, scalar_R0, validate)

from conftest import reference_params


@pytest.mark.parametrize("J", [KernelSpec("quartic-bump", 0.5, 1.0), KernelSpec("quartic-bump", 0.5, 2.5),
                               KernelSpec("truncated-gaussian", 0.25, 1.0)])
def test_kernel_has_unit_mass(J):
    mass, _ = quad(J, -J.support_radius, J.support_radius)
    assert mass == pytest.approx(1.0, abs=1e-12)


def test_bump_peak():
    assert KernelSpec("quartic-bump", 0.5, 2.0).peak == pytest.approx(15 / 32)


@pytest.mark.parametrize("J", [KernelSpec("quartic-bump", 0.5, 1.0), KernelSpec("truncated-gaussian", 0.2, 1.0)])
@pytest.mark.parametrize("d", [-1.5, -0.7, 0.0, 0.3, 0.99, 1.0, 4.0])
def test_tail_matches_quadrature(J, d):
    lo = max(d, -J.support_radius)
    expect = quad(J, lo, J.support_radius)[0] if lo < J.support_radius else 0.0
    assert kernel_tail(J, d) == pytest.approx(expect, abs=1e-12)


def test_tail_endpoints():
    J = KernelSpec()
    assert kernel_tail(J, 0.0) == pytest.approx(0.5)
    assert kernel_tail(J, J.support_radius) == 0.0
    assert kernel_tail(J, -J.support_radius) == 1.0


def test_monod_and_linear_couplings():
    m = NonlinearitySpec("monod", 2.0, 1.0)
    assert m(1.0) == pytest.approx(1.0)
    assert m.derivative(0.0) == pytest.approx(2.0)
    assert m.sup_value == 2.0
    lin = NonlinearitySpec("linear", 0.5)
    assert lin(4.0) == 2.0 and math.isinf(lin.sup_value)


def test_coefficient_field_bounds():
    f = CoefficientField(1.0, 0.5, 2.0)
    x = np.linspace(-3, 3, 20001)
    assert f.sup() == pytest.approx(1.5)
    assert f.inf() == pytest.approx(0.5)
    # on [-Z, Z] with k Z < pi the minimum sits at the endpoints
    assert f.inf(1.0) == pytest.approx(1.0 + 0.5 * math.cos(2.0))
    assert f.inf(1.0) <= f(x[np.abs(x) <= 1.0]).min()
    assert not f.is_constant
    assert CoefficientField(2.0, 1.0, 0.0).value == 3.0


def test_validate_reference_is_clean(ref):
    report = validate(ref, InitialData())
    assert report.ok
    assert not report.warnings


@pytest.mark.parametrize("change, name", [
    (dict(mu=0.0), "mu"),
    (dict(rho=-1.0), "rho"),
    (dict(d1=-0.1), "d1"),
    (dict(a=CoefficientField(1.0, 2.0, 0.0)), "a.positive"),
    (dict(b=CoefficientField(0.5, 1.0, 3.0)), "b.positive"),
    (dict(J1=KernelSpec("quartic-bump", -1.0, 1.0)), "J1.width"),
    (dict(J2=KernelSpec("truncated-gaussian", 0.5, 1.0)), "J2"),
    (dict(H=NonlinearitySpec("cubic", 1.0)), "H.family"),
])
def test_validate_flags_bad_parameters(change, name):
    report = validate(reference_params(**change))
    assert not report.ok
    assert any(c.name.startswith(name) for c in report.failures), str(report)
    with pytest.raises(ParameterError):
        report.raise_if_failed()


def test_linear_couplings_give_advisory_only():
    lin = NonlinearitySpec("linear", 3.0)
    report = validate(reference_params(H=lin, G=lin))
    assert report.ok
    assert [c.name for c in report.warnings] == ["GH.dissipative"]


def test_scalar_R0_and_coercivity(ref):
    assert scalar_R0(ref) == pytest.approx(4.0)
    assert coercivity_constant(ref) == pytest.approx(2.0 + 2.0)
    with pytest.raises(ParameterError):
        scalar_R0(reference_params(a=CoefficientField(1.0, 0.5, 1.0)))


def test_initial_profiles_vanish_at_ends():
    x = np.linspace(-1, 1, 11)
    for fam in ("cosine-bump", "constant-plateau"):
        u, v = InitialData(fam, 2.0, 1.0).profiles(x, 1.0)
        assert u[0] == u[-1] == v[0] == v[-1] == 0.0
        assert np.all(u[1:-1] > 0) and u.max() == pytest.approx(2.0)
    u2, _ = InitialData().scaled(3.0).profiles(x, 1.0)
    assert u2.max() == pytest.approx(3.0)

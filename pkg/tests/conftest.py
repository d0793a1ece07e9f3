import numpy as np
import pytest

from fbepi.model import CoefficientField, InitialData, KernelSpec, ModelParams, NonlinearitySpec

BUMP = KernelSpec("quartic-bump", 0.5, 1.0)
MONOD2 = NonlinearitySpec("monod", 2.0, 1.0)


def reference_params(**changes) -> ModelParams:
    base = dict(d1=1.0, d2=1.0, p=0.2, q=0.2, a=CoefficientField(1.0), b=CoefficientField(1.0),
                H=MONOD2, G=MONOD2, J1=BUMP, J2=BUMP, mu=1.0, rho=0.5, h0=1.0)
    base.update(changes)
    return ModelParams(**base)


def random_suite(n=20, seed=7):
    """Randomized cases (params, Z) used by the route and sign-relation checks.

    d in [0.1, 5], p, q in [-1, 1], coupling slopes in [0, 3], Z in [1, 6];
    removal rates in [0.2, 2] so that both signs of lambda* show up.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n):
        d1, d2 = rng.uniform(0.1, 5.0, 2)
        p, q = rng.uniform(-1.0, 1.0, 2)
        c1, c2 = rng.uniform(0.0, 3.0, 2)
        Z = rng.uniform(1.0, 6.0)
        a, b = rng.uniform(0.2, 2.0, 2)
        P = reference_params(d1=d1, d2=d2, p=p, q=q, a=CoefficientField(a), b=CoefficientField(b),
                             H=NonlinearitySpec("monod", c1, 1.0), G=NonlinearitySpec("monod", c2, 1.0))
        cases.append((P, float(Z)))
    return cases


@pytest.fixture
def ref():
    return reference_params()


@pytest.fixture
def bump_ic():
    return InitialData()


REFERENCE_INI = """\
[model]
d1 = 1.0
d2 = 1.0
p = 0.2
q = 0.2
mu = 1.0
rho = 0.5
h0 = 0.2
a_base = 1.0
b_base = 1.0
H_slope = 2.0
G_slope = 2.0
J1_radius = 1.0
J2_radius = 1.0

[grid]
dx = 0.05
"""


@pytest.fixture
def ini_text():
    return REFERENCE_INI


@pytest.fixture
def ini_file(tmp_path, ini_text):
    path = tmp_path / "run.ini"
    path.write_text(ini_text)
    return path


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)

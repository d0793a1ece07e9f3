"""Parameter objects for the two-species nonlocal advection-reaction system.

Every coefficient of the model lives here: dispersal rates ``d1, d2``, drift
speeds ``p, q``, removal fields ``a(x), b(x)``, the couplings ``H`` and ``G``,
the dispersal kernels ``J1, J2``, and the free-boundary data ``mu, rho, h0``.
All objects are frozen dataclasses; build variants with
:func:`dataclasses.replace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ParameterError

KERNEL_FAMILIES = ("quartic-bump", "truncated-gaussian")
NONLINEARITY_FAMILIES = ("linear", "monod")
INITIAL_FAMILIES = ("cosine-bump", "constant-plateau")

# Smallest R/sigma accepted for the truncated Gaussian; the jump at the
# cut-off is then exp(-8) ~ 3e-4 of the peak.
GAUSSIAN_MIN_RADIUS_RATIO = 4.0


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric dispersal kernel with compact support ``[-R, R]``.

    ``width`` is the Gaussian standard deviation; the quartic bump is fully
    determined by its support radius and ignores it.
    """

    family: str = "quartic-bump"
    width: float = 0.5
    support_radius: float = 1.0

    def _gauss_mass(self) -> float:
        return float(erf(self.support_radius / (self.width * math.sqrt(2.0))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        R = self.support_radius
        inside = np.abs(x) <= R
        if self.family == "quartic-bump":
            t = x / R
            val = (15.0 / (16.0 * R)) * (1.0 - t * t) ** 2
        elif self.family == "truncated-gaussian":
            s = self.width
            val = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2.0 * math.pi) * self._gauss_mass())
        else:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        return np.where(inside, val, 0.0)

    @property
    def peak(self) -> float:
        """sup |J| = J(0)."""
        return float(self(0.0))

    def tail(self, d):
        """Mass beyond distance ``d``: the integral of J over ``[d, inf)``."""
        d = np.asarray(d, dtype=float)
        R = self.support_radius
        dc = np.clip(d, -R, R)
        if self.family == "quartic-bump":
            t = dc / R
            out = 0.5 - (15.0 / 16.0) * (t - 2.0 * t**3 / 3.0 + t**5 / 5.0)
        else:
            c = self.width * math.sqrt(2.0)
            m = self._gauss_mass()
            out = 0.5 * (m - erf(dc / c)) / m
        out = np.where(d >= R, 0.0, np.where(d <= -R, 1.0, out))
        return np.clip(out, 0.0, 1.0)


def kernel_tail(kernel: KernelSpec, distance):
    """Closed-form tail ``T(d) = int_d^inf J(z) dz``; scalar in, float out."""
    out = kernel.tail(distance)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class NonlinearitySpec:
    """Increasing coupling ``F`` with ``F(0) = 0`` and ``F'(0) = slope_at_zero``."""

    family: str = "monod"
    slope_at_zero: float = 1.0
    saturation: float = 1.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        c = self.slope_at_zero
        if self.family == "linear":
            return c * z
        if self.family == "monod":
            return c * z / (1.0 + z / self.saturation)
        raise ParameterError(f"unknown nonlinearity family {self.family!r}")

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        c = self.slope_at_zero
        if self.family == "linear":
            return np.full_like(z, c)
        return c / (1.0 + z / self.saturation) ** 2

    @property
    def derivative_at_zero(self) -> float:
        return float(self.slope_at_zero)

    @property
    def sup_value(self) -> float:
        """Limit of F at infinity (inf for the linear family)."""
        if self.family == "monod":
            return self.slope_at_zero * self.saturation
        return math.inf


@dataclass(frozen=True)
class CoefficientField:
    """Removal rate ``x -> base + amplitude * cos(wavenumber * x)``."""

    base: float = 1.0
    amplitude: float = 0.0
    wavenumber: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.base + self.amplitude * np.cos(self.wavenumber * x)

    @property
    def is_constant(self) -> bool:
        return self.amplitude == 0.0 or self.wavenumber == 0.0

    @property
    def value(self) -> float:
        """The constant value; only meaningful when :attr:`is_constant`."""
        return self.base + (self.amplitude if self.wavenumber == 0.0 else 0.0)

    def _cos_range(self, Z: float | None):
        # range of cos(k x) over [-Z, Z] (all of R when Z is None)
        if self.wavenumber == 0.0:
            return 1.0, 1.0
        if Z is None:
            return -1.0, 1.0
        kz = abs(self.wavenumber) * Z
        return (math.cos(kz) if kz < math.pi else -1.0), 1.0

    def sup(self, Z: float | None = None) -> float:
        lo, hi = self._cos_range(Z)
        A = self.amplitude
        return self.base + (A * hi if A >= 0 else A * lo)

    def inf(self, Z: float | None = None) -> float:
        lo, hi = self._cos_range(Z)
        A = self.amplitude
        return self.base + (A * lo if A >= 0 else A * hi)


@dataclass(frozen=True)
class ModelParams:
    d1: float = 1.0
    d2: float = 1.0
    p: float = 0.0
    q: float = 0.0
    a: CoefficientField = field(default_factory=CoefficientField)
    b: CoefficientField = field(default_factory=CoefficientField)
    H: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    G: NonlinearitySpec = field(default_factory=NonlinearitySpec)
    J1: KernelSpec = field(default_factory=KernelSpec)
    J2: KernelSpec = field(default_factory=KernelSpec)
    mu: float = 1.0
    rho: float = 0.0
    h0: float = 1.0

    @property
    def constant_coefficients(self) -> bool:
        return self.a.is_constant and self.b.is_constant


@dataclass(frozen=True)
class InitialData:
    """Closed-form initial profiles on ``[-h0, h0]``.

    ``cosine-bump`` is ``A cos(pi x / (2 h0))``; ``constant-plateau`` is the
    constant ``A`` on the open interval and 0 at the endpoints.
    """

    family: str = "cosine-bump"
    u_amplitude: float = 1.0
    v_amplitude: float = 1.0

    def profiles(self, x, h0: float):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) < h0 * (1.0 - 1e-12)
        if self.family == "cosine-bump":
            shape = np.cos(0.5 * math.pi * x / h0)
        elif self.family == "constant-plateau":
            shape = np.ones_like(x)
        else:
            raise ParameterError(f"unknown initial-data family {self.family!r}")
        shape = np.where(inside, np.maximum(shape, 0.0), 0.0)
        return self.u_amplitude * shape, self.v_amplitude * shape

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(self.family, factor * self.u_amplitude, factor * self.v_amplitude)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str = ""
    sample: float | None = None
    required: bool = True


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    @property
    def failures(self):
        return [c for c in self.checks if c.required and not c.passed]

    @property
    def warnings(self):
        return [c for c in self.checks if not c.required and not c.passed]

    def raise_if_failed(self):
        if not self.ok:
            msgs = "; ".join(f"{c.name}: {c.message}" for c in self.failures)
            raise ParameterError(msgs)

    def __str__(self):
        lines = []
        for c in self.checks:
            tag = "pass" if c.passed else ("FAIL" if c.required else "warn")
            extra = f" ({c.message})" if c.message and not c.passed else ""
            if not c.passed and c.sample is not None:
                extra += f" at {c.sample:g}"
            lines.append(f"[{tag}] {c.name}{extra}")
        return "\n".join(lines)


_SAMPLE_Z = np.concatenate(([0.0], np.logspace(-8, 3, 221)))


def _kernel_checks(name: str, J: KernelSpec):
    out = []
    if J.family not in KERNEL_FAMILIES:
        return [Check(f"{name}.family", False, f"unknown family {J.family!r}")]
    if not J.width > 0:
        return [Check(f"{name}.width", False, "width must be positive", J.width)]
    if not J.support_radius > 0:
        return [Check(f"{name}.support_radius", False, "support radius must be positive", J.support_radius)]
    out.append(Check(f"{name}.width", True))
    out.append(Check(f"{name}.support_radius", True))
    xs = np.linspace(-1.5 * J.support_radius, 1.5 * J.support_radius, 601)
    vals = J(xs)
    bad = np.flatnonzero(vals < 0)
    out.append(Check(f"{name}.nonnegative", bad.size == 0, "kernel takes negative values",
                     float(xs[bad[0]]) if bad.size else None))
    asym = np.abs(vals - J(-xs))
    k = int(np.argmax(asym))
    out.append(Check(f"{name}.even", asym[k] == 0.0, "kernel not even", float(xs[k])))
    out.append(Check(f"{name}.positive_at_zero", J.peak > 0, "J(0) must be positive", 0.0))
    if J.family == "truncated-gaussian":
        ok = J.support_radius >= GAUSSIAN_MIN_RADIUS_RATIO * J.width
        out.append(Check(f"{name}.c1_cutoff", ok,
                         f"support radius must be >= {GAUSSIAN_MIN_RADIUS_RATIO:g} widths",
                         J.support_radius))
    return out


def _nonlinearity_checks(name: str, F: NonlinearitySpec):
    if F.family not in NONLINEARITY_FAMILIES:
        return [Check(f"{name}.family", False, f"unknown family {F.family!r}")]
    out = []
    if not F.slope_at_zero > 0:
        return [Check(f"{name}.slope_at_zero", False, "slope at zero must be positive", F.slope_at_zero)]
    if F.family == "monod" and not F.saturation > 0:
        return [Check(f"{name}.saturation", False, "saturation must be positive", F.saturation)]
    z = _SAMPLE_Z
    vals = F(z)
    out.append(Check(f"{name}.zero_at_zero", vals[0] == 0.0, "F(0) must be 0", 0.0))
    bad = np.flatnonzero(vals[1:] <= 0)
    out.append(Check(f"{name}.positive", bad.size == 0, "F(z) must be positive for z > 0",
                     float(z[1 + bad[0]]) if bad.size else None))
    out.append(Check(f"{name}.derivative_at_zero", float(F.derivative(0.0)) == F.slope_at_zero,
                     "closed-form F'(0) mismatch"))
    dec = np.flatnonzero(np.diff(vals) < 0)
    out.append(Check(f"{name}.monotone", dec.size == 0, "F not increasing",
                     float(z[dec[0]]) if dec.size else None))
    if F.family == "monod":
        sup = np.flatnonzero(vals > F.slope_at_zero * z)
        out.append(Check(f"{name}.sublinear", sup.size == 0, "F(z) exceeds F'(0) z",
                         float(z[sup[0]]) if sup.size else None))
    return out


def _field_checks(name: str, f: CoefficientField):
    ok = f.base > abs(f.amplitude)
    return [Check(f"{name}.positive", bool(ok), "coefficient not strictly positive", f.base)]


def validate(params: ModelParams, initial: InitialData | None = None) -> ValidationReport:
    """Check every standing assumption; failures are reported, not raised."""
    checks = []
    for nm in ("d1", "d2"):
        val = getattr(params, nm)
        checks.append(Check(nm, val >= 0, "dispersal rate must be nonnegative", val))
    checks.append(Check("mu", params.mu > 0, "free-boundary rate must be positive", params.mu))
    checks.append(Check("rho", params.rho >= 0, "rho must be nonnegative", params.rho))
    checks.append(Check("h0", params.h0 > 0, "initial half-width must be positive", params.h0))
    for nm in ("p", "q"):
        val = getattr(params, nm)
        checks.append(Check(nm, math.isfinite(val), "drift speed must be finite", val))
    checks += _kernel_checks("J1", params.J1)
    checks += _kernel_checks("J2", params.J2)
    checks += _nonlinearity_checks("H", params.H)
    checks += _nonlinearity_checks("G", params.G)
    checks += _field_checks("a", params.a)
    checks += _field_checks("b", params.b)
    field_ok = all(c.passed for c in checks if c.name in ("a.positive", "b.positive"))
    coupl_ok = all(c.passed for c in checks if c.name.startswith(("H.", "G.")))
    if field_ok and coupl_ok:
        # Large-z dissipativity G(H(z)/a) < b z; advisory because it fails for
        # purely linear couplings with R0 > 1, which are still valid linear tests.
        z = 1e6 * max(params.H.saturation, params.G.saturation, 1.0)
        lhs = float(params.G(params.H(z) / params.a.inf()))
        ok = lhs < params.b.inf() * z
        checks.append(Check("GH.dissipative", ok, "G(H(z)/a) >= b z for large z", z, required=False))
    if initial is not None:
        ok = initial.family in INITIAL_FAMILIES
        checks.append(Check("IC.family", ok, f"unknown family {initial.family!r}"))
        if ok:
            pos = initial.u_amplitude > 0 and initial.v_amplitude > 0
            checks.append(Check("IC.positive", pos, "initial amplitudes must be positive"))
    return ValidationReport(tuple(checks))


def coercivity_constant(params: ModelParams, Z: float | None = None) -> float:
    """Bound K above which the shifted transport part is coercive on [-Z, Z].

    K = max(M1, M2) + (|H'(0)| + |G'(0)|)/2 with M1 = sup(d1 + a),
    M2 = sup(d2 + b).
    """
    M1 = params.d1 + params.a.sup(Z)
    M2 = params.d2 + params.b.sup(Z)
    C1 = abs(params.H.derivative_at_zero)
    C2 = abs(params.G.derivative_at_zero)
    return max(M1 + C1 / 2 + C2 / 2, M2 + C1 / 2 + C2 / 2)


def scalar_R0(params: ModelParams) -> float:
    """H'(0) G'(0) / (a b) for spatially constant removal rates."""
    if not params.constant_coefficients:
        raise ParameterError("scalar R0 needs constant a and b; use spectral.operator_R0")
    return params.H.derivative_at_zero * params.G.derivative_at_zero / (params.a.value * params.b.value)

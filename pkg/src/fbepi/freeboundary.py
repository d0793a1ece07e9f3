"""Explicit time stepping of the moving-boundary system and trajectory classification.

Fields live on the fixed lattice of a :class:`~fbepi.discretize.Grid`; a node
is active iff ``g < x_i < h``. Each step advances the fields with explicit
Euler on the active nodes and moves the boundaries by the kernel mass that
leaks past them::

    h' =  mu * sum_i dx (u_i T1(h - x_i) + rho v_i T2(h - x_i))
    g' = -mu * sum_i dx (u_i T1(x_i - g) + rho v_i T2(x_i - g))

Nodes swept over by a boundary enter the active set with value 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .discretize import DiscreteOperators, Grid, build_operators
from .errors import StepError, WindowExhausted
from .model import InitialData, KernelSpec, ModelParams, NonlinearitySpec

_KFAM = {"quartic-bump": 0, "truncated-gaussian": 1}
_NFAM = {"linear": 0, "monod": 1}

VANISHING = "vanishing"
SPREADING = "spreading"
UNDECIDED = "undecided"


def dt_max(params: ModelParams, dx: float) -> float:
    """Largest explicit step that keeps the update positivity preserving."""
    drift = max(abs(params.p), abs(params.q), 1e-12)
    rates = (params.d1 + params.d2 + params.a.sup() + params.b.sup()
             + params.H.derivative_at_zero + params.G.derivative_at_zero)
    return 0.4 * min(dx / drift, 1.0 / rates)


def _kernel_args(J: KernelSpec):
    mass = J._gauss_mass() if J.family == "truncated-gaussian" else 1.0
    return _KFAM[J.family], J.support_radius, J.width, mass


def _coupling_args(F: NonlinearitySpec):
    return _NFAM[F.family], F.slope_at_zero, F.saturation


@dataclass
class SimState:
    t: float
    g: float
    h: float
    u: np.ndarray  # full-lattice arrays, zero off the active nodes
    v: np.ndarray
    clamp: float = 0.0  # cumulative magnitude clipped to keep fields >= 0
    steps: int = 0

    def copy(self) -> "SimState":
        return replace(self, u=self.u.copy(), v=self.v.copy())


def initial_state(grid: Grid, initial: InitialData) -> SimState:
    u, v = initial.profiles(grid.x, grid.h0)
    lo, hi = grid.active_range(-grid.h0, grid.h0)
    mask = np.zeros(grid.n, dtype=bool)
    mask[lo : hi + 1] = True
    u = np.ascontiguousarray(np.where(mask, u, 0.0))
    v = np.ascontiguousarray(np.where(mask, v, 0.0))
    return SimState(0.0, -grid.h0, grid.h0, u, v)


def boundary_speeds(state: SimState, params: ModelParams, grid: Grid) -> tuple[float, float]:
    """``(h', g')`` for the current fields and boundary positions."""
    if params.mu == 0:
        return 0.0, 0.0
    lo, hi = grid.active_range(state.g, state.h)
    x0 = -grid.x_max
    k1, k2 = _kernel_args(params.J1), _kernel_args(params.J2)
    right = _backend.boundary_flux(state.u, lo, hi, x0, grid.dx, state.h, 1, *k1)
    left = _backend.boundary_flux(state.u, lo, hi, x0, grid.dx, state.g, -1, *k1)
    if params.rho:
        right += params.rho * _backend.boundary_flux(state.v, lo, hi, x0, grid.dx, state.h, 1, *k2)
        left += params.rho * _backend.boundary_flux(state.v, lo, hi, x0, grid.dx, state.g, -1, *k2)
    return params.mu * right, -params.mu * left


def advance_fields(u, v, lo, hi, params: ModelParams, ops: DiscreteOperators, dt: float):
    """Euler update of both fields on nodes ``lo..hi``; returns (u, v, clamp)."""
    u_out = np.empty_like(u)
    v_out = np.empty_like(v)
    clamp = _backend.euler_fields(
        u, v, lo, hi, ops.stencil1, ops.stencil2,
        params.d1, params.d2, params.p, params.q, ops.a_values, ops.b_values,
        *_coupling_args(params.H), *_coupling_args(params.G),
        ops.grid.dx, dt, u_out, v_out,
    )
    return u_out, v_out, clamp


def step(state: SimState, params: ModelParams, ops: DiscreteOperators, dt: float) -> SimState:
    """One explicit Euler step of fields and boundaries."""
    grid = ops.grid
    if dt > dt_max(params, grid.dx) * (1 + 1e-12):
        raise StepError(f"dt too large: {dt:g} > {dt_max(params, grid.dx):g}")
    lo, hi = grid.active_range(state.g, state.h)
    hdot, gdot = boundary_speeds(state, params, grid)
    u, v, clamp = advance_fields(state.u, state.v, lo, hi, params, ops, dt)
    h = state.h + dt * hdot
    g = state.g + dt * gdot
    if h >= grid.x_max - grid.dx or g <= -grid.x_max + grid.dx:
        raise WindowExhausted(f"window exhausted at t={state.t + dt:g}: [g, h] = [{g:.4g}, {h:.4g}], "
                              f"window half-width {grid.x_max:g}")
    return SimState(state.t + dt, g, h, u, v, state.clamp + clamp, state.steps + 1)


def lyapunov_mass(state: SimState, grid: Grid) -> float:
    """Trapezoid integral of ``u + v`` over ``[g, h]`` with zero boundary values."""
    lo, hi = grid.active_range(state.g, state.h)
    if hi < lo:
        return 0.0
    f = state.u[lo : hi + 1] + state.v[lo : hi + 1]
    inner = grid.dx * (f.sum() - 0.5 * (f[0] + f[-1]))
    ends = 0.5 * (grid.x[lo] - state.g) * f[0] + 0.5 * (state.h - grid.x[hi]) * f[-1]
    return float(inner + ends)


@dataclass(frozen=True)
class ClassifierConfig:
    vanish_density: float = 1e-7
    vanish_speed: float = 1e-9
    spread_safety: float = 1.25
    spread_length_factor: float = 20.0  # fallback length, in units of h0
    spread_density_fraction: float = 0.5


def classify(state: SimState, params: ModelParams, grid: Grid, config: ClassifierConfig = ClassifierConfig(),
             z_star: float | None = None, coexistence: tuple[float, float] | None = None,
             speeds: tuple[float, float] | None = None) -> tuple[str, str]:
    """Return ``(label, evidence)`` for the current state."""
    sup = float(state.u.max() + state.v.max())
    hdot, gdot = speeds if speeds is not None else boundary_speeds(state, params, grid)
    speed = hdot + abs(gdot)
    if sup < config.vanish_density and speed < config.vanish_speed:
        return VANISHING, f"sup(u)+sup(v)={sup:.3e} < {config.vanish_density:g}, |h'|+|g'|={speed:.3e}"
    width = state.h - state.g
    if z_star is not None and math.isfinite(z_star):
        length, rule = 2 * z_star * config.spread_safety, "2*Z*safety"
    else:
        length, rule = config.spread_length_factor * params.h0, "L_spread"
    if width > length:
        if coexistence is None:
            return SPREADING, f"h-g={width:.4g} > {rule}={length:.4g}"
        mid = grid.index(0.5 * (state.g + state.h))
        dens = min(state.u[mid], state.v[mid])
        need = config.spread_density_fraction * min(coexistence)
        if dens >= need:
            return SPREADING, f"h-g={width:.4g} > {rule}={length:.4g}, mid density {dens:.4g} >= {need:.4g}"
    return UNDECIDED, ""


@dataclass
class SimTrace:
    t: list = field(default_factory=list)
    g: list = field(default_factory=list)
    h: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    sup_u: list = field(default_factory=list)
    sup_v: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # (t, u, v) on the full lattice
    classification: str = UNDECIDED
    evidence: str = ""
    final: SimState | None = None
    dt: float = math.nan
    x: np.ndarray | None = None

    def record(self, state: SimState, grid: Grid, snapshot: bool = False):
        self.t.append(state.t)
        self.g.append(state.g)
        self.h.append(state.h)
        self.phi.append(lyapunov_mass(state, grid))
        self.sup_u.append(float(state.u.max()))
        self.sup_v.append(float(state.v.max()))
        if snapshot:
            self.snapshots.append((state.t, state.u.copy(), state.v.copy()))

    def rows(self):
        return list(zip(self.t, self.g, self.h, self.phi, self.sup_u, self.sup_v))


def _steps_for(horizon: float, dt: float) -> tuple[int, float]:
    if horizon <= 0:
        return 0, dt
    n = max(int(math.ceil(horizon / dt - 1e-9)), 1)
    return n, horizon / n


def run(params: ModelParams, grid: Grid, initial: InitialData, horizon: float, sample_every: float = 1.0,
        dt: float | None = None, ops: DiscreteOperators | None = None,
        classifier: ClassifierConfig = ClassifierConfig(), z_star: float | None = None,
        coexistence: tuple[float, float] | None = None, stop_on_classification: bool = True,
        snapshots: bool = False, state: SimState | None = None) -> SimTrace:
    """Integrate to ``horizon`` or until the trajectory is classified."""
    if ops is None:
        ops = build_operators(params, grid)
    limit = dt_max(params, grid.dx)
    dt = limit if dt is None else dt
    if dt > limit * (1 + 1e-12):
        raise StepError(f"dt too large: {dt:g} > {limit:g}")
    n, dt = _steps_for(horizon, dt)
    stride = max(int(round(sample_every / dt)), 1)
    state = initial_state(grid, initial) if state is None else state
    trace = SimTrace(dt=dt, x=grid.x)
    trace.record(state, grid, snapshots)
    for k in range(1, n + 1):
        state = step(state, params, ops, dt)
        if k % stride == 0 or k == n:
            trace.record(state, grid, snapshots)
            label, why = classify(state, params, grid, classifier, z_star, coexistence)
            trace.classification, trace.evidence = label, why
            if stop_on_classification and label != UNDECIDED:
                break
    trace.final = state
    return trace


@dataclass
class ComparisonReport:
    ok: bool
    samples: int
    violations: list  # (t, quantity, amount)
    max_field_gap: float

    def __str__(self):
        if self.ok:
            return f"ordering holds at all {self.samples} samples"
        t, what, amount = self.violations[0]
        return f"{len(self.violations)} violations; first at t={t:g}: {what} by {amount:.3e}"


def comparison_check(params_a: ModelParams, params_b: ModelParams, grid: Grid, initial: InitialData,
                     horizon: float, sample_every: float = 1.0, initial_b: InitialData | None = None,
                     tol: float = 1e-9) -> ComparisonReport:
    """Run A and B with a shared step and verify that B dominates A at every sample."""
    dt = min(dt_max(params_a, grid.dx), dt_max(params_b, grid.dx))
    n, dt = _steps_for(horizon, dt)
    stride = max(int(round(sample_every / dt)), 1)
    ops_a, ops_b = build_operators(params_a, grid), build_operators(params_b, grid)
    sa = initial_state(grid, initial)
    sb = initial_state(grid, initial_b or initial)
    violations, gap, samples = [], 0.0, 0

    def check(a: SimState, b: SimState):
        nonlocal gap, samples
        samples += 1
        if b.h < a.h:
            violations.append((a.t, "h_B < h_A", a.h - b.h))
        if b.g > a.g:
            violations.append((a.t, "g_B > g_A", b.g - a.g))
        du = float((a.u - b.u).max())
        dv = float((a.v - b.v).max())
        gap = max(gap, du, dv)
        if du > tol:
            violations.append((a.t, "u_B < u_A", du))
        if dv > tol:
            violations.append((a.t, "v_B < v_A", dv))

    check(sa, sb)
    for k in range(1, n + 1):
        sa = step(sa, params_a, ops_a, dt)
        sb = step(sb, params_b, ops_b, dt)
        if k % stride == 0 or k == n:
            check(sa, sb)
    return ComparisonReport(not violations, samples, violations, gap)

"""Coexistence states: the scalar fixed-point map, its branch in a scaling
parameter, and spatial steady states on frozen intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .discretize import Grid, build_operators
from .errors import ParameterError, SteadyStateError
from .freeboundary import SimState, advance_fields, dt_max
from .model import ModelParams, scalar_R0

RESIDUAL_TOL = 1e-10


def _constants(params: ModelParams) -> tuple[float, float]:
    if not params.constant_coefficients:
        raise ParameterError("homogeneous states need constant a and b")
    return params.a.value, params.b.value


def fixed_point_map(u, params: ModelParams, scale: float = 1.0):
    """``F(u) = H(scale * G(u) / b) / a``; fixed points give ``u*``."""
    a, b = _constants(params)
    return params.H(scale * params.G(u) / b) / a


@dataclass
class CoexistenceState:
    u_star: float
    v_star: float
    residual_u: float
    residual_v: float
    R0: float
    extinct: bool = False
    iterations: int = 0

    @property
    def residuals(self):
        return self.residual_u, self.residual_v


def default_u_max(params: ModelParams) -> float:
    a, _ = _constants(params)
    proxy = 1e6 * params.H.saturation
    return 10.0 * float(params.H(proxy)) / a


def _positive_root(params: ModelParams, u_max: float, scale: float = 1.0) -> tuple[float, int]:
    F = lambda u: float(fixed_point_map(u, params, scale))  # noqa: E731
    # fixed-point iteration from above converges monotonically for concave F
    u, it = u_max, 0
    for it in range(1, 201):
        nxt = F(u)
        if abs(nxt - u) <= 1e-15 * max(u, 1.0):
            u = nxt
            break
        u = nxt
    else:
        u = math.nan
    if u > 0 and abs(u - F(u)) <= RESIDUAL_TOL * 1e-2:
        return u, it
    lo = 1e-12 * u_max
    phi = lambda z: z - F(z)  # noqa: E731
    if not (phi(lo) < 0 < phi(u_max)):
        raise SteadyStateError(f"u_max too small: u - F(u) has no sign change on (0, {u_max:g}]")
    root = brentq(phi, lo, u_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return root, it


def solve_coexistence(params: ModelParams, u_max: float | None = None) -> CoexistenceState:
    """Positive homogeneous state, or the extinct state when ``R0 <= 1``."""
    a, b = _constants(params)
    R0 = scalar_R0(params)
    if R0 <= 1:
        return CoexistenceState(0.0, 0.0, 0.0, 0.0, R0, extinct=True)
    u_max = default_u_max(params) if u_max is None else u_max
    if not math.isfinite(u_max):
        u_max = 1e12
    u, it = _positive_root(params, u_max)
    v = float(params.G(u)) / b
    ru = abs(-a * u + float(params.H(v)))
    rv = abs(-b * v + float(params.G(u)))
    if max(ru, rv) > RESIDUAL_TOL:
        raise SteadyStateError(f"coexistence residuals too large: {ru:.2e}, {rv:.2e}", residual=max(ru, rv))
    return CoexistenceState(u, v, ru, rv, R0, iterations=it)


@dataclass
class BranchPoint:
    mu: float
    u_star: float
    v_star: float
    residual: float

    @property
    def positive(self) -> bool:
        return self.u_star > 0


def bifurcation_scan(params: ModelParams, mu_grid) -> list[BranchPoint]:
    """Solve ``u = H(mu G(u) / b) / a`` along ``mu_grid``.

    A positive root exists exactly for ``mu R0 > 1``; it bifurcates from 0 at
    ``mu = 1 / R0``.
    """
    a, b = _constants(params)
    R0 = scalar_R0(params)
    u_max = default_u_max(params)
    out = []
    for mu in mu_grid:
        mu = float(mu)
        if mu * R0 <= 1:
            out.append(BranchPoint(mu, 0.0, 0.0, 0.0))
            continue
        u, _ = _positive_root(params, u_max, scale=mu)
        res = abs(u - float(fixed_point_map(u, params, mu)))
        out.append(BranchPoint(mu, u, mu * float(params.G(u)) / b, res))
    return out


@dataclass
class SpatialSteady:
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    residual: float  # sup-norm of the time derivative at the end
    t: float
    converged_to_zero: bool

    def midpoint(self) -> tuple[float, float]:
        i = int(np.argmin(np.abs(self.x)))
        return float(self.u[i]), float(self.v[i])


def spatial_steady(params: ModelParams, grid: Grid, Z: float, T_relax: float = 500.0, tol: float = 1e-9,
                   start: tuple[float, float] | None = None, dt: float | None = None) -> SpatialSteady:
    """Relax the frozen-boundary system on ``(-Z, Z)`` until ``|d/dt| <= tol``.

    Uses the same Euler update as the free-boundary stepper with the
    boundaries held fixed.
    """
    ops = build_operators(params, grid)
    Zs = grid.snap(Z)
    lo, hi = grid.active_range(-Zs, Zs)
    if start is None:
        try:
            cs = solve_coexistence(params)
            start = (cs.u_star, cs.v_star) if not cs.extinct else (1.0, 1.0)
        except (ParameterError, SteadyStateError):
            start = (1.0, 1.0)
    u = np.zeros(grid.n)
    v = np.zeros(grid.n)
    u[lo : hi + 1] = start[0]
    v[lo : hi + 1] = start[1]
    dt = dt_max(params, grid.dx) if dt is None else dt
    state = SimState(0.0, -Zs, Zs, u, v)
    n = int(math.ceil(T_relax / dt))
    res = math.inf
    for _ in range(n):
        un, vn, clamp = advance_fields(state.u, state.v, lo, hi, params, ops, dt)
        res = max(float(np.abs(un - state.u).max()), float(np.abs(vn - state.v).max())) / dt
        state = SimState(state.t + dt, -Zs, Zs, un, vn, state.clamp + clamp)
        if res <= tol:
            break
    if res > tol:
        raise SteadyStateError(f"relaxation horizon exceeded: |d/dt| = {res:.3e} at T={state.t:g}", residual=res)
    idx = slice(lo, hi + 1)
    sup = float(max(state.u.max(), state.v.max()))
    return SpatialSteady(grid.x[idx].copy(), state.u[idx].copy(), state.v[idx].copy(), res, state.t,
                         converged_to_zero=sup < 1e-6)

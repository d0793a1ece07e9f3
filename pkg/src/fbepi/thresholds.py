"""Critical expansion rate and spreading/vanishing tables.

The outcome is monotone in ``mu`` (a larger ``mu`` gives a dominating
solution), so ``mu_hat`` is bracketed by an exponential search followed by
bisection on probe classifications.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .discretize import Grid, build_grid, build_operators
from .errors import EigenError, ParameterError, SteadyStateError, ThresholdError
from .freeboundary import (SPREADING, UNDECIDED, VANISHING, ClassifierConfig, run)
from .model import InitialData, ModelParams, scalar_R0
from .spectral import (SupercriticalError, assemble, critical_domain, principal_eig_direct,
                       spectral_grid)
from .steady import solve_coexistence

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 200.0
DEFAULT_TOL_REL = 0.05


@dataclass
class Probe:
    mu: float
    classification: str
    t_final: float
    g: float
    h: float
    horizon: float
    warning: str = ""
    evidence: str = ""

    @property
    def side(self) -> str:
        """Side of the bracket this probe lands on (undecided counts as vanishing)."""
        return SPREADING if self.classification == SPREADING else VANISHING


@dataclass
class ThresholdResult:
    mu_lo: float
    mu_hi: float
    probes: list = field(default_factory=list)
    z_star: float = math.nan
    warnings: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.mu_hi - self.mu_lo

    @property
    def relative_width(self) -> float:
        return self.width / self.mu_hi

    @property
    def probe_count(self) -> int:
        return len(self.probes)

    def monotone(self) -> bool:
        """No vanishing probe above a spreading probe."""
        spread = [p.mu for p in self.probes if p.side == SPREADING]
        vanish = [p.mu for p in self.probes if p.side == VANISHING]
        return not spread or not vanish or max(vanish) < min(spread)

    def to_dict(self) -> dict:
        return {
            "mu_lo": self.mu_lo,
            "mu_hi": self.mu_hi,
            "bracket_width": self.width,
            "relative_width": self.relative_width,
            "probe_count": self.probe_count,
            "z_star": self.z_star,
            "warnings": list(self.warnings),
            "probes": [vars(p).copy() for p in self.probes],
        }


@dataclass
class ProbeContext:
    """Everything a single probe needs; picklable for worker processes."""

    params: ModelParams
    grid: Grid
    initial: InitialData
    horizon: float
    z_star: float | None
    coexistence: tuple | None
    classifier: ClassifierConfig = ClassifierConfig()
    max_doublings: int = 2
    sample_every: float = 1.0

    def __call__(self, mu: float) -> Probe:
        pv = replace(self.params, mu=mu)
        ops = build_operators(pv, self.grid)
        horizon = self.horizon
        for attempt in range(self.max_doublings + 1):
            tr = run(pv, self.grid, self.initial, horizon, self.sample_every, ops=ops,
                     classifier=self.classifier, z_star=self.z_star, coexistence=self.coexistence)
            st = tr.final
            if tr.classification != UNDECIDED:
                return Probe(mu, tr.classification, st.t, st.g, st.h, horizon, evidence=tr.evidence)
            if attempt < self.max_doublings:
                horizon *= 2
        msg = f"mu={mu:g} undecided at horizon {horizon:g}; counted as vanishing side"
        log.warning(msg)
        return Probe(mu, UNDECIDED, st.t, st.g, st.h, horizon, warning=msg)


def _coexistence_or_none(params: ModelParams):
    try:
        cs = solve_coexistence(params)
    except (ParameterError, SteadyStateError):
        return None
    return None if cs.extinct else (cs.u_star, cs.v_star)


def critical_half_width(params: ModelParams, grid: Grid, z_max: float | None = None):
    """Critical domain over ``[h0, z_max]`` on a lattice with the grid spacing."""
    z_max = z_max if z_max is not None else grid.x_max
    sg = spectral_grid(grid.dx, z_max, params)
    return critical_domain(params, sg, (grid.h0, z_max))


def small_mu_bound(params: ModelParams, grid: Grid, initial: InitialData, z_star: float) -> float:
    """Expansion rate below which an eigenfunction upper solution traps the front.

    With a Dirichlet principal pair ``(lam, psi)`` on ``(-c1, c1)``,
    ``h0 < c1 < Z*`` and ``lam < 0``, the solution stays below
    ``M exp(lam t / 2) psi`` with ``M = max(sup u0 / min psi1, sup v0 / min psi2)``
    over ``[-h0, h0]``, and the boundaries never pass ``c1`` as long as
    ``mu (1 + rho) M M0 <= -(lam / 2)(c1 - h0)``, ``M0 = max_i int psi_i``.
    """
    dx = grid.dx
    k0 = int(round(grid.h0 / dx))
    kz = int(round(z_star / dx))
    if kz - k0 < 2:
        raise ThresholdError("no room between h0 and Z* for the upper-solution bound")
    c1 = ((k0 + kz) // 2) * dx
    sg = spectral_grid(dx, c1, params)
    op = assemble(params, sg, c1)
    eig = principal_eig_direct(op)
    if eig.lam >= 0:
        raise ThresholdError("principal eigenvalue on (-c1, c1) is not negative")
    sigma = 0.5 * eig.lam
    M0 = dx * max(eig.phi1.sum(), eig.phi2.sum())
    inner = np.abs(op.x) < grid.h0 - 1e-12
    u0, v0 = initial.profiles(op.x, grid.h0)
    M = max(u0.max() / eig.phi1[inner].min(), v0.max() / eig.phi2[inner].min())
    return float(-sigma * (c1 - grid.h0) / (M * M0 * (1.0 + params.rho)))


def find_mu_hat(params: ModelParams, grid: Grid, initial: InitialData, horizon: float = DEFAULT_HORIZON,
                tol_rel: float = DEFAULT_TOL_REL, classifier: ClassifierConfig = ClassifierConfig(),
                mu_start: float = 1e-3, mu_cap: float = 1e6, max_doublings: int = 2, jobs: int = 1,
                sample_every: float = 1.0) -> ThresholdResult:
    """Bracket the critical expansion rate to relative width ``tol_rel``."""
    if params.constant_coefficients and scalar_R0(params) <= 1:
        raise ThresholdError("R0 <= 1: vanishing for all mu")
    try:
        cd = critical_half_width(params, grid)
    except SupercriticalError as exc:
        raise ThresholdError("h0 >= Z*: spreading regardless of mu") from exc
    except EigenError as exc:
        raise ThresholdError(f"critical domain failed: {exc}") from exc
    if not cd.found:
        raise ThresholdError("R0 <= 1: vanishing for all mu (no critical domain in the window)")
    z_star = cd.z_star
    need = 2 * z_star * classifier.spread_safety + max(params.J1.support_radius, params.J2.support_radius)
    if grid.x_max < need:
        raise ThresholdError(f"window half-width {grid.x_max:g} too small for the spreading test; need >= {need:g}")
    ctx = ProbeContext(params, grid, initial, horizon, z_star, _coexistence_or_none(params),
                       classifier, max_doublings, sample_every)
    result = ThresholdResult(math.nan, math.nan, z_star=z_star)

    def probe_many(mus):
        if jobs > 1 and len(mus) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                out = list(pool.map(ctx, mus))
        else:
            out = [ctx(m) for m in mus]
        for p in out:
            result.probes.append(p)
            if p.warning:
                result.warnings.append(p.warning)
        return out

    lo, mu = 0.0, mu_start
    while True:
        (p,) = probe_many([mu])
        if p.side == SPREADING:
            hi = mu
            break
        lo = mu
        mu *= 2.0
        if mu > mu_cap:
            raise ThresholdError(f"no spreading found below cap {mu_cap:g}")
    if lo == 0.0:
        raise ThresholdError(f"spreading already at mu={mu_start:g}; lower mu_start")
    while hi - lo > tol_rel * hi:
        k = max(jobs, 1)
        mids = [lo + (hi - lo) * (i + 1) / (k + 1) for i in range(k)]
        probes = probe_many(mids)
        for m, p in zip(mids, probes):
            if p.side == SPREADING:
                hi = min(hi, m)
            else:
                lo = max(lo, m)
    result.mu_lo, result.mu_hi = lo, hi
    return result


def verify_bracket(result: ThresholdResult, params: ModelParams, grid: Grid, initial: InitialData,
                   horizon: float = DEFAULT_HORIZON, points: int = 5,
                   classifier: ClassifierConfig = ClassifierConfig()) -> dict:
    """Re-probe ``points`` rates at and below ``mu_lo`` and at and above ``mu_hi``."""
    ctx = ProbeContext(params, grid, initial, horizon, result.z_star, _coexistence_or_none(params), classifier)
    below = [result.mu_lo * (i + 1) / points for i in range(points)]
    above = [result.mu_hi * (1 + i / points) for i in range(points)]
    low = [ctx(m) for m in below]
    high = [ctx(m) for m in above]
    return {
        "below": low,
        "above": high,
        "ok": all(p.classification == VANISHING for p in low) and all(p.classification == SPREADING for p in high),
    }


@dataclass
class TableRow:
    h0: float
    lambda_star: float
    z_star: float
    mu: float
    classification: str


def dichotomy_table(params: ModelParams, dx: float, window_factor: float, mu_values, h0_values,
                    initial: InitialData, horizon: float = DEFAULT_HORIZON,
                    classifier: ClassifierConfig = ClassifierConfig()) -> list[TableRow]:
    """Classification for every ``(h0, mu)`` pair with lambda*(h0) and Z*."""
    rows = []
    coex = _coexistence_or_none(params)
    for h0 in h0_values:
        grid = build_grid(h0, dx, window_factor)
        ph = replace(params, h0=grid.h0)
        sg = spectral_grid(dx, grid.x_max, params)
        lam = principal_eig_direct(assemble(ph, sg, grid.h0)).lam
        try:
            cd = critical_domain(ph, sg, (dx, grid.x_max - dx))
            z_star = cd.z_star if cd.found else math.inf
        except SupercriticalError:
            z_star = 0.0
        for mu in mu_values:
            pm = replace(ph, mu=float(mu))
            tr = run(pm, grid, initial, horizon, 1.0, classifier=classifier,
                     z_star=z_star if math.isfinite(z_star) and z_star > 0 else None, coexistence=coex)
            rows.append(TableRow(grid.h0, lam, z_star, float(mu), tr.classification))
    return rows

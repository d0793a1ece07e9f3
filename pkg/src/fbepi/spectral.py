"""Principal eigenvalue of the linearized operator on a fixed interval.

The discrete operator on the open interval ``(-Z, Z)`` is the 2n x 2n block
matrix

    L = [[d1 (W1 - I) - diag(a) + p D,  H'(0) I],
         [G'(0) I,  d2 (W2 - I) - diag(b) + q D]]

which is Metzler. It splits as ``L = L_J + L_T`` with ``L_J`` the two
convolution blocks ``d_k W_k`` and ``L_T`` the remaining transport, loss and
coupling part. ``lambda*`` is computed either directly by power iteration on
the shifted nonnegative matrix, or through the root of
``rho(lambda) = spectral radius of L_J (lambda I - L_T)^{-1}`` at 1.
Persistence corresponds to ``lambda* > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq

from .discretize import DiscreteOperators, Grid, build_grid, build_operators
from .errors import EigenError, GridError, NoRootError
from .model import ModelParams

POWER_TOL = 1e-12
POWER_MAXITER = 100_000
# Repeated squaring of the normalized shifted matrix before plain power
# iteration; 2**SQUARINGS effective steps at dense-matmul cost.
SQUARINGS = 14


@dataclass
class LinearizedOperator:
    L: np.ndarray
    L_J: np.ndarray
    L_T: np.ndarray
    x: np.ndarray  # active node coordinates
    dx: float
    Z: float

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def weights(self) -> np.ndarray:
        return np.full(2 * self.n, self.dx)


@dataclass
class EigenResult:
    lam: float
    phi: np.ndarray  # sup-norm 1
    adjoint: np.ndarray  # <adjoint, phi>_dx = 1
    residual: float
    adjoint_residual: float
    iterations: int
    dx: float = 1.0
    decoupled: bool = False
    history: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.phi.size // 2

    @property
    def phi1(self):
        return self.phi[: self.n]

    @property
    def phi2(self):
        return self.phi[self.n :]

    @property
    def w1(self):
        return self.adjoint[: self.n]

    @property
    def w2(self):
        return self.adjoint[self.n :]

    def pairing(self, f) -> float:
        return float(self.dx * np.dot(self.adjoint, f))


def assemble(params: ModelParams, grid: Grid, Z: float, ops: DiscreteOperators | None = None) -> LinearizedOperator:
    """Linearization at (0, 0) restricted to the nodes of ``(-Z, Z)``."""
    Zs = grid.snap(Z)
    if Zs > grid.x_max + 1e-12:
        raise GridError(f"domain exceeds window: Z={Z} > {grid.x_max}")
    if ops is None:
        ops = build_operators(params, grid)
    idx = grid.interior(Zs)
    if idx.size == 0:
        raise GridError(f"no interior nodes for Z={Z}")
    sub = np.ix_(idx, idx)
    n = idx.size
    eye = np.eye(n)
    W1, W2 = ops.W1[sub], ops.W2[sub]
    L_J = np.zeros((2 * n, 2 * n))
    L_J[:n, :n] = params.d1 * W1
    L_J[n:, n:] = params.d2 * W2
    L_T = np.zeros_like(L_J)
    L_T[:n, :n] = -(params.d1 * eye) - np.diag(ops.a_values[idx]) + ops.D_up_p[sub]
    L_T[n:, n:] = -(params.d2 * eye) - np.diag(ops.b_values[idx]) + ops.D_up_q[sub]
    L_T[:n, n:] = params.H.derivative_at_zero * eye
    L_T[n:, :n] = params.G.derivative_at_zero * eye
    return LinearizedOperator(L=L_J + L_T, L_J=L_J, L_T=L_T, x=grid.x[idx], dx=grid.dx, Z=Zs)


def _perron_vector(M: np.ndarray, tol: float, maxiter: int):
    """Dominant eigenpair of a nonnegative matrix; returns (rho, x, iters, res)."""
    n = M.shape[0]
    scale = np.abs(M).sum(axis=1).max()
    if scale == 0:
        return 0.0, np.ones(n), 0, 0.0
    x = np.ones(n)
    iters = 0
    P = M / scale
    for _ in range(SQUARINGS):
        P = P @ P
        nrm = np.abs(P).max()
        if nrm == 0 or not np.isfinite(nrm):
            break
        P /= nrm
        iters += 1
        y = P @ x
        if y.max() > 0:
            x = y / y.max()
    rho, res = 0.0, math.inf
    for k in range(maxiter):
        y = M @ x
        ymax = np.abs(y).max()
        if ymax == 0:
            return 0.0, x, iters + k, 0.0
        rho = float(np.dot(x, y) / np.dot(x, x))
        res = float(np.abs(y - rho * x).max())
        if res <= tol * max(rho, 1e-300):
            return rho, x, iters + k, res
        x = y / ymax
    raise EigenError(f"power iteration stalled (residual {res:.3e})", residual=res)


def _as_operator(L) -> LinearizedOperator:
    if isinstance(L, LinearizedOperator):
        return L
    L = np.asarray(L, dtype=float)
    zero = np.zeros_like(L)
    n = L.shape[0] // 2
    return LinearizedOperator(L=L, L_J=zero, L_T=L, x=np.zeros(n), dx=1.0, Z=math.nan)


def _check_positive(phi: np.ndarray, n: int, tol_rel: float = 0.0):
    """Zero entries are only allowed as a whole species block."""
    top = phi.max()
    blocks = (phi[:n], phi[n:]) if n > 0 and phi.size == 2 * n else (phi,)
    whole_zero = False
    for blk in blocks:
        nz = blk > tol_rel * top
        if not nz.any():
            whole_zero = True
            continue
        if not nz.all():
            raise EigenError("irreducibility violated: eigenvector has zero entries")
    return whole_zero


def principal_eig_direct(L, tol: float = POWER_TOL, maxiter: int = POWER_MAXITER) -> EigenResult:
    """Principal eigenpair of a Metzler matrix by shifted power iteration.

    ``M = L + c I`` with ``c = 1 + max |L_ii|`` is entrywise nonnegative;
    ``lambda* = rho(M) - c``. The adjoint vector comes from the transpose.
    """
    op = _as_operator(L)
    A = op.L
    off = A - np.diag(np.diag(A))
    if (off < 0).any():
        raise EigenError("operator is not Metzler")
    c = 1.0 + np.abs(np.diag(A)).max()
    M = A + c * np.eye(A.shape[0])
    rho, phi, it1, _ = _perron_vector(M, tol, maxiter)
    rho_t, w, it2, _ = _perron_vector(M.T, tol, maxiter)
    phi = np.maximum(phi, 0.0)
    phi /= phi.max()
    w = np.maximum(w, 0.0)
    n = A.shape[0] // 2
    decoupled = _check_positive(phi, n)
    lam = rho - c
    pair = op.dx * np.dot(w, phi)
    if pair <= 0:
        raise EigenError("adjoint vector orthogonal to eigenvector (reducible operator)")
    w = w / pair
    res = float(np.abs(A @ phi - lam * phi).max())
    res_t = float(np.abs(A.T @ w - lam * w).max() / np.abs(w).max())
    return EigenResult(lam=lam, phi=phi, adjoint=w, residual=res, adjoint_residual=res_t,
                       iterations=it1 + it2, dx=op.dx, decoupled=decoupled)


def dense_principal_eigenvalue(L) -> float:
    """Largest real part over the full spectrum (oracle / reducible cases)."""
    A = L.L if isinstance(L, LinearizedOperator) else np.asarray(L, dtype=float)
    return float(np.linalg.eigvals(A).real.max())


def numerical_abscissa(A: np.ndarray) -> float:
    """Largest eigenvalue of the symmetric part: ``<A x, x> <= omega |x|^2``."""
    return float(np.linalg.eigvalsh(0.5 * (A + A.T)).max())


class _Resolvent:
    """LU factorization of ``lam I - L_T`` with the M-matrix check."""

    def __init__(self, L_T: np.ndarray, lam: float):
        n = L_T.shape[0]
        A = lam * np.eye(n) - L_T
        with np.errstate(all="ignore"):
            try:
                self.lu = lu_factor(A, check_finite=True)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise EigenError("lambda below spectral bound of transport part") from exc
            probe = lu_solve(self.lu, np.ones(n))
        # Z-matrix with A^{-1} 1 > 0 is a nonsingular M-matrix, so lam > s(L_T).
        if not np.all(np.isfinite(probe)) or probe.min() <= 0:
            raise EigenError("lambda below spectral bound of transport part")

    def solve(self, b, trans=0):
        return lu_solve(self.lu, b, trans=trans)


def _rho_power(apply, n, tol=1e-13, maxiter=20_000, x0=None):
    x = np.ones(n) if x0 is None else x0.copy()
    res = math.inf
    for _ in range(maxiter):
        y = apply(x)
        ymax = np.abs(y).max()
        if ymax == 0:
            return 0.0, x
        rho = float(np.dot(x, y) / np.dot(x, x))
        res = float(np.abs(y - rho * x).max())
        x = y / ymax
        if res <= tol * rho:
            return rho, x
    raise EigenError(f"power iteration stalled in rho(lambda) (residual {res:.3e})", residual=res)


def rho_curve(L_T: np.ndarray, L_J: np.ndarray, lam: float, return_vector: bool = False, x0=None):
    """Spectral radius of ``L_J (lam I - L_T)^{-1}``.

    ``lam`` solves ``L phi = lam phi`` for the principal pair exactly when the
    returned value is 1.
    """
    R = _Resolvent(L_T, lam)
    apply = lambda y: L_J @ R.solve(y)  # noqa: E731
    rho, y = _rho_power(apply, L_T.shape[0], x0=x0)
    if return_vector:
        return rho, R.solve(y), y
    return rho


def transport_bound(op: LinearizedOperator) -> float:
    """Numerical abscissa of ``L_T``; resolvent is invertible and bounded above it."""
    return numerical_abscissa(op.L_T)


class _RhoFunction:
    """rho(lam) with warm-started power iterations; None below the spectral bound."""

    def __init__(self, op: LinearizedOperator):
        self.op = op
        self.x = None
        self.calls = 0

    def __call__(self, lam):
        self.calls += 1
        try:
            rho, _, y = rho_curve(self.op.L_T, self.op.L_J, lam, return_vector=True, x0=self.x)
        except EigenError:
            return None
        self.x = y
        return rho


def _bracket(f: _RhoFunction, omega: float):
    hi = omega + 1.0
    r = f(hi)
    while r is None or r >= 1.0:
        hi = omega + 2.0 * (hi - omega)
        if hi - omega > 1e6:
            raise NoRootError("no root: rho stays >= 1 up to spectral bound + 1e6")
        r = f(hi)
    rhi = r
    # walk down towards the transport spectral bound until rho > 1
    lo, step, last_ok = omega, 1.0, hi
    r = f(lo)
    while r is None or r <= 1.0:
        if r is None:
            if last_ok - lo < 1e-6:
                raise NoRootError("no root: rho(lambda) <= 1 down to the transport spectral bound")
            lo = 0.5 * (lo + last_ok)
        else:
            last_ok, hi, rhi = lo, lo, r
            lo -= step
            step *= 2.0
            if step > 1e7:
                raise NoRootError("no root below transport bound")
        r = f(lo)
    return lo, r, hi, rhi


def principal_eig_resolvent(L, bracket=None, tol: float = 1e-10, maxiter: int = 200,
                            method: str = "brent") -> EigenResult:
    """Principal eigenpair from the root of ``rho(lam) = 1``.

    ``method="bisect"`` halves the bracket each step; ``"brent"`` uses
    inverse quadratic steps on ``log rho`` safeguarded by bisection.
    """
    op = L if isinstance(L, LinearizedOperator) else _as_operator(L)
    f = _RhoFunction(op)
    if bracket is None:
        lo, rlo, hi, rhi = _bracket(f, transport_bound(op))
    else:
        lo, hi = bracket
        rlo, rhi = f(lo), f(hi)
        if rlo is None or rhi is None or not (rhi < 1.0 < rlo):
            raise NoRootError(f"bracket [{lo}, {hi}] does not straddle rho = 1")
    history = [(lo, hi)]
    if method == "bisect":
        it = 0
        while hi - lo > tol and it < maxiter:
            mid = 0.5 * (lo + hi)
            r = f(mid)
            if r is None:
                raise EigenError("resolvent lost positivity inside the bracket")
            if r > 1.0:
                lo = mid
            else:
                hi = mid
            history.append((lo, hi))
            it += 1
        lam = 0.5 * (lo + hi)
    elif method == "brent":

        def g(lam):
            r = f(lam)
            if r is None:
                raise EigenError("resolvent lost positivity inside the bracket")
            return math.log(r)

        lam, info = brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                           maxiter=maxiter, full_output=True)
        it = info.iterations
    else:
        raise ValueError(f"unknown method {method!r}")
    _, phi, _ = rho_curve(op.L_T, op.L_J, lam, return_vector=True, x0=f.x)
    _, w, _ = rho_curve(op.L_T.T, op.L_J.T, lam, return_vector=True)
    phi = np.maximum(phi, 0.0)
    phi /= phi.max()
    w = np.maximum(w, 0.0)
    w /= op.dx * np.dot(w, phi)
    res = float(np.abs(op.L @ phi - lam * phi).max())
    res_t = float(np.abs(op.L.T @ w - lam * w).max() / np.abs(w).max())
    return EigenResult(lam=float(lam), phi=phi, adjoint=w, residual=res, adjoint_residual=res_t,
                       iterations=f.calls, dx=op.dx, history=history)


def collatz_wielandt_bounds(L, test) -> tuple[float, float]:
    """``(min_i (L psi)_i / psi_i, max_i (L psi)_i / psi_i)``; brackets lambda*."""
    A = L.L if isinstance(L, LinearizedOperator) else np.asarray(L, dtype=float)
    psi = np.asarray(test, dtype=float)
    if psi.shape != (A.shape[0],) or not np.all(psi > 0):
        raise ValueError("test function must be positive")
    ratio = (A @ psi) / psi
    return float(ratio.min()), float(ratio.max())


# -- parameter-level helpers -------------------------------------------------


def spectral_grid(dx: float, Z_max: float, params: ModelParams | None = None) -> Grid:
    """Smallest lattice whose interior holds every domain up to ``Z_max``.

    With ``params`` the window is also at least as wide as the kernel supports.
    """
    k = max(int(math.ceil(Z_max / dx - 1e-9)), 2)
    half = k + 1
    if params is not None:
        R = max(params.J1.support_radius, params.J2.support_radius)
        half = max(half, int(math.ceil(R / (2 * dx))) + 1)
    return Grid(dx=dx, half_cells=half, h0=k * dx, h0_requested=Z_max)


def principal_eigen(params: ModelParams, grid: Grid, Z: float, ops=None) -> EigenResult:
    return principal_eig_direct(assemble(params, grid, Z, ops))


def lambda_star(params: ModelParams, grid: Grid, Z: float, ops=None) -> float:
    return principal_eigen(params, grid, Z, ops).lam


@dataclass
class CriticalDomain:
    z_star: float | None  # smallest snapped half-width with lambda* >= 0
    z_lo: float | None
    z_hi: float | None
    lam_lo: float
    lam_hi: float
    evaluations: int
    message: str = ""

    @property
    def found(self) -> bool:
        return self.z_star is not None


class SupercriticalError(EigenError):
    """lambda*(Z_min) > 0: the initial domain already persists."""


def critical_domain(params: ModelParams, grid: Grid, search: tuple[float, float], ops=None) -> CriticalDomain:
    """Sign change of lambda*(Z) over snapped half-widths.

    The upper end grows geometrically from the lower one, so large search
    windows only cost dense solves when Z* is actually large; the sign
    change is then isolated by bisection.
    """
    if ops is None:
        ops = build_operators(params, grid)
    dx = grid.dx
    klo = max(int(round(search[0] / dx)), 1)
    kmax = int(round(search[1] / dx))
    if kmax > grid.half_cells:
        raise GridError("domain exceeds window")
    lam = lambda k: lambda_star(params, grid, k * dx, ops)  # noqa: E731
    llo = lam(klo)
    evals = 1
    if llo > 0:
        raise SupercriticalError(f"initial domain already supercritical: lambda*({klo * dx:g}) = {llo:.6g} > 0")
    khi = klo
    while True:
        khi = min(max(2 * khi, khi + 1), kmax)
        lhi = lam(khi)
        evals += 1
        if lhi >= 0:
            break
        if khi == kmax:
            return CriticalDomain(None, klo * dx, khi * dx, llo, lhi, evals,
                                  f"none: lambda*({khi * dx:g}) = {lhi:.6g} < 0 on the whole search range")
        klo, llo = khi, lhi
    while khi - klo > 1:
        kmid = (klo + khi) // 2
        lm = lam(kmid)
        evals += 1
        if lm < 0:
            klo, llo = kmid, lm
        else:
            khi, lhi = kmid, lm
    return CriticalDomain(khi * dx, klo * dx, khi * dx, llo, lhi, evals)


def hadamard_derivative(params: ModelParams, grid: Grid, Z: float, j: int, ops=None,
                        eig: EigenResult | None = None) -> float:
    """d lambda* / d d_j as the adjoint pairing ``<w_j, W_j phi_j - phi_j>``."""
    if ops is None:
        ops = build_operators(params, grid)
    op = assemble(params, grid, Z, ops)
    if eig is None:
        eig = principal_eig_direct(op)
    n = op.n
    idx = grid.interior(op.Z)
    if j == 1:
        W, phi, w = ops.W1[np.ix_(idx, idx)], eig.phi1, eig.w1
    elif j == 2:
        W, phi, w = ops.W2[np.ix_(idx, idx)], eig.phi2, eig.w2
    else:
        raise ValueError("species index must be 1 or 2")
    assert phi.size == n
    return float(op.dx * np.dot(w, W @ phi - phi))


def operator_R0(params: ModelParams, grid: Grid, Z: float, ops=None) -> float:
    """Spectral radius of the next-generation matrix ``L_J (-L_T)^{-1}``."""
    op = assemble(params, grid, Z, ops)
    try:
        return rho_curve(op.L_T, op.L_J, 0.0)
    except EigenError as exc:
        raise EigenError("transport part not invertible at 0") from exc


@dataclass
class DiffusionProbeRow:
    d: float
    lam: float
    r1: float
    r2: float
    hint: str


def diffusion_limit_probe(params: ModelParams, grid: Grid, Z: float, d_values, species: int = 1):
    """lambda* along a sweep of ``d_species`` with the kernel spectral radii.

    The hint follows the large-diffusion trichotomy on ``r = rho(W_species)``.
    """
    ops = build_operators(params, grid)
    idx = grid.interior(grid.snap(Z))
    sub = np.ix_(idx, idx)
    r1 = float(np.linalg.eigvalsh(0.5 * (ops.W1[sub] + ops.W1[sub].T)).max())
    r2 = float(np.linalg.eigvalsh(0.5 * (ops.W2[sub] + ops.W2[sub].T)).max())
    r = r1 if species == 1 else r2
    if r > 1 + 1e-12:
        hint = "growing"
    elif r < 1 - 1e-12:
        hint = "plateau"
    else:
        hint = "bounded"
    rows = []
    for d in d_values:
        pv = replace(params, **{f"d{species}": float(d)})
        rows.append(DiffusionProbeRow(float(d), lambda_star(pv, grid, Z, build_operators(pv, grid)), r1, r2, hint))
    return rows

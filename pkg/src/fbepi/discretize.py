"""Background lattice, quadrature and the discrete operators built on it.

Nodes are ``x_i = (i - M) dx`` for ``i = 0..2M``, so the window is
``[-M dx, M dx]`` and every node coordinate is an exact multiple of ``dx``.
Fields live on the fixed lattice; a moving interval ``(g, h)`` selects the
active nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridError
from .model import KernelSpec, ModelParams, kernel_tail  # noqa: F401  (re-export)

_SNAP = 1e-9


@dataclass(frozen=True)
class Grid:
    dx: float
    half_cells: int  # M: the window is [-M dx, M dx]
    h0: float  # initial half-width after snapping to a node
    h0_requested: float = math.nan

    @property
    def n(self) -> int:
        return 2 * self.half_cells + 1

    @property
    def x_max(self) -> float:
        return self.half_cells * self.dx

    @cached_property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.half_cells) * self.dx

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def snap(self, z: float) -> float:
        """Nearest node coordinate to ``z``."""
        return round(z / self.dx) * self.dx

    def index(self, z: float) -> int:
        return int(round(z / self.dx)) + self.half_cells

    def active_range(self, g: float, h: float) -> tuple[int, int]:
        """Inclusive index range of nodes with ``g < x_i < h``."""
        lo = math.floor(g / self.dx + _SNAP) + 1 + self.half_cells
        hi = math.ceil(h / self.dx - _SNAP) - 1 + self.half_cells
        return max(lo, 0), min(hi, self.n - 1)

    def interior(self, Z: float) -> np.ndarray:
        """Indices of the open interval ``(-Z, Z)`` with Z snapped to a node."""
        lo, hi = self.active_range(-Z, Z)
        return np.arange(lo, hi + 1)


def build_grid(h0: float, dx: float, window_factor: float = 4.0) -> Grid:
    """Lattice covering ``[-window_factor h0, window_factor h0]`` (rounded outward)."""
    if not dx > 0:
        raise GridError(f"grid spacing must be positive, got {dx}")
    if not h0 > 0:
        raise GridError(f"h0 must be positive, got {h0}")
    if dx >= h0:
        raise GridError(f"grid too coarse: dx={dx} >= h0={h0}")
    if window_factor < 4:
        raise GridError(f"window_factor must be >= 4, got {window_factor}")
    k0 = max(int(round(h0 / dx)), 1)
    M = max(math.ceil(window_factor * h0 / dx - _SNAP), 4 * k0)
    if 2 * M + 1 < 8:
        raise GridError("grid needs at least 8 nodes")
    return Grid(dx=dx, half_cells=M, h0=k0 * dx, h0_requested=h0)


def kernel_stencil(kernel: KernelSpec, dx: float) -> np.ndarray:
    """Samples ``J(k dx) dx`` for ``|k| <= m``, renormalized to sum to 1.

    Entry ``m + k`` holds the weight for offset ``k``.
    """
    m = int(math.floor(kernel.support_radius / dx + _SNAP))
    s = kernel(np.arange(-m, m + 1) * dx) * dx
    return s / s.sum()


def assemble_convolution(kernel: KernelSpec, grid: Grid) -> np.ndarray:
    """Dense ``W[i, j] = J(x_i - x_j) w_j`` with trapezoid weights ``w``.

    Kernel samples are scaled once so that ``sum_j J(x_j) w_j = 1`` for a
    node whose full support lies in the window.
    """
    if kernel.support_radius > 2 * grid.x_max:
        raise GridError("kernel wider than window")
    st = kernel_stencil(kernel, grid.dx)
    m = (st.size - 1) // 2
    diff = np.subtract.outer(np.arange(grid.n), np.arange(grid.n))
    band = np.abs(diff) <= m
    W = np.zeros((grid.n, grid.n))
    W[band] = st[diff[band] + m] / grid.dx
    return W * grid.weights[None, :]


def assemble_upwind(speed: float, grid: Grid) -> np.ndarray:
    """Matrix of ``speed * d/dx`` with upwinding and zero ghost values.

    ``+p u_x`` with ``p > 0`` transports leftward, so the stencil reaches
    right: ``p (u_{i+1} - u_i) / dx``; ``p < 0`` uses the backward difference.
    Off-diagonal entries are ``|speed| / dx >= 0``.
    """
    n = grid.n
    D = np.zeros((n, n))
    if speed == 0:
        return D
    c = abs(speed) / grid.dx
    D[np.arange(n), np.arange(n)] = -c
    if speed > 0:
        D[np.arange(n - 1), np.arange(1, n)] = c
    else:
        D[np.arange(1, n), np.arange(n - 1)] = c
    return D


@dataclass
class DiscreteOperators:
    """Operators for one parameter set on one grid.

    Dense matrices are built lazily; the time stepper only needs the stencils.
    """

    params: ModelParams
    grid: Grid
    stencil1: np.ndarray = field(init=False)
    stencil2: np.ndarray = field(init=False)

    def __post_init__(self):
        R = max(self.params.J1.support_radius, self.params.J2.support_radius)
        if R > 2 * self.grid.x_max:
            raise GridError("kernel wider than window")
        self.stencil1 = kernel_stencil(self.params.J1, self.grid.dx)
        self.stencil2 = kernel_stencil(self.params.J2, self.grid.dx)

    @cached_property
    def W1(self) -> np.ndarray:
        return assemble_convolution(self.params.J1, self.grid)

    @cached_property
    def W2(self) -> np.ndarray:
        return assemble_convolution(self.params.J2, self.grid)

    @cached_property
    def D_up_p(self) -> np.ndarray:
        return assemble_upwind(self.params.p, self.grid)

    @cached_property
    def D_up_q(self) -> np.ndarray:
        return assemble_upwind(self.params.q, self.grid)

    @cached_property
    def a_values(self) -> np.ndarray:
        return np.ascontiguousarray(self.params.a(self.grid.x), dtype=float)

    @cached_property
    def b_values(self) -> np.ndarray:
        return np.ascontiguousarray(self.params.b(self.grid.x), dtype=float)

    def tails(self, g: float, h: float):
        """Per-node right/left tail masses ``T_k(h - x_i)``, ``T_k(x_i - g)``."""
        x = self.grid.x
        J1, J2 = self.params.J1, self.params.J2
        return (J1.tail(h - x), J1.tail(x - g)), (J2.tail(h - x), J2.tail(x - g))


def build_operators(params: ModelParams, grid: Grid) -> DiscreteOperators:
    return DiscreteOperators(params, grid)

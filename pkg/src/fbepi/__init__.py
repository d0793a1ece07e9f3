"""Nonlocal two-species epidemic model with flux-driven free boundaries."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .discretize import Grid, build_grid, build_operators
from .errors import (ConfigError, EigenError, FbepiError, GridError, NoRootError, ParameterError,
                     SteadyStateError, StepError, ThresholdError, WindowExhausted)
from .freeboundary import ClassifierConfig, classify, comparison_check, run, step
from .model import (CoefficientField, InitialData, KernelSpec, ModelParams, NonlinearitySpec,
                    coercivity_constant, scalar_R0, validate)
from .spectral import (assemble, collatz_wielandt_bounds, critical_domain, hadamard_derivative,
                       lambda_star, operator_R0, principal_eig_direct, principal_eig_resolvent,
                       rho_curve, spectral_grid)
from .steady import bifurcation_scan, solve_coexistence, spatial_steady
from .thresholds import critical_half_width, dichotomy_table, find_mu_hat, small_mu_bound, verify_bracket

__all__ = [name for name in dir() if not name.startswith("_")]

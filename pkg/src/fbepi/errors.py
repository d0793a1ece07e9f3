"""Exception hierarchy shared by all fbepi modules."""


class FbepiError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(FbepiError, ValueError):
    """Invalid or unsupported model parameters."""


class GridError(FbepiError, ValueError):
    """Grid construction or operator assembly failed."""


class EigenError(FbepiError, RuntimeError):
    """A principal-eigenvalue computation failed."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoRootError(EigenError):
    """No bracket for rho(lambda) = 1 could be located."""


class SteadyStateError(FbepiError, RuntimeError):
    """A steady-state search did not produce a valid state."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class StepError(FbepiError, RuntimeError):
    """The explicit stepper cannot advance the state."""


class WindowExhausted(StepError):
    """A free boundary reached the edge of the background lattice."""


class ThresholdError(FbepiError, RuntimeError):
    """The critical expansion rate cannot be bracketed for these inputs."""


class ConfigError(FbepiError, ValueError):
    """Configuration file problem, with an optional line number."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path

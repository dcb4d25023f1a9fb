"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class TehomogError(Exception):
    """Base class for every error raised by the package."""


class SolverError(TehomogError):
    """A numerical routine could not produce a trustworthy result."""


class SingularMatrixError(SolverError):
    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class BracketError(SolverError):
    """The supplied interval does not bracket a sign change."""


class ConvergenceError(SolverError):
    pass


class ConsistencyError(SolverError):
    """A periodic problem was posed with data that admits no periodic solution."""


class ResolutionError(SolverError):
    """The mesh does not resolve the microstructure."""


class DomainError(TehomogError, ValueError):
    pass


class NonSimpleEigenvalueError(SolverError):
    pass


class DegenerateDenominatorError(SolverError):
    pass


class ConfigError(TehomogError, ValueError):
    pass

"""Exception hierarchy shared by all hyperturb modules."""


class HyperturbError(Exception):
    """Base class for library errors."""


class DomainError(HyperturbError, ValueError):
    """An argument lies outside the domain of a thermodynamic function."""


class StateError(HyperturbError, ValueError):
    """A state vector violates the admissibility invariants."""


class NumericalError(HyperturbError, ArithmeticError):
    """Non-finite values or a failed eigen-solve."""


class StepRejected(NumericalError):
    """A time step exceeded the stability limit."""


class AbortedRun(NumericalError):
    """A simulation blew up; ``step`` records where."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(HyperturbError, ValueError):
    """Invalid run configuration."""


class UsageError(HyperturbError, ValueError):
    """Inconsistent arguments passed to a diagnostic."""

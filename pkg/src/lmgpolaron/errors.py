"""Exception types shared across the package.

Validation-type errors subclass :class:`ValueError`, numerical failures subclass
:class:`RuntimeError`; the CLI maps the two families to exit codes 1 and 2.
"""


class LmgError(Exception):
    """Base class for all package errors."""


class ValidationError(LmgError, ValueError):
    """Invalid input parameters."""


class CriticalPointError(ValidationError):
    """Raised when a coupling sits on (or inside the guard radius of) the critical point."""

    def __init__(self, h, gamma, tol):
        self.h = h
        self.gamma = gamma
        self.tol = tol
        super().__init__(
            f"coupling gamma={gamma!r} is within {tol:g} of the critical point h={h!r}; "
            "the oscillator description is singular there"
        )


class CapacityError(ValidationError):
    """Problem size exceeds the configured maximum."""


class NumericalError(LmgError, RuntimeError):
    """Base class for numerical failures."""


class ConvergenceError(NumericalError):
    """An eigensolver or quadrature failed to converge."""


class TruncationError(NumericalError):
    """A truncated Fock-space sum leaves too much probability mass in the tail."""


class InsufficientStatisticsError(NumericalError):
    """Too few events to build a meaningful histogram."""


class TruncationWarning(UserWarning):
    """Tail mass of a truncated distribution exceeds the requested bound."""

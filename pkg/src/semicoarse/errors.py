"""Exception hierarchy for semicoarse.

Every error carries the process exit code the command-line front end
returns when the error escapes a command handler.
"""

from __future__ import annotations


class SemicoarseError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class UsageError(SemicoarseError):
    """Bad command-line input or malformed specification string."""

    exit_code = 1


class ShapeError(SemicoarseError):
    """Array dimensions do not match the game or matrix they belong to."""

    exit_code = 1


class EmptyInputError(SemicoarseError):
    """An operation received an empty sequence where data was required."""

    exit_code = 1


class DomainError(SemicoarseError):
    """An argument lies outside the domain of the operation."""

    exit_code = 1


class ValidationError(SemicoarseError):
    """A generator pair or transform fails its structural conditions."""

    exit_code = 4


class NotSemicoarseError(ValidationError):
    """A stochastic matrix violates the triplet condition."""


class PreconditionError(SemicoarseError):
    """A documented precondition of an operation does not hold."""

    exit_code = 4


class EnumerationBudgetError(PreconditionError):
    """A requested enumeration exceeds the configured budget."""


class CertificateUnavailableError(PreconditionError):
    """The Bertrand dual certificate cannot be built for this instance."""


class UnsupportedScalingError(PreconditionError):
    """Scaled dynamics were requested with a non-diagonal scaling."""


class InfeasibleError(SemicoarseError):
    """The linear program has no feasible point."""

    exit_code = 2


class UnboundedError(SemicoarseError):
    """The linear program objective is unbounded."""

    exit_code = 3


class SolverStallError(SemicoarseError):
    """The simplex method hit its pivot limit or lost numerical stability."""

    exit_code = 5

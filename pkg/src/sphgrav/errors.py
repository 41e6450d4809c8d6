"""Exception hierarchy shared across the package."""


class SphGravError(Exception):
    """Base class for all package errors."""


class DomainError(SphGravError, ValueError):
    """An argument lies outside the domain of the operation (vacuum, x < 1, ...)."""


class RootFindingError(SphGravError, RuntimeError):
    """The wave-curve intersection could not be located.

    For valid inputs this never happens; seeing it means an internal invariant
    was violated.
    """


class ConfigError(SphGravError, ValueError):
    """Invalid run configuration."""


class CFLViolation(SphGravError, RuntimeError):
    """A wave speed reached the mesh ratio l/h."""


class InvariantViolation(SphGravError, RuntimeError):
    """A monitored bound was exceeded beyond tolerance."""

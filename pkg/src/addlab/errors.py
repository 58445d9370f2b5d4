"""Exception types shared across the package."""


class AddlabError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(AddlabError, ValueError):
    """Invalid or mismatched dimensions."""


class DomainError(AddlabError, ValueError):
    """Scalar argument outside the mathematical domain of a formula."""


class RegimeError(AddlabError, ValueError):
    """Inputs outside the regime where a bound is asserted to hold."""


class InvalidStateError(AddlabError, ValueError):
    """A matrix violates the density-matrix contract beyond tolerance."""


class ResourceError(AddlabError, RuntimeError):
    """A computation would exceed a configured size cap."""

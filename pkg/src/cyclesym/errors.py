"""Exception types shared across the package."""


class CyclesymError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(CyclesymError):
    """Invalid input data or configuration (CLI exit code 2)."""


class NumericalError(CyclesymError):
    """A computation produced non-finite or undefined results (CLI exit code 3)."""

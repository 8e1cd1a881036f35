"""Exception types shared across the package."""


class CavhomError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(CavhomError, ValueError):
    """Invalid parameters, config files, or grid setup. CLI exit code 2."""


class DomainError(CavhomError, ValueError):
    """Argument outside the mathematically valid domain of an operation."""


class DataError(CavhomError, ValueError):
    """Malformed or inconsistent input data (e.g. time-tag files). CLI exit code 3."""


class NumericsError(CavhomError, ArithmeticError):
    """Numerical failure: non-finite values or an identity violated beyond
    its tolerance (usually fixed by refining the grid). CLI exit code 4."""


class GridResolutionWarning(UserWarning):
    """Grid likely too coarse for the requested rates; escalated to
    :class:`NumericsError` in strict mode."""

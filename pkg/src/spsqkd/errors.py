"""Exception types shared across the package."""


class SpsQkdError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SpsQkdError, ValueError):
    """An argument or parameter lies outside the modeled domain."""


class DataError(SpsQkdError, ValueError):
    """Ingested data is malformed or internally inconsistent."""


class InsufficientStatisticsError(DataError):
    """A tally does not contain enough events for the requested estimate."""


class ConfigError(SpsQkdError, ValueError):
    """A configuration key or value is not recognized or cannot be parsed."""

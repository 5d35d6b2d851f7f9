"""Exception hierarchy.

Data-shaped problems derive from :class:`DataError`, bad settings from
:class:`ConfigError`; the CLI maps the two onto exit codes 3 and 2.
"""


class KbootError(Exception):
    """Base class for all package errors."""


class ConfigError(KbootError, ValueError):
    """Invalid parameters or settings."""


class DataError(KbootError, ValueError):
    """Input data is unusable."""


class RankError(ConfigError):
    """Order index outside ``1..p``."""


class EmptyDistributionError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class CapacityError(ConfigError):
    """Subset enumeration would exceed the configured cap."""


class NotPSDError(DataError):
    """Covariance matrix could not be Cholesky-factored, even after jitter."""


class ParseError(DataError):
    pass


class ImputationError(DataError):
    pass


class ShapeError(DataError):
    pass


class DomainError(DataError):
    """Value outside the admissible domain (e.g. a p-value outside [0, 1])."""

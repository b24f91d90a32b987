"""Exception hierarchy shared across the package."""


class QgsError(Exception):
    """Base class for all package-specific errors."""


class DomainError(QgsError, ValueError):
    """An argument lies outside the supported domain of an operation."""


class DegeneracyError(QgsError):
    """The covariance is degenerate (g = 1) where a density is required."""


class CertificationError(QgsError):
    """A numerical result cannot be certified to the required accuracy."""


class PrecisionLossError(CertificationError):
    """Catastrophic cancellation left fewer significant digits than required."""


class ConvergenceError(CertificationError):
    """An iterative or adaptive scheme failed to meet its tolerance."""


class TruncationError(CertificationError):
    """A truncated distribution could not reach the requested tail mass."""


class InsufficientCountsError(QgsError):
    """Too few Monte Carlo counts for a reliable estimate."""


class ConfigError(QgsError, ValueError):
    """Invalid scan or sampler configuration."""

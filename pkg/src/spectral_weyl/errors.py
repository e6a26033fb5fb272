"""Exception types shared across the package."""


class SpectralWeylError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDomainError(SpectralWeylError, ValueError):
    pass


class InvalidBodyError(SpectralWeylError, ValueError):
    pass


class InvalidPointSetError(SpectralWeylError, ValueError):
    pass


class InvalidArgumentError(SpectralWeylError, ValueError):
    pass


class UnsupportedDomainError(SpectralWeylError, TypeError):
    pass


class UndefinedSeparationError(SpectralWeylError, ValueError):
    pass


class CertificateUnavailableError(SpectralWeylError, RuntimeError):
    """The tail of the power spectrum could not be bounded (no measured decay)."""


class FitUnavailableError(SpectralWeylError, RuntimeError):
    """Too few usable counting samples to fit an error exponent."""

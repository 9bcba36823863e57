"""Exception types raised across the package."""


class DmtopoError(Exception):
    """Base class for all package errors."""


class NotHermitian(DmtopoError, ValueError):
    pass


class NonPositiveSpectrum(DmtopoError, ValueError):
    pass


class InvalidParameter(DmtopoError, ValueError):
    pass


class NotTranslationInvariant(DmtopoError, ValueError):
    pass


class NotPTForm(DmtopoError, ValueError):
    """The damping block is not of the pseudo-Hermitian (real alpha, Re n ⟂ Im n) form."""


class NoCommonAxis(DmtopoError, ValueError):
    pass


class AllImaginaryPartsZero(DmtopoError, ValueError):
    pass


class DefectiveBlock(DmtopoError, ValueError):
    """A block sits at an exceptional point; use the propagator engine instead."""


class DimensionMismatch(DmtopoError, ValueError):
    pass


class SpectrumOutOfRange(DmtopoError, ValueError):
    """Correlation spectrum touches 0 or 1, so the modular Hamiltonian diverges."""


class NoBracket(DmtopoError, ValueError):
    pass


class ConfigError(DmtopoError, ValueError):
    pass

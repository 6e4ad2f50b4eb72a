"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`QcorrError`, which is a ``ValueError`` so that callers treating bad
input generically keep working.
"""


class QcorrError(ValueError):
    """Base class for all package errors."""


class NonHermitian(QcorrError):
    pass


class NegativeSpectrum(QcorrError):
    pass


class InvalidState(QcorrError):
    """Matrix is not a density matrix (trace or shape wrong)."""


class MissingDims(QcorrError):
    pass


class DimensionMismatch(QcorrError):
    pass


class LengthMismatch(QcorrError):
    pass


class BadWeights(QcorrError):
    pass


class BadBasis(QcorrError):
    pass


class NotIsometry(QcorrError):
    pass


class DegenerateVariance(QcorrError):
    pass


class DimensionCap(QcorrError):
    pass


class BadPair(QcorrError):
    pass


class StepTooLarge(QcorrError):
    pass


class FormatError(QcorrError):
    """Malformed QMAT or config input."""

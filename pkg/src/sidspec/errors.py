"""Exception hierarchy for the sidspec pipeline.

Numerical failures (rank loss, singular triangular systems, unstable
generators) are kept distinct from validation failures so the CLI can map
them to different exit codes.
"""


class SidspecError(Exception):
    """Base class for all package errors."""


class ValidationError(SidspecError, ValueError):
    """A configuration or model-spec invariant was violated."""


class SignalTooShortError(ValidationError):
    """The time series cannot supply the requested rows plus lag history."""


class NonFiniteError(ValidationError):
    """A NaN or infinity was found where finite data is required."""


class DimensionError(ValidationError):
    """Matrix/vector dimensions are incompatible with the operation."""


class NumericalError(SidspecError, ArithmeticError):
    """Base class for runtime numerical failures."""


class RankDeficiencyError(NumericalError):
    """A column lost essentially all of its norm during orthogonalization."""


class SingularSystemError(NumericalError):
    """A triangular solve met a diagonal entry too small to divide by."""


class UnstableCoefficientsError(NumericalError):
    """Generator coefficients place a pole on or outside the unit circle."""


class GridMismatchError(ValidationError):
    """Two spectra do not share the same frequency grid."""


class NonPositiveBinError(ValidationError):
    """A spectral divergence input contains a bin <= 0."""


class OverlappingWriteError(SidspecError):
    """Debug-mode parallel_for detected writes outside a partition's range."""

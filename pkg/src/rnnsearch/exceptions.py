"""Exception types shared across the package."""


class RnnSearchError(Exception):
    """Base class for every error raised by this package."""


class EmptyArchitecture(RnnSearchError):
    """Decoding produced no layers (all neuron slots disabled)."""


class DimensionMismatch(RnnSearchError):
    """An array does not have the shape the operation requires."""


class DegenerateSample(RnnSearchError):
    """The error sample has zero spread; the truncated-normal fit is undefined."""


class InsufficientData(RnnSearchError):
    """Fewer training points than the model needs."""


class UnsupportedScheme(RnnSearchError):
    """The operation is undefined for this encoding scheme."""


class NumericalDivergence(RnnSearchError):
    """Training loss became non-finite.

    Carries the partial report (loss curve up to the failure) as `.report`.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LookbackTooLarge(RnnSearchError):
    """Requested look-back does not leave room for a single window."""


class EmptySplit(RnnSearchError):
    """A chronological split left one side empty."""


class ParseError(RnnSearchError):
    """A CSV cell could not be parsed; names the offending row/column."""


class RaggedRows(RnnSearchError):
    """CSV rows do not all have the same number of columns."""


class ZeroTarget(RnnSearchError):
    """Percentage error is undefined for a zero target component."""


class BadStrategyCode(RnnSearchError):
    """A strategy code string is malformed; `.position` is the bad index."""

    def __init__(self, message, position):
        super().__init__(message)
        self.position = position

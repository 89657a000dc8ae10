"""Exception types shared across the package."""


class CcmTuneError(Exception):
    """Base class for all package errors."""


class DecodeError(CcmTuneError):
    """Image bytes could not be decoded (malformed or unsupported bit depth)."""


class CropError(CcmTuneError):
    """Requested crop does not fit inside the image."""


class ShapeError(CcmTuneError):
    """An array has the wrong shape for the operation."""


class DimensionMismatchError(CcmTuneError):
    """Two operands that must share a dimension do not."""


class ZeroNormError(CcmTuneError):
    """A vector with zero Euclidean norm where a direction is required."""


class BackendUnavailableError(CcmTuneError):
    """The embedding backend cannot be reached or is not loaded."""


class TokenizeError(CcmTuneError):
    """The prompt cannot be tokenized (usually: exceeds the token limit)."""


class PullbackUnsupportedError(CcmTuneError):
    """The backend is forward-only and cannot compute input gradients."""


class NonFiniteLossError(CcmTuneError):
    """The loss or a gradient became NaN/Inf during optimization."""

    def __init__(self, message, iteration=None, params=None):
        super().__init__(message)
        self.iteration = iteration
        self.params = params


class MatrixFormatError(CcmTuneError):
    """A serialized color matrix is malformed."""


class RowSumError(MatrixFormatError):
    """A parsed matrix is well-formed but its rows do not sum to 1."""

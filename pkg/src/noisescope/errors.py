"""Exception types raised across the package."""


class NoiseScopeError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(NoiseScopeError, ValueError):
    """An argument violates a documented precondition."""


class TooFewSamplesError(InvalidArgumentError):
    """Sample too small for the normality test (n < 3)."""


class TooManySamplesError(InvalidArgumentError):
    """Sample too large for the normality approximation (n > 5000)."""


class DegenerateInputError(InvalidArgumentError):
    """All sample values identical; the test statistic is undefined."""


class DegenerateMaskError(NoiseScopeError):
    """Segmentation produced an empty object or background class."""


class NoCrossingError(NoiseScopeError):
    """The p-value curve never rises above the significance level."""


class NoConvergenceError(NoiseScopeError):
    """The KL curve never stays below the threshold."""


class InvertedRangeError(NoiseScopeError):
    """Estimated sigma_end is not below estimated sigma_start."""


class NonFiniteStateError(NoiseScopeError):
    """An intermediate sampler state became NaN or infinite."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class TrainingDivergedError(NoiseScopeError):
    """Training loss became non-finite."""


class UnsupportedFormatError(NoiseScopeError):
    """Image file is not 8-bit grayscale PNG or PGM."""


class CorruptFileError(NoiseScopeError):
    """Image file could not be decoded."""


class GenerationFailedError(NoiseScopeError):
    """Structure generation exhausted its retry budget."""

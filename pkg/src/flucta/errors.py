"""Exception types shared across the package."""


class FluctaError(ValueError):
    """Base class for all input/parameter problems raised by flucta."""


class ParameterError(FluctaError):
    """A parameter lies outside the range an operation supports."""


class InsufficientDataError(FluctaError):
    """Too few samples, segments or grid points for the requested computation."""


class DegenerateInputError(FluctaError):
    """Input has no variability where the computation needs some."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index

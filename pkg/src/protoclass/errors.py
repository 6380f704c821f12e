"""Exception types shared across the package."""


class ProtoclassError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ProtoclassError):
    """Input dimensionality is inconsistent or unusable."""


class StateError(ProtoclassError):
    """Operation invoked on an object in the wrong state (empty model, ...)."""


class DataError(ProtoclassError):
    """Input data violates a content contract (NaN values, bad labels, ...)."""


class FormatError(ProtoclassError):
    """A file does not conform to its declared layout or version."""


class DegenerateInputError(ProtoclassError):
    """Numerically degenerate input, e.g. a zero vector where a direction is needed."""

class FeatexError(Exception):
    """Base class for extractor errors."""


class DataError(FeatexError):
    """Input tree or image content violates a contract."""

"""Exception types shared across the engine."""


class SketchChainError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(SketchChainError):
    """Input violates a precondition (bad geometry, non-positive values, ...)."""


class ChainTooShortError(InvalidInputError):
    """Chain has too few segments to carry an interior joint."""


class EmptyQueryError(SketchChainError):
    """A sketch produced no usable chains.

    ``code`` is a machine-readable reason, e.g. ``"all_chains_too_simple"``.
    """

    def __init__(self, message: str, code: str):
        super().__init__(message)
        self.code = code


class IndexFormatError(SketchChainError):
    """Index file is unreadable: bad magic, unsupported version, or truncated."""

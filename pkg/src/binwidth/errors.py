"""Exception types shared across the package."""


class BinwidthError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(BinwidthError, ValueError):
    """Tensor dimensions are inconsistent with an operation's contract."""


class InputError(BinwidthError, ValueError):
    """An argument value is outside an operation's domain."""


class FormatError(BinwidthError, ValueError):
    """A serialized file violates its on-disk layout.

    `offset` is the byte offset at which the violation was detected,
    when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(BinwidthError, ValueError):
    """A run configuration is missing, malformed, or inconsistent."""


class DivergenceError(BinwidthError, RuntimeError):
    """Training produced a non-finite loss."""

"""Exception types shared across the package.

The CLI maps ValidationError/FormatError to exit code 2 and anything else to 3.
"""


class AbstractnetError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(AbstractnetError):
    """Arguments or data violate a documented precondition (shapes, ranges, labels)."""


class FormatError(AbstractnetError):
    """A file could not be parsed: bad magic, truncation, malformed JSON or CSV."""


class TrainingError(AbstractnetError):
    """Training diverged (non-finite loss or parameters)."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch

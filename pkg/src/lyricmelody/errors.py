"""Exception hierarchy shared by every stage of the toolkit."""

from __future__ import annotations


class InvalidInput(ValueError):
    """An argument violates an operation's precondition."""


class CapacityError(InvalidInput):
    """A vocabulary cap (words, phrases, bars, sequence length) was exceeded."""


class ParseError(ValueError):
    """Malformed serialized input. ``offset`` is a byte offset or token index."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at {offset})"
        super().__init__(message)


class Rejection(Exception):
    """A song was filtered out by the cleaning pipeline.

    ``reason`` is a stable machine-readable code such as ``"min-bars"``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class EmptyLexiconError(InvalidInput):
    pass


class InvalidMaskError(InvalidInput):
    pass


class SampleRejected(Exception):
    """A pre-training sample could not be built (overflow, empty objective)."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)

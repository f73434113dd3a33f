"""Exception types shared across the pipeline."""

from __future__ import annotations


class TfitError(Exception):
    """A user-facing error anchored at a source location."""

    def __init__(self, message: str, loc=None):
        super().__init__(f"{loc}: {message}" if loc is not None else message)
        self.message = message
        self.loc = loc

"""Exception types shared across the package."""

from __future__ import annotations


class SubgridError(ValueError):
    """Raised when an operation's input contract is violated."""


class FormatError(SubgridError):
    """Raised when a file on disk does not match the expected layout."""

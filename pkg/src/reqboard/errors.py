"""Shared error type: every rejected operation raises a coded ForumError."""

from __future__ import annotations

from typing import Any


class ForumError(Exception):
    """Operation rejected with a machine-readable code.

    ``code`` is stable and matched by callers and the HTTP layer; ``details``
    carries structured context (violations, nearest matches, ...).
    """

    def __init__(self, code: str, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details or {}

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ForumError({self.code!r}, {self.message!r})"


def not_found(what: str, key: str) -> ForumError:
    return ForumError("NOT_FOUND", f"{what} {key!r} does not exist")


def forbidden(message: str) -> ForumError:
    return ForumError("FORBIDDEN", message)

"""Shared exception base classes."""

from __future__ import annotations


class GstError(Exception):
    """Base class for every error raised by this package."""


class InvalidDocumentError(GstError):
    """A document failed schema validation where a valid one was required.

    Carries the full validation report so callers can surface every
    violation, not just the first.
    """

    def __init__(self, report):
        self.report = report
        first = report[0] if report else None
        detail = f"{first.code} {first.path} {first.message}" if first else "invalid"
        super().__init__(f"document failed validation ({len(report)} violation(s)): {detail}")

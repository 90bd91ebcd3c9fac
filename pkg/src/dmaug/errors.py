"""Shared exception types."""

from __future__ import annotations


class DataError(ValueError):
    """Input data violates a documented contract.

    The message always identifies the offending record (span, token index,
    file position, ...) so that batch jobs can report precisely what was
    rejected instead of dying with a bare traceback.
    """


class RemoteServiceError(RuntimeError):
    """Base class for failures while talking to a remote augmentation service."""

"""Discourse-marker augmentation and evaluation toolkit for argument mining."""

from .errors import DataError, RemoteServiceError

__version__ = "0.1.0"

__all__ = ["DataError", "RemoteServiceError", "__version__"]

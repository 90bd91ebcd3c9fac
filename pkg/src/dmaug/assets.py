"""Paths to the small data files bundled with the package.

These are demonstration-scale resources: a starter connective list, the two
sense tables, a frozen word-vector table, and a handful of claim/premise
cores.  Full-scale runs point the CLI at externally supplied files instead.
"""
from importlib.resources import files
from pathlib import Path

from .core import DataError


def _data_path(name: str) -> Path:
    path = Path(str(files("dmaug").joinpath("data", name)))
    if not path.is_file():
        raise DataError(f"bundled data file missing: {name}")
    return path


def default_dm_lexicon_path() -> Path:
    """Connective list for prefix matching, one marker per line."""
    return _data_path("dm_lexicon.txt")


def default_sense_lexicon_path(kind: str) -> Path:
    """Sense table for ``arg_marker`` or ``disc_rel``."""
    if kind not in ("arg_marker", "disc_rel"):
        raise DataError(f"unknown sense inventory {kind!r}")
    return _data_path(f"{kind}_senses.tsv")


def default_vectors_path() -> Path:
    """Frozen demonstration word-vector table."""
    return _data_path("demo_vectors.txt")


def default_cores_path() -> Path:
    """Claim/premise cores for the synthetic generator."""
    return _data_path("demo_cores.tsv")

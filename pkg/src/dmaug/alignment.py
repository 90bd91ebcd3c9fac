"""Global token alignment and label projection across edited sequences.

When an augmenter rewrites a tokenized paragraph, the gold BIO labels live on
the old tokens.  This module aligns old and new sequences globally and moves
labels across the alignment, which is what makes augmented corpora trainable
and predictions on them comparable to the original gold standard.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

from .core import LabelSequence, repair_bio
from .errors import DataError


def tokens_equal(a: str, b: str) -> bool:
    """Case-insensitive token identity; the only comparison alignment uses."""
    return a.casefold() == b.casefold()


@dataclass(frozen=True)
class ScoringScheme:
    """Additive scores for aligned pairs and gaps (defaults: +1 / -1 / -1)."""

    match: float = 1.0
    mismatch: float = -1.0
    gap: float = -1.0


DEFAULT_SCHEME = ScoringScheme()


@dataclass(frozen=True)
class Alignment:
    """A global alignment as ordered index pairs; ``None`` marks a gap.

    ``(i, j)`` aligns token ``i`` of the first sequence to token ``j`` of the
    second; ``(i, None)`` leaves token ``i`` unmatched (the gap sits in the
    second sequence), ``(None, j)`` the reverse.  Indices on each side appear
    exactly once, in increasing order.
    """

    pairs: tuple[tuple[Optional[int], Optional[int]], ...]
    score: float

    def first_indices(self) -> list[int]:
        return [i for i, _ in self.pairs if i is not None]

    def second_indices(self) -> list[int]:
        return [j for _, j in self.pairs if j is not None]


def score_pairs(
    pairs: Sequence[tuple[Optional[int], Optional[int]]],
    a: Sequence[str],
    b: Sequence[str],
    scheme: ScoringScheme = DEFAULT_SCHEME,
) -> float:
    """Recompute the score of an alignment from scratch (used by checks)."""
    total = 0.0
    for i, j in pairs:
        if i is None or j is None:
            total += scheme.gap
        elif tokens_equal(a[i], b[j]):
            total += scheme.match
        else:
            total += scheme.mismatch
    return total


def needleman_wunsch(
    a: Sequence[str],
    b: Sequence[str],
    scheme: ScoringScheme = DEFAULT_SCHEME,
) -> Alignment:
    """Optimal global alignment of two token sequences.

    Quadratic dynamic program over case-insensitive token equality.  Ties are
    broken deterministically during traceback: a diagonal step (match or
    mismatch) wins over consuming a token of ``a`` against a gap, which wins
    over consuming a token of ``b``.
    """
    la, lb = len(a), len(b)
    m = [[0.0] * (lb + 1) for _ in range(la + 1)]
    for i in range(1, la + 1):
        m[i][0] = i * scheme.gap
    for j in range(1, lb + 1):
        m[0][j] = j * scheme.gap
    for i in range(1, la + 1):
        ai = a[i - 1]
        row, above = m[i], m[i - 1]
        for j in range(1, lb + 1):
            diag = above[j - 1] + (scheme.match if tokens_equal(ai, b[j - 1]) else scheme.mismatch)
            up = above[j] + scheme.gap
            left = row[j - 1] + scheme.gap
            best = diag if diag >= up else up
            if left > best:
                best = left
            row[j] = best

    pairs: list[tuple[Optional[int], Optional[int]]] = []
    i, j = la, lb
    while i > 0 or j > 0:
        here = m[i][j]
        if i > 0 and j > 0 and here == m[i - 1][j - 1] + (
            scheme.match if tokens_equal(a[i - 1], b[j - 1]) else scheme.mismatch
        ):
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and here == m[i - 1][j] + scheme.gap:
            pairs.append((i - 1, None))
            i -= 1
        else:
            pairs.append((None, j - 1))
            j -= 1
    pairs.reverse()
    return Alignment(tuple(pairs), m[la][lb])


def project_labels(
    alignment: Alignment,
    labels: Sequence[str],
    interior: str = "contiguity",
) -> LabelSequence:
    """Carry BIO labels from the first sequence of ``alignment`` to the second.

    Aligned tokens copy their label (also across mismatches -- an edited token
    keeps its role).  Tokens of the second sequence aligned to gaps are new
    material and get "O", except single-run insertions strictly inside a span:
    with the default ``interior="contiguity"`` policy an inserted token whose
    nearest aligned neighbours are part of the same span (left B-t/I-t, right
    I-t) becomes I-t, so spans do not fragment.  ``interior="strict"`` always
    assigns "O".  The result is repaired to valid BIO either way.
    """
    if interior not in ("contiguity", "strict"):
        raise DataError(f"unknown interior policy {interior!r}")
    first_count = sum(1 for i, _ in alignment.pairs if i is not None)
    if first_count != len(labels):
        raise DataError(
            f"alignment covers {first_count} source tokens but {len(labels)} labels given"
        )
    second_count = sum(1 for _, j in alignment.pairs if j is not None)
    anchors: list[Optional[str]] = [None] * second_count
    inserted: list[int] = []
    for i, j in alignment.pairs:
        if j is None:
            continue
        if i is None:
            inserted.append(j)
        else:
            anchors[j] = labels[i]

    out: list[str] = ["O" if tag is None else tag for tag in anchors]
    if interior == "contiguity":
        for j in inserted:
            left = next((anchors[k] for k in range(j - 1, -1, -1) if anchors[k] is not None), None)
            right = next((anchors[k] for k in range(j + 1, second_count) if anchors[k] is not None), None)
            if left is not None and left != "O" and right == "I-" + left[2:]:
                out[j] = right
    return repair_bio(out)

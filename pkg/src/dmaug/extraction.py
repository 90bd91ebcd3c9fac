"""Finding, removing and recovering discourse markers around ADUs.

Two extraction heuristics cover the two annotation styles found in argument
corpora: markers living *between* units (take the gap to the left of each
unit) and markers annotated *inside* the unit (split off a known marker
prefix).  Removal inverts them grammatically -- substituting a comma or fixing
sentence capitalization -- and the diff recovery turns a rewritten text back
into per-unit marker predictions.
"""

from __future__ import annotations

import difflib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .core import (
    AduSpan,
    DmSlot,
    LabelSequence,
    TokenSequence,
    bio_to_spans,
    capitalize_first,
    check_spans,
    detokenize,
    normalize_dm,
    sentence_start_of,
    sentence_starts,
    spans_to_bio,
    tokenize,
)
from .errors import DataError

# Punctuation that counts as "already separated" when deciding whether a
# removed mid-sentence marker needs a comma in its place.
_SEPARATORS = frozenset({",", ";", ":", "—", "(", '"'})


def _is_punct(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


@dataclass(frozen=True, init=False)
class DmLexicon:
    """A set of known markers, matched case-insensitively and longest-first."""

    entries: frozenset[tuple[str, ...]]
    max_tokens: int

    def __init__(self, texts: Iterable[str]):
        entries = set()
        for text in texts:
            toks = tuple(tok.casefold() for tok in tokenize(normalize_dm(text)))
            if not toks:
                raise DataError(f"lexicon entry {text!r} contains no tokens")
            entries.add(toks)
        object.__setattr__(self, "entries", frozenset(entries))
        object.__setattr__(self, "max_tokens", max((len(e) for e in entries), default=0))

    @classmethod
    def load(cls, path: str | Path) -> "DmLexicon":
        """One lowercased marker per line; blank lines and ``#`` comments skipped."""
        texts = []
        with Path(path).open(encoding="utf-8") as fh:
            for raw in fh:
                line = raw.strip()
                if line and not line.startswith("#"):
                    texts.append(line)
        return cls(texts)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, text: str) -> bool:
        return tuple(tok.casefold() for tok in tokenize(normalize_dm(text))) in self.entries

    def match_prefix(self, tokens: Sequence[str], start: int, end: int) -> int:
        """Longest entry matching ``tokens[start:...]`` within ``end``; 0 if none."""
        limit = min(self.max_tokens, end - start)
        for k in range(limit, 0, -1):
            candidate = tuple(tok.casefold() for tok in tokens[start : start + k])
            if candidate in self.entries:
                return k
        return 0


@dataclass(frozen=True)
class AnnotatedParagraph:
    """Tokens plus ordered, disjoint ADU spans and sentence starts."""

    tokens: TokenSequence
    adus: tuple[AduSpan, ...]
    sentence_bounds: tuple[int, ...]

    def __post_init__(self):
        ordered = tuple(check_spans(self.adus, len(self.tokens)))
        object.__setattr__(self, "adus", ordered)
        bounds = self.sentence_bounds
        if not len(self.tokens):
            if bounds:
                raise DataError("an empty paragraph has no sentence bounds")
            return
        if not bounds or bounds[0] != 0:
            raise DataError("sentence bounds must start at token 0")
        if list(bounds) != sorted(set(bounds)) or bounds[-1] >= len(self.tokens):
            raise DataError(f"sentence bounds {bounds} do not partition the token range")

    @classmethod
    def build(
        cls,
        tokens: TokenSequence | Sequence[str],
        adus: Sequence[AduSpan],
        sentence_bounds: Optional[Sequence[int]] = None,
    ) -> "AnnotatedParagraph":
        toks = tokens if isinstance(tokens, TokenSequence) else TokenSequence(tokens)
        if sentence_bounds is None:
            sentence_bounds = sentence_starts(list(toks))
        return cls(toks, tuple(adus), tuple(sentence_bounds))

    @classmethod
    def from_labels(cls, tokens: TokenSequence | Sequence[str], labels: Sequence[str]) -> "AnnotatedParagraph":
        toks = tokens if isinstance(tokens, TokenSequence) else TokenSequence(tokens)
        if len(labels) != len(toks):
            raise DataError(f"{len(toks)} tokens but {len(labels)} labels")
        return cls.build(toks, bio_to_spans(labels))

    def labels(self) -> LabelSequence:
        return spans_to_bio(self.adus, len(self.tokens))

    def text(self) -> str:
        return self.tokens.text()


# ---------------------------------------------------------------------------
# Gold extraction heuristics
# ---------------------------------------------------------------------------


def gold_dms_left_context(paragraph: AnnotatedParagraph) -> list[DmSlot]:
    """Marker of each unit = the gap to its left, within its sentence.

    The gap runs from the later of the sentence start and the previous unit's
    end up to the unit start.  Punctuation-only edges are trimmed; a gap that
    is empty or pure punctuation means the relation is implicit.
    """
    slots: list[DmSlot] = []
    for idx, adu in enumerate(paragraph.adus):
        sentence = sentence_start_of(paragraph.sentence_bounds, adu.start)
        prev_end = paragraph.adus[idx - 1].end if idx else 0
        gap = list(paragraph.tokens[max(sentence, prev_end) : adu.start])
        while gap and _is_punct(gap[0]):
            gap.pop(0)
        while gap and _is_punct(gap[-1]):
            gap.pop()
        slots.append(DmSlot(idx, detokenize(gap)))
    return slots


def gold_dms_prefix_split(
    paragraph: AnnotatedParagraph, lexicon: DmLexicon
) -> tuple[AnnotatedParagraph, list[DmSlot]]:
    """Split a known marker off the front of each unit.

    Returns the paragraph with trimmed unit spans plus one slot per unit.
    A unit consisting of nothing but its marker is rejected by index -- that
    is an annotation error, not an implicit relation.
    """
    new_spans: list[AduSpan] = []
    slots: list[DmSlot] = []
    for idx, adu in enumerate(paragraph.adus):
        matched = lexicon.match_prefix(paragraph.tokens, adu.start, adu.end)
        if not matched:
            new_spans.append(adu)
            slots.append(DmSlot(idx, ""))
            continue
        if adu.start + matched >= adu.end:
            raise DataError(f"ADU {idx} would be empty after splitting off its marker")
        slots.append(DmSlot(idx, detokenize(paragraph.tokens[adu.start : adu.start + matched])))
        new_spans.append(AduSpan(adu.start + matched, adu.end, adu.label))
    return replace(paragraph, adus=tuple(new_spans)), slots


# ---------------------------------------------------------------------------
# Marker removal
# ---------------------------------------------------------------------------


def _locate_marker(paragraph: AnnotatedParagraph, slot: DmSlot, adu: AduSpan, prev_end: int) -> tuple[int, int]:
    """Find the marker's token range in the gap before its unit."""
    wanted = [tok.casefold() for tok in tokenize(slot.text)]
    sentence = sentence_start_of(paragraph.sentence_bounds, adu.start)
    lo = max(sentence, prev_end)
    n = len(wanted)
    for start in range(adu.start - n, lo - 1, -1):
        if [tok.casefold() for tok in paragraph.tokens[start : start + n]] == wanted:
            return start, start + n
    raise DataError(f"slot {slot.adu_index}: marker {slot.text!r} not found before its ADU")


def remove_explicit_dms(
    paragraph: AnnotatedParagraph, slots: Sequence[DmSlot]
) -> AnnotatedParagraph:
    """Delete the given explicit markers and repair the surrounding grammar.

    A sentence-initial marker disappears along with any trailing punctuation,
    and the following content is re-capitalized.  A mid-sentence marker not
    already separated by punctuation is replaced by a comma; otherwise it is
    simply dropped.  Unit spans are re-indexed onto the shorter sequence.
    """
    if len(slots) != len(paragraph.adus):
        raise DataError(f"{len(slots)} slots for {len(paragraph.adus)} ADUs")
    tokens = list(paragraph.tokens)
    # (start, end, replacement, recapitalize_following)
    edits: list[tuple[int, int, list[str], bool]] = []
    for idx, (slot, adu) in enumerate(zip(slots, paragraph.adus)):
        if not slot.is_explicit:
            continue
        prev_end = paragraph.adus[idx - 1].end if idx else 0
        start, end = _locate_marker(paragraph, slot, adu, prev_end)
        while end < adu.start and tokens[end] == ",":
            end += 1  # the marker takes its trailing comma with it
        sentence = sentence_start_of(paragraph.sentence_bounds, start)
        if start == sentence:
            edits.append((start, end, [], True))
        elif tokens[start - 1] in _SEPARATORS:
            edits.append((start, end, [], False))
        else:
            edits.append((start, end, [","], False))

    edits.sort()
    for (s1, e1, *_), (s2, _, *_) in zip(edits, edits[1:]):
        if s2 < e1:
            raise DataError(f"marker removals at {s1} and {s2} overlap")

    new_tokens: list[str] = []
    offset_at: dict[int, int] = {}
    pos = 0
    recap_positions: list[int] = []
    for start, end, replacement, recap in edits:
        for old in range(pos, start):
            offset_at[old] = len(new_tokens)
            new_tokens.append(tokens[old])
        new_tokens.extend(replacement)
        if recap and end < len(tokens):
            recap_positions.append(len(new_tokens))
        pos = end
    for old in range(pos, len(tokens)):
        offset_at[old] = len(new_tokens)
        new_tokens.append(tokens[old])
    for at in recap_positions:
        new_tokens[at] = capitalize_first(new_tokens[at])

    new_spans = []
    for adu in paragraph.adus:
        new_start = offset_at[adu.start]
        new_end = offset_at[adu.end - 1] + 1
        new_spans.append(AduSpan(new_start, new_end, adu.label))
    return AnnotatedParagraph.build(TokenSequence(new_tokens), new_spans)


# ---------------------------------------------------------------------------
# Diff-based recovery of predicted markers
# ---------------------------------------------------------------------------


def diff_predicted_dms(
    input_tokens: Sequence[str],
    output_tokens: Sequence[str],
    candidate_positions: Sequence[int],
    window: int = 3,
) -> list[DmSlot]:
    """Recover the markers a rewriter inserted, one slot per candidate.

    Decomposes the edit into longest matching blocks and keeps the inserted
    blocks; every other difference (replacements, deletions) is a rewrite
    artefact and is discarded.  An inserted block fills the candidate nearest
    to its insertion point, if that is at most ``window`` tokens away and the
    candidate is still free; leftover insertions are dropped.  Candidates are
    usually the unit start positions of ``input_tokens``.

    A replacement that merely recases the original tokens around new material
    (``It`` -> ``Because it``) still counts as an insertion: sentence-initial
    markers routinely demote the capital of the word they displace.
    """
    matcher = difflib.SequenceMatcher(a=list(input_tokens), b=list(output_tokens), autojunk=False)
    inserts: list[tuple[int, list[str]]] = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "replace":
            kept = [t.casefold() for t in input_tokens[i1:i2]]
            new = [t.casefold() for t in output_tokens[j1:j2]]
            if len(new) > len(kept) and new[len(new) - len(kept) :] == kept:
                # original tokens survive (possibly recased) after the insert
                tag, j2 = "insert", j2 - (i2 - i1)
                i2 = i1
            elif len(new) > len(kept) and new[: len(kept)] == kept:
                tag, j1 = "insert", j1 + (i2 - i1)
                i1 = i2
        if tag != "insert":
            continue
        block = list(output_tokens[j1:j2])
        while block and _is_punct(block[0]):
            block.pop(0)
        while block and _is_punct(block[-1]):
            block.pop()
        if block:
            inserts.append((i1, block))

    def nearest(pos: int) -> Optional[int]:
        best, best_dist = None, window + 1
        for cand_idx, cand in enumerate(candidate_positions):
            dist = abs(pos - cand)
            if dist < best_dist:
                best, best_dist = cand_idx, dist
        return best

    texts: dict[int, str] = {}
    claimed: dict[int, int] = {}
    for order, (pos, block) in enumerate(inserts):
        cand_idx = nearest(pos)
        if cand_idx is None:
            continue
        dist = abs(pos - candidate_positions[cand_idx])
        if cand_idx in claimed and claimed[cand_idx] <= dist:
            continue
        claimed[cand_idx] = dist
        texts[cand_idx] = detokenize(block)
    return [DmSlot(idx, texts.get(idx, "")) for idx in range(len(candidate_positions))]

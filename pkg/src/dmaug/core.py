"""Token-level data model: tokenization, BIO tags, ADU spans, CoNLL files.

Everything downstream (extraction, alignment, augmentation, metrics) works on
the types defined here.  The tokenizer is deliberately rule-based and frozen:
its exact behaviour is pinned by golden tests, because span offsets, alignment
and diff recovery all assume that the same text always tokenizes the same way.
"""

from __future__ import annotations

import re
import unicodedata
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DataError

# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

# Order matters: numbers with internal separators ("3.5", "1,000") before
# plain words, clitics ("'t", "'s") before single punctuation characters.
# Hyphenated words stay whole so that detokenize() can invert the split.
_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)+|\w+(?:-\w+)*|'\w+|[^\w\s]")

# Punctuation that attaches to the preceding token when detokenizing.
_CLOSERS = frozenset({".", ",", ";", ":", "!", "?", ")", "]", "}", "%"})
# Brackets that attach to the following token.
_OPENERS = frozenset({"(", "[", "{"})

_TERMINALS = frozenset({".", "!", "?"})
_TRAILERS = frozenset({'"', "'", ")", "]", "}"})

_WORD_START = re.compile(r"\w")


def tokenize(text: str) -> list[str]:
    """Split ``text`` into word and punctuation tokens.

    The input is NFC-normalized first.  Punctuation becomes separate tokens
    ("However," -> ["However", ","]), apostrophe clitics split off their host
    ("don't" -> ["don", "'t"]), while hyphenated words and decimal numbers
    stay whole.  Whitespace never survives into a token; empty input gives an
    empty list.
    """
    return _TOKEN_RE.findall(unicodedata.normalize("NFC", text))


def detokenize(tokens: Iterable[str]) -> str:
    """Join tokens back into running text.

    Inserts single spaces except before closing punctuation, after opening
    brackets, and around clitics; straight quotes are paired by parity.  For
    any ``text`` produced by this function, ``tokenize`` is an exact inverse.
    """
    out: list[str] = []
    prev: Optional[str] = None
    dq_open = False  # parity of straight double quotes seen so far
    sq_open = False  # parity of bare single quotes (clitics excluded)
    for tok in tokens:
        if prev is None:
            sep = ""
        elif tok in _CLOSERS:
            sep = ""
        elif tok == '"':
            sep = "" if dq_open else " "
        elif tok == "'":
            sep = "" if sq_open else " "
        elif tok.startswith("'") and len(tok) > 1:
            sep = ""  # clitic re-attaches to its host
        elif prev in _OPENERS:
            sep = ""
        elif prev == '"' and dq_open:
            sep = ""
        elif prev == "'" and sq_open:
            # Gluing a word onto an opening quote ("' s" -> "'s") would read
            # back as a clitic, so only attach punctuation-like tokens.
            sep = " " if _WORD_START.match(tok) else ""
        else:
            sep = " "
        out.append(sep + tok)
        if tok == '"':
            dq_open = not dq_open
        elif tok == "'":
            sq_open = not sq_open
        prev = tok
    return "".join(out)


def sentence_starts(tokens: Sequence[str]) -> list[int]:
    """Indices where sentences begin, by terminal-punctuation heuristic.

    The first sentence starts at 0.  A run of ``. ! ?`` (plus any closing
    quotes or brackets trailing it) ends a sentence; the next remaining token
    opens a new one.  No abbreviation handling -- inputs here are paragraph
    fragments, not arbitrary prose.
    """
    if not tokens:
        return []
    starts = [0]
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i] in _TERMINALS:
            j = i + 1
            while j < n and (tokens[j] in _TERMINALS or tokens[j] in _TRAILERS):
                j += 1
            if j < n:
                starts.append(j)
            i = j
        else:
            i += 1
    return starts


def sentence_start_of(starts: Sequence[int], index: int) -> int:
    """The sentence start covering token ``index`` (``starts`` ascending)."""
    best = starts[0]
    for s in starts:
        if s <= index:
            best = s
        else:
            break
    return best


def capitalize_first(text: str) -> str:
    """Uppercase the first cased character of ``text``; no-op without one."""
    for i, ch in enumerate(text):
        if ch.isalpha():
            return text[:i] + ch.upper() + text[i + 1 :]
    return text


def lowercase_first(text: str) -> str:
    """Lowercase the first cased character of ``text``; no-op without one."""
    for i, ch in enumerate(text):
        if ch.isalpha():
            return text[:i] + ch.lower() + text[i + 1 :]
    return text


def normalize_dm(text: str) -> str:
    """Canonical form for comparing discourse markers.

    Lowercases, trims whitespace and strips at most one trailing comma, so
    that "Moreover," and "moreover" compare equal.  Used for lexicon lookup
    and slot matching throughout.
    """
    t = unicodedata.normalize("NFC", text).strip().lower()
    if t.endswith(","):
        t = t[:-1].rstrip()
    return t


def dm_equal(a: str, b: str) -> bool:
    """Case-insensitive marker equality modulo one trailing comma."""
    return normalize_dm(a) == normalize_dm(b)


# ---------------------------------------------------------------------------
# Sequences and spans
# ---------------------------------------------------------------------------


@dataclass(frozen=True, init=False)
class TokenSequence(Sequence[str]):
    """An immutable sequence of non-empty, whitespace-free tokens."""

    tokens: tuple[str, ...]

    def __init__(self, tokens: Iterable[str]):
        toks = tuple(tokens)
        for i, t in enumerate(toks):
            if not t:
                raise DataError(f"empty token at position {i}")
            if any(ch.isspace() for ch in t):
                raise DataError(f"token {t!r} at position {i} contains whitespace")
        object.__setattr__(self, "tokens", toks)

    @classmethod
    def from_text(cls, text: str) -> "TokenSequence":
        return cls(tokenize(text))

    def text(self) -> str:
        return detokenize(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, index):  # slices give plain tuples
        return self.tokens[index]


_TAG_RE = re.compile(r"O$|[BI]-\S+$")


def _check_tag(tag: str, position: int) -> None:
    if not _TAG_RE.match(tag):
        raise DataError(f"malformed tag {tag!r} at position {position}")


@dataclass(frozen=True, init=False)
class LabelSequence(Sequence[str]):
    """A sequence of BIO tags: "O" or "B-<type>"/"I-<type>".

    Only tag *syntax* is enforced here.  Transition validity (every I-t
    preceded by B-t or I-t) is checked by :func:`is_valid_bio` and restored
    by :func:`repair_bio`, because predicted sequences routinely violate it.
    """

    tags: tuple[str, ...]

    def __init__(self, tags: Iterable[str]):
        tgs = tuple(tags)
        for i, t in enumerate(tgs):
            _check_tag(t, i)
        object.__setattr__(self, "tags", tgs)

    def __len__(self) -> int:
        return len(self.tags)

    def __getitem__(self, index):
        return self.tags[index]


def is_valid_bio(tags: Sequence[str]) -> bool:
    """True if every I-t is preceded by B-t or I-t of the same type."""
    prev = "O"
    for i, tag in enumerate(tags):
        _check_tag(tag, i)
        if tag.startswith("I-") and prev not in (f"B-{tag[2:]}", tag):
            return False
        prev = tag
    return True


def repair_bio(tags: Sequence[str]) -> LabelSequence:
    """Promote stray I-t tags to B-t so the sequence becomes valid BIO."""
    fixed: list[str] = []
    prev = "O"
    for i, tag in enumerate(tags):
        _check_tag(tag, i)
        if tag.startswith("I-") and prev not in (f"B-{tag[2:]}", tag):
            tag = "B-" + tag[2:]
        fixed.append(tag)
        prev = tag
    return LabelSequence(fixed)


@dataclass(frozen=True, order=True)
class AduSpan:
    """A labelled token span, start inclusive and end exclusive."""

    start: int
    end: int
    label: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"degenerate span {self.start}..{self.end} ({self.label})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class CorpusSchema:
    """Named set of ADU labels a corpus may use."""

    name: str
    labels: frozenset[str]

    def check(self, label: str) -> None:
        if label not in self.labels:
            raise DataError(f"label {label!r} not in schema {self.name!r}")


PEC = CorpusSchema("pec", frozenset({"Premise", "Claim", "MajorClaim"}))
MTX = CorpusSchema("mtx", frozenset({"Premise", "Claim"}))
HOTEL = CorpusSchema(
    "hotel",
    frozenset(
        {"Background", "Claim", "ImplicitPremise", "MajorClaim", "Premise", "Recommendation"}
    ),
)

SCHEMAS = {s.name: s for s in (PEC, MTX, HOTEL)}


@dataclass(frozen=True)
class DmSlot:
    """The discourse marker attached to one ADU; empty text means implicit."""

    adu_index: int
    text: str

    @property
    def is_explicit(self) -> bool:
        return bool(self.text)


# ---------------------------------------------------------------------------
# Span <-> BIO conversion
# ---------------------------------------------------------------------------


def check_spans(spans: Sequence[AduSpan], length: int, schema: Optional[CorpusSchema] = None) -> list[AduSpan]:
    """Validate that spans fit in ``length`` tokens and do not overlap.

    Returns the spans sorted by start offset.  The error message names the
    offending span, which in practice is the only way to debug a miscut
    annotation file.
    """
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    prev: Optional[AduSpan] = None
    for span in ordered:
        if schema is not None:
            schema.check(span.label)
        if span.end > length:
            raise DataError(f"span {span} exceeds sequence length {length}")
        if prev is not None and span.start < prev.end:
            raise DataError(f"span {span} overlaps {prev}")
        prev = span
    return ordered


def spans_to_bio(spans: Sequence[AduSpan], length: int, schema: Optional[CorpusSchema] = None) -> LabelSequence:
    """Render non-overlapping spans as a BIO tag sequence of ``length``."""
    tags = ["O"] * length
    for span in check_spans(spans, length, schema):
        tags[span.start] = "B-" + span.label
        for i in range(span.start + 1, span.end):
            tags[i] = "I-" + span.label
    return LabelSequence(tags)


def bio_to_spans(tags: Sequence[str], strict: bool = False) -> list[AduSpan]:
    """Decode BIO tags into spans.

    By default a stray I-t (no preceding B-t/I-t of the same type) starts a
    new span, which is what every chunking evaluation expects from predicted
    tags.  With ``strict=True`` the same situation raises instead, naming the
    offending index.
    """
    spans: list[AduSpan] = []
    start: Optional[int] = None
    label: Optional[str] = None

    def flush(end: int) -> None:
        nonlocal start, label
        if start is not None:
            spans.append(AduSpan(start, end, label))  # type: ignore[arg-type]
        start = label = None

    for i, tag in enumerate(tags):
        _check_tag(tag, i)
        if tag == "O":
            flush(i)
        elif tag.startswith("B-"):
            flush(i)
            start, label = i, tag[2:]
        else:  # I-
            if label != tag[2:]:
                if strict:
                    raise DataError(f"I-{tag[2:]} at position {i} continues nothing")
                flush(i)
                start, label = i, tag[2:]
    flush(len(tags))
    return spans


# ---------------------------------------------------------------------------
# CoNLL-style files
# ---------------------------------------------------------------------------


def read_conll(path: str | Path) -> list[tuple[TokenSequence, LabelSequence]]:
    """Read tab-separated token/tag pairs, sequences separated by blank lines.

    Tokens are NFC-normalized on the way in.  Malformed lines raise
    :class:`DataError` as ``path:lineno: reason``.
    """
    path = Path(path)
    sequences: list[tuple[TokenSequence, LabelSequence]] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        nonlocal tokens, tags
        if tokens:
            sequences.append((TokenSequence(tokens), LabelSequence(tags)))
        tokens, tags = [], []

    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>tag', got {line!r}")
            token = unicodedata.normalize("NFC", fields[0])
            if any(ch.isspace() for ch in token):
                raise DataError(f"{path}:{lineno}: token {token!r} contains whitespace")
            if not _TAG_RE.match(fields[1]):
                raise DataError(f"{path}:{lineno}: malformed tag {fields[1]!r}")
            tokens.append(token)
            tags.append(fields[1])
    flush()
    return sequences


def write_conll(path: str | Path, sequences: Iterable[tuple[Sequence[str], Sequence[str]]]) -> None:
    """Write sequences in the format read by :func:`read_conll`."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        first = True
        for tokens, tags in sequences:
            if len(tokens) != len(tags):
                raise DataError(
                    f"sequence has {len(tokens)} tokens but {len(tags)} tags"
                )
            if not first:
                fh.write("\n")
            for token, tag in zip(tokens, tags):
                fh.write(f"{token}\t{tag}\n")
            first = False

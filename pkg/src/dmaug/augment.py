"""Marker insertion: a deterministic lexicon baseline, a remote-model client,
and the builders that turn corpus records into seq2seq training pairs."""
from __future__ import annotations

import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import requests

from .artificial import ROLE_ATTACK, ROLE_CLAIM, ROLE_SUPPORT, DmPolicy
from .core import DataError, capitalize_first, detokenize, lowercase_first, tokenize
from .errors import RemoteServiceError
from .extraction import AnnotatedParagraph, gold_dms_left_context

__all__ = [
    "AugmentRequest",
    "DiscoveryPair",
    "ExplicitRelation",
    "ImplicitRelation",
    "PdtbDocument",
    "RemoteTimeout",
    "RemoteUnavailable",
    "RemoteProtocolError",
    "DEFAULT_ROLE_MAPS",
    "plan_rule_inserts",
    "rule_based_augment",
    "remote_augment",
    "remote_augment_many",
    "prepare_discovery_pair",
    "prepare_pdtb_pairs",
    "read_discovery_tsv",
    "read_pdtb_jsonl",
    "write_pairs_jsonl",
    "read_pairs_jsonl",
]


# Label-to-role defaults per corpus schema.  Premises count as supportive:
# telling support from attack would need relation annotations, which the
# sequence-labeling layer does not carry.
DEFAULT_ROLE_MAPS: Mapping[str, Mapping[str, str]] = {
    "pec": {"MajorClaim": ROLE_CLAIM, "Claim": ROLE_CLAIM, "Premise": ROLE_SUPPORT},
    "mtx": {"claim": ROLE_CLAIM, "premise": ROLE_SUPPORT},
    "hotel": {
        "claim": ROLE_CLAIM,
        "implicit_claim": ROLE_CLAIM,
        "premise": ROLE_SUPPORT,
    },
    "artificial": {"Claim": ROLE_CLAIM, "Premise": ROLE_SUPPORT},
}


# ---------------------------------------------------------------------------
# Rule baseline
# ---------------------------------------------------------------------------


def plan_rule_inserts(
    paragraph: AnnotatedParagraph,
    policy: DmPolicy,
    role_map: Mapping[str, str],
) -> list[tuple[int, tuple[str, ...]]]:
    """Decide which marker tokens to splice in before each unfilled unit.

    Returns (token position, marker tokens) pairs in ascending position
    order.  Units already introduced by a marker are left alone.  A unit
    opening a later sentence takes a detached marker with a trailing comma; a
    unit opening the paragraph takes a capitalized fused marker; anything
    mid-sentence takes a lowercase fused marker.
    """
    slots = gold_dms_left_context(paragraph)
    inserts: list[tuple[int, tuple[str, ...]]] = []
    for index, (slot, adu) in enumerate(zip(slots, paragraph.adus)):
        if slot.is_explicit:
            continue
        role = role_map.get(adu.label)
        if role is None:
            raise DataError(f"no role class mapped for unit label {adu.label!r}")
        sentence_initial = adu.start in paragraph.sentence_bounds
        lead = sentence_initial and adu.start != 0
        dm = policy.choose(role, lead, index, adu.start, adu.label)
        tokens = tokenize(dm)
        if lead:
            tokens = [capitalize_first(tokens[0]), *tokens[1:], ","]
        elif sentence_initial:
            tokens = [capitalize_first(tokens[0]), *tokens[1:]]
        inserts.append((adu.start, tuple(tokens)))
    return inserts


def rule_based_augment(
    paragraph: AnnotatedParagraph,
    policy: DmPolicy = DmPolicy(),
    role_map: Union[str, Mapping[str, str]] = "artificial",
) -> str:
    """Insert a policy marker before every unit that lacks one.

    ``role_map`` maps unit labels to the role classes the policy knows; the
    name of a built-in default map is accepted.  Existing tokens are never
    altered, so a token diff against the input shows insertions only.
    """
    if isinstance(role_map, str):
        try:
            role_map = DEFAULT_ROLE_MAPS[role_map]
        except KeyError:
            raise DataError(f"no built-in role map named {role_map!r}") from None
    inserts = dict(plan_rule_inserts(paragraph, policy, role_map))
    out: list[str] = []
    for position, token in enumerate(paragraph.tokens):
        if position in inserts:
            out.extend(inserts[position])
        out.append(token)
    return detokenize(out)


# ---------------------------------------------------------------------------
# Remote client
# ---------------------------------------------------------------------------


class RemoteTimeout(RemoteServiceError):
    """The service did not answer within the configured budget."""


class RemoteUnavailable(RemoteServiceError):
    """The service could not be reached at all."""


class RemoteProtocolError(RemoteServiceError):
    """The service answered, but not with the agreed shape."""


@dataclass(frozen=True)
class AugmentRequest:
    """One text to augment, with optional known unit-start positions."""

    text: str
    candidate_positions: tuple[int, ...] = ()
    model: str = "default"

    def __post_init__(self):
        if not self.text.strip():
            raise DataError("cannot augment empty text")
        limit = len(tokenize(self.text))
        previous = -1
        for pos in self.candidate_positions:
            if not 0 <= pos < limit:
                raise DataError(f"candidate position {pos} outside 0..{limit - 1}")
            if pos <= previous:
                raise DataError("candidate positions must be strictly increasing")
            previous = pos


def _post_json(url: str, payload: dict, timeout: float, retries: int) -> dict:
    last: Optional[Exception] = None
    for _ in range(retries + 1):
        try:
            response = requests.post(url, json=payload, timeout=timeout)
        except requests.Timeout as exc:
            last = RemoteTimeout(f"no answer from {url} within {timeout:.0f}s")
            last.__cause__ = exc
            continue
        except requests.ConnectionError as exc:
            last = RemoteUnavailable(f"cannot reach {url}")
            last.__cause__ = exc
            continue
        if response.status_code != 200:
            raise RemoteProtocolError(
                f"{url} answered {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise RemoteProtocolError(f"{url} returned a non-JSON body") from exc
    assert last is not None
    raise last


def remote_augment(
    request: AugmentRequest,
    endpoint: str,
    timeout: float = 30.0,
    retries: int = 1,
) -> str:
    """Ask a bridge service to augment one text; returns its output verbatim.

    Transport problems are retried once and surfaced as RemoteTimeout /
    RemoteUnavailable; contract violations raise RemoteProtocolError.
    """
    url = endpoint.rstrip("/") + "/v1/augment"
    body = _post_json(url, {"text": request.text}, timeout, retries)
    augmented = body.get("augmented_text")
    if not isinstance(augmented, str):
        raise RemoteProtocolError(f"{url} response lacks 'augmented_text'")
    return augmented


def remote_augment_many(
    requests_: Sequence[AugmentRequest],
    endpoint: str,
    timeout: float = 30.0,
    retries: int = 1,
    max_workers: int = 4,
) -> list[Union[str, RemoteServiceError]]:
    """Augment a batch with bounded concurrency.

    Results come back in input order; a failed record carries its exception
    instead of aborting the batch.
    """

    def one(request: AugmentRequest) -> Union[str, RemoteServiceError]:
        try:
            return remote_augment(request, endpoint, timeout=timeout, retries=retries)
        except RemoteServiceError as exc:
            return exc

    if not requests_:
        return []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, requests_))


# ---------------------------------------------------------------------------
# Training-pair preparation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscoveryPair:
    """Adjacent sentences whose second one opened with connective ``y``."""

    s1: str
    s2: str
    y: str

    def __post_init__(self):
        for name in ("s1", "s2", "y"):
            if not getattr(self, name).strip():
                raise DataError(f"discovery record field {name} is empty")


_TERMINAL_RUN = re.compile(r"[.!?]+\s*$")


def _single_terminal(sentence: str) -> str:
    """Normalize a sentence to end with exactly one terminal mark."""
    stripped = sentence.strip()
    match = _TERMINAL_RUN.search(stripped)
    if match:
        return stripped[: match.start()] + match.group()[0]
    return stripped + "."


def prepare_discovery_pair(pair: DiscoveryPair) -> tuple[str, str]:
    """Build the (input, output) texts for one adjacent-sentence record.

    The input joins the two sentences; the output re-joins them with the
    connective leading the second sentence, capitalized there, with the
    displaced sentence start lowercased.
    """
    first = _single_terminal(pair.s1)
    second = pair.s2.strip()
    connective = pair.y.strip()
    source = f"{first} {second}"
    target = f"{first} {capitalize_first(connective)} {lowercase_first(second)}"
    return source, target


@dataclass(frozen=True)
class ExplicitRelation:
    """A connective present in the running text, by character offsets."""

    start: int
    end: int
    connective: str

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"bad connective offsets [{self.start}, {self.end})")


@dataclass(frozen=True)
class ImplicitRelation:
    """An unsignaled relation: where a connective could go, and which one."""

    offset: int
    connective: str

    def __post_init__(self):
        if self.offset < 0:
            raise DataError(f"negative insertion offset {self.offset}")
        if not self.connective.strip():
            raise DataError("implicit relation lacks a connective")


@dataclass(frozen=True)
class PdtbDocument:
    """Plain text plus explicit/implicit relation annotations."""

    text: str
    explicit: tuple[ExplicitRelation, ...] = ()
    implicit: tuple[ImplicitRelation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "explicit", tuple(self.explicit))
        object.__setattr__(self, "implicit", tuple(self.implicit))
        previous_end = -1
        for rel in sorted(self.explicit, key=lambda r: r.start):
            if rel.start < previous_end:
                raise DataError(f"overlapping connective annotations at offset {rel.start}")
            previous_end = rel.end
            if rel.end > len(self.text):
                raise DataError(f"connective span [{rel.start}, {rel.end}) outside document")
            found = self.text[rel.start : rel.end]
            if found.lower() != rel.connective.lower():
                raise DataError(
                    f"annotation says {rel.connective!r} at {rel.start}, text has {found!r}"
                )
        for rel in self.implicit:
            if rel.offset > len(self.text):
                raise DataError(f"insertion offset {rel.offset} outside document")


_PUNCT_BEFORE = set(",;:—-(\"'")


def _sentence_initial_at(text: str, offset: int) -> bool:
    cursor = offset - 1
    while cursor >= 0 and text[cursor].isspace():
        cursor -= 1
    return cursor < 0 or text[cursor] in ".!?"


def _delete_explicit(text: str, rel: ExplicitRelation) -> str:
    before, after = text[: rel.start], text[rel.end :]
    if _sentence_initial_at(text, rel.start):
        # drop the marker, a trailing comma if any, and promote the next word
        after = after.lstrip()
        if after.startswith(","):
            after = after[1:].lstrip()
        return before + capitalize_first(after)
    prev = before.rstrip()
    if prev and prev[-1] in _PUNCT_BEFORE:
        return prev + " " + after.lstrip()
    return prev + ", " + after.lstrip()


def prepare_pdtb_pairs(doc: PdtbDocument) -> tuple[str, str]:
    """Build the (input, output) texts for one annotated document.

    The input strips every explicit connective (comma substitution
    mid-sentence, recapitalization at sentence starts); the output is the
    original text with the implicit connectives spliced in at their offsets.
    """
    source = doc.text
    for rel in sorted(doc.explicit, key=lambda r: r.start, reverse=True):
        source = _delete_explicit(source, rel)

    target = doc.text
    for rel in sorted(doc.implicit, key=lambda r: r.offset, reverse=True):
        before, after = target[: rel.offset], target[rel.offset :]
        connective = rel.connective.strip()
        if _sentence_initial_at(target, rel.offset):
            insertion = capitalize_first(connective) + " "
            after = lowercase_first(after)
        else:
            insertion = lowercase_first(connective) + " "
        target = before + insertion + after
    return source, target


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def read_discovery_tsv(path: str | Path) -> list[DiscoveryPair]:
    """Read adjacent-sentence records from a TSV with an s1/s2/y header."""
    path = Path(path)
    pairs: list[DiscoveryPair] = []
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["s1", "s2", "y"]:
            raise DataError(f"{path}:1: expected 's1\\ts2\\ty' header, got {header}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(f"{path}:{lineno}: expected three tab-separated fields")
            try:
                pairs.append(DiscoveryPair(*fields))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return pairs


def read_pdtb_jsonl(path: str | Path) -> list[PdtbDocument]:
    """Read annotated documents from line-delimited JSON records."""
    path = Path(path)
    docs: list[PdtbDocument] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                docs.append(
                    PdtbDocument(
                        text=record["text"],
                        explicit=tuple(
                            ExplicitRelation(r["start"], r["end"], r["connective"])
                            for r in record.get("explicit", [])
                        ),
                        implicit=tuple(
                            ImplicitRelation(r["offset"], r["connective"])
                            for r in record.get("implicit", [])
                        ),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from exc
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return docs


def write_pairs_jsonl(path: str | Path, pairs: Sequence[tuple[str, str]]) -> None:
    """Write (input, output) texts as line-delimited JSON records."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for source, target in pairs:
            fh.write(
                json.dumps(
                    {"input_text": source, "output_text": target},
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def read_pairs_jsonl(path: str | Path) -> list[tuple[str, str]]:
    """Read (input, output) texts written by :func:`write_pairs_jsonl`."""
    path = Path(path)
    pairs: list[tuple[str, str]] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                pairs.append((record["input_text"], record["output_text"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed pair record: {exc}") from exc
    return pairs

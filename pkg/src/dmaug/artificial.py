"""Template-based synthetic arguments with fully controlled marker slots.

Every sample is built from a reusable core (claim template plus one supportive
and one attacking premise), a layout configuration, and a marker policy.  The
point of the exercise: because the generator knows exactly which marker sits in
which slot, the same corpus yields fill-in-the-mask items, seq2seq pairs and a
gold standard for slot-level evaluation, with no annotation cost.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .core import AduSpan, TokenSequence, capitalize_first, detokenize, tokenize
from .errors import DataError

STANCE_TOKEN = "<STANCE>"
DEFAULT_MASK = "<mask>"

ROLE_CLAIM = "claim"
ROLE_SUPPORT = "support"
ROLE_ATTACK = "attack"

_STANCE_ROLES = ("original", "opposite")
_SENTENCE_TERMINALS = ".!?"


def _check_slot_text(name: str, text: str) -> None:
    if not text or not text.strip():
        raise DataError(f"{name} must not be empty")
    if any(ch in _SENTENCE_TERMINALS for ch in text):
        raise DataError(f"{name} must not contain sentence-final punctuation: {text!r}")


@dataclass(frozen=True)
class CoreElements:
    """Reusable claim/premise seed for one debate theme."""

    core_id: str
    claim_template: str
    original_stance: str
    opposite_stance: str
    premise_support: str
    premise_attack: str

    def __post_init__(self):
        if not self.core_id or any(ch in "\t\n" for ch in self.core_id):
            raise DataError(f"bad core_id {self.core_id!r}")
        if self.claim_template.count(STANCE_TOKEN) != 1:
            raise DataError(
                f"claim template of {self.core_id!r} must contain {STANCE_TOKEN} exactly once"
            )
        _check_slot_text(f"claim template of {self.core_id!r}", self.claim_template)
        for name in ("original_stance", "opposite_stance", "premise_support", "premise_attack"):
            _check_slot_text(f"{name} of {self.core_id!r}", getattr(self, name))

    def claim_text(self, stance_role: str) -> str:
        word = self.original_stance if stance_role == "original" else self.opposite_stance
        return self.claim_template.replace(STANCE_TOKEN, word)


@dataclass(frozen=True)
class TemplateConfig:
    """One point in the layout grid.

    ``premise_role`` exists only for two-unit samples (which premise is used),
    ``supportive_premise_position`` only for three-unit ones (whether the
    supportive premise precedes the attacking one).  ``prediction_type`` names
    the marker slot hidden in the fill-in-the-mask variant.
    """

    num_adus: int
    stance_role: str
    claim_position: int
    premise_role: Optional[str] = None
    supportive_premise_position: Optional[int] = None
    prediction_type: str = "dm1"

    def __post_init__(self):
        if self.num_adus not in (2, 3):
            raise DataError(f"num_adus must be 2 or 3, got {self.num_adus}")
        if self.stance_role not in _STANCE_ROLES:
            raise DataError(f"unknown stance role {self.stance_role!r}")
        if self.claim_position not in (1, 2):
            raise DataError(f"claim position must be 1 or 2, got {self.claim_position}")
        if self.num_adus == 2:
            if self.premise_role not in (ROLE_SUPPORT, ROLE_ATTACK):
                raise DataError("two-unit configs need premise_role support|attack")
            if self.supportive_premise_position is not None:
                raise DataError("supportive_premise_position only applies to three units")
            if self.prediction_type not in ("dm1", "dm2"):
                raise DataError(
                    f"two-unit configs have no slot {self.prediction_type!r}"
                )
        else:
            if self.premise_role is not None:
                raise DataError("premise_role only applies to two units")
            if self.supportive_premise_position not in (1, 2):
                raise DataError("three-unit configs need supportive_premise_position 1|2")
            if self.prediction_type not in ("dm1", "dm2", "dm3"):
                raise DataError(f"unknown prediction type {self.prediction_type!r}")

    def key(self) -> str:
        """Canonical short form, also the deterministic sort key."""
        parts = [f"adus={self.num_adus}", f"stance={self.stance_role}", f"claim={self.claim_position}"]
        if self.num_adus == 2:
            parts.append(f"premise={self.premise_role}")
        else:
            parts.append(f"support_pos={self.supportive_premise_position}")
        parts.append(f"mask={self.prediction_type}")
        return " ".join(parts)

    def to_dict(self) -> dict:
        return {
            "num_adus": self.num_adus,
            "stance_role": self.stance_role,
            "claim_position": self.claim_position,
            "premise_role": self.premise_role,
            "supportive_premise_position": self.supportive_premise_position,
            "prediction_type": self.prediction_type,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TemplateConfig":
        return cls(
            num_adus=data["num_adus"],
            stance_role=data["stance_role"],
            claim_position=data["claim_position"],
            premise_role=data.get("premise_role"),
            supportive_premise_position=data.get("supportive_premise_position"),
            prediction_type=data.get("prediction_type", "dm1"),
        )


def adu_roles(config: TemplateConfig) -> tuple[str, ...]:
    """Role of each unit in surface order (claim/support/attack)."""
    if config.num_adus == 2:
        premise = config.premise_role
        return (
            (ROLE_CLAIM, premise) if config.claim_position == 1 else (premise, ROLE_CLAIM)
        )
    premise_order = (
        (ROLE_SUPPORT, ROLE_ATTACK)
        if config.supportive_premise_position == 1
        else (ROLE_ATTACK, ROLE_SUPPORT)
    )
    if config.claim_position == 1:
        return (ROLE_CLAIM, premise_order[0], premise_order[1])
    return (premise_order[0], ROLE_CLAIM, premise_order[1])


@dataclass(frozen=True)
class DmPolicy:
    """The marker inventory, split by unit role and slot style.

    ``*_lead`` sets serve the detached final-sentence slot (rendered with a
    following comma); ``*_mid`` sets serve markers fused into the clause they
    introduce.  Claims use a single set either way.  Selection is a stable
    hash over (seed, sample identity, slot), so regeneration never reshuffles
    a corpus.
    """

    claim_dms: tuple[str, ...] = ("I think that", "in my opinion", "I believe that")
    support_mid_dms: tuple[str, ...] = ("because", "since", "given that")
    support_lead_dms: tuple[str, ...] = ("moreover", "furthermore", "indeed")
    attack_mid_dms: tuple[str, ...] = ("although", "even though", "even if")
    attack_lead_dms: tuple[str, ...] = ("however", "on the other hand", "conversely")
    seed: int = 13

    def __post_init__(self):
        for name in (
            "claim_dms",
            "support_mid_dms",
            "support_lead_dms",
            "attack_mid_dms",
            "attack_lead_dms",
        ):
            options = getattr(self, name)
            if not options or any(not dm or not dm.strip() for dm in options):
                raise DataError(f"policy set {name} must be non-empty strings")

    def options(self, role: str, lead: bool) -> tuple[str, ...]:
        if role == ROLE_CLAIM:
            return self.claim_dms
        if role == ROLE_SUPPORT:
            return self.support_lead_dms if lead else self.support_mid_dms
        if role == ROLE_ATTACK:
            return self.attack_lead_dms if lead else self.attack_mid_dms
        raise DataError(f"unknown unit role {role!r}")

    def choose(self, role: str, lead: bool, *key) -> str:
        options = self.options(role, lead)
        material = "\x1f".join(str(part) for part in (self.seed, role, lead) + key)
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return options[int.from_bytes(digest[:8], "big") % len(options)]


DEFAULT_POLICY = DmPolicy()


@dataclass(frozen=True)
class ArtificialSample:
    """One rendered argument with its mask variant and unit spans."""

    core_id: str
    config: TemplateConfig
    full_text: str
    masked_text: str
    gold_dm: str
    adu_spans: tuple[AduSpan, ...]


def _role_label(role: str) -> str:
    return "Claim" if role == ROLE_CLAIM else "Premise"


def _slot_surface(dm: str, position: int) -> str:
    """How the chosen marker appears in the rendered text."""
    lead = position == 3
    if position == 1 or lead:
        dm = capitalize_first(dm)
    return dm + "," if lead else dm


def _unit_texts(core: CoreElements, config: TemplateConfig) -> tuple[str, ...]:
    support = core.premise_support if config.stance_role == "original" else core.premise_attack
    attack = core.premise_attack if config.stance_role == "original" else core.premise_support
    by_role = {
        ROLE_CLAIM: core.claim_text(config.stance_role),
        ROLE_SUPPORT: support,
        ROLE_ATTACK: attack,
    }
    return tuple(by_role[role] for role in adu_roles(config))


def _assemble(dms: Sequence[str], texts: Sequence[str]) -> str:
    """Join slot markers and unit texts per the fixed two-sentence grammar."""
    first = f"{dms[0]} {texts[0]}, {dms[1]} {texts[1]}."
    if len(texts) == 2:
        return first
    return f"{first} {dms[2]} {texts[2]}."


def render_sample(
    core: CoreElements,
    config: TemplateConfig,
    policy: DmPolicy = DEFAULT_POLICY,
    mask: str = DEFAULT_MASK,
) -> ArtificialSample:
    """Instantiate one core under one configuration.

    The full text follows "dm1 X1, dm2 X2." (plus "Dm3, X3." for three
    units); unit spans cover the X parts only, never the markers.  The masked
    variant replaces exactly the slot named by ``config.prediction_type`` with
    the mask placeholder and records the replaced surface form as gold.
    """
    roles = adu_roles(config)
    texts = _unit_texts(core, config)
    surfaces = []
    for position, role in enumerate(roles, start=1):
        chosen = policy.choose(
            role, position == 3, core.core_id, config.key(), f"dm{position}"
        )
        surfaces.append(_slot_surface(chosen, position))

    full_text = _assemble(surfaces, texts)

    masked_index = int(config.prediction_type[2]) - 1
    gold_dm = surfaces[masked_index].rstrip(",")
    masked_surfaces = list(surfaces)
    # the lead slot's comma belongs to the template, so it survives masking
    masked_surfaces[masked_index] = mask + ("," if surfaces[masked_index].endswith(",") else "")
    masked_text = _assemble(masked_surfaces, texts)

    spans: list[AduSpan] = []
    cursor = 0
    for position, (surface, text, role) in enumerate(zip(surfaces, texts, roles), start=1):
        cursor += len(tokenize(surface))
        unit_len = len(tokenize(text))
        spans.append(AduSpan(cursor, cursor + unit_len, _role_label(role)))
        cursor += unit_len + 1  # the comma after X1 / the full stop
    return ArtificialSample(
        core_id=core.core_id,
        config=config,
        full_text=full_text,
        masked_text=masked_text,
        gold_dm=gold_dm,
        adu_spans=tuple(spans),
    )


def enumerate_configs(stance_roles: Sequence[str] = _STANCE_ROLES) -> list[TemplateConfig]:
    """The full layout grid, in stable sorted order.

    Per stance: 8 two-unit configs (2 claim positions x 2 premise roles x 2
    maskable slots) and 12 three-unit ones (2 x 2 x 3), i.e. 20 per stance
    and 40 with both.
    """
    stances = sorted(set(stance_roles))
    if not stances or not set(stances) <= set(_STANCE_ROLES):
        raise DataError(f"stance roles must be drawn from {_STANCE_ROLES}, got {stance_roles!r}")
    configs: list[TemplateConfig] = []
    for num_adus in (2, 3):
        for stance in stances:
            for claim_position in (1, 2):
                if num_adus == 2:
                    for premise_role in (ROLE_ATTACK, ROLE_SUPPORT):
                        for prediction in ("dm1", "dm2"):
                            configs.append(
                                TemplateConfig(
                                    num_adus=2,
                                    stance_role=stance,
                                    claim_position=claim_position,
                                    premise_role=premise_role,
                                    prediction_type=prediction,
                                )
                            )
                else:
                    for support_pos in (1, 2):
                        for prediction in ("dm1", "dm2", "dm3"):
                            configs.append(
                                TemplateConfig(
                                    num_adus=3,
                                    stance_role=stance,
                                    claim_position=claim_position,
                                    supportive_premise_position=support_pos,
                                    prediction_type=prediction,
                                )
                            )
    return configs


def generate_split(
    cores: Sequence[CoreElements],
    stance_roles: Sequence[str] = _STANCE_ROLES,
    policy: DmPolicy = DEFAULT_POLICY,
    mask: str = DEFAULT_MASK,
) -> list[ArtificialSample]:
    """Render every core under every configuration of the grid.

    Sample order is cores-outer, configs-inner, so a split regenerates
    byte-identically.  Repeated core_ids are rejected -- they would silently
    duplicate near-identical texts across what callers believe are distinct
    themes (keeping one theme per split is the caller's contract).
    """
    seen: set[str] = set()
    for core in cores:
        if core.core_id in seen:
            raise DataError(f"duplicate core_id {core.core_id!r} in one generation call")
        seen.add(core.core_id)
    configs = enumerate_configs(stance_roles)
    return [render_sample(core, config, policy, mask) for core in cores for config in configs]


# ---------------------------------------------------------------------------
# Seq2seq view
# ---------------------------------------------------------------------------


def _unit_fragments(sample: ArtificialSample) -> list[str]:
    tokens = tokenize(sample.full_text)
    return [detokenize(tokens[span.start : span.end]) for span in sample.adu_spans]


def make_e2e_pair(sample: ArtificialSample) -> tuple[str, str]:
    """(input, output) rewriting pair: marker-free text in, full text out.

    The input drops every marker and restores sentence capitalization; the
    comma between the first two units is template punctuation and stays.
    """
    fragments = _unit_fragments(sample)
    first = f"{capitalize_first(fragments[0])}, {fragments[1]}."
    if len(fragments) == 3:
        input_text = f"{first} {capitalize_first(fragments[2])}."
    else:
        input_text = first
    return input_text, sample.full_text


def e2e_input_layout(sample: ArtificialSample) -> tuple[TokenSequence, tuple[AduSpan, ...]]:
    """Tokens and unit spans of the marker-free input text."""
    fragments = _unit_fragments(sample)
    input_text, _ = make_e2e_pair(sample)
    tokens = TokenSequence(tokenize(input_text))
    spans: list[AduSpan] = []
    cursor = 0
    for fragment, span in zip(fragments, sample.adu_spans):
        unit_len = len(tokenize(fragment))
        spans.append(AduSpan(cursor, cursor + unit_len, span.label))
        cursor += unit_len + 1  # separator token: comma or full stop
    return tokens, tuple(spans)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

_CORE_FIELDS = (
    "core_id",
    "claim_template",
    "original_stance",
    "opposite_stance",
    "premise_support",
    "premise_attack",
)


def _core_from_record(record: Mapping, where: str) -> CoreElements:
    missing = [name for name in _CORE_FIELDS if name not in record]
    if missing:
        raise DataError(f"{where}: missing fields {missing}")
    return CoreElements(**{name: record[name] for name in _CORE_FIELDS})


def read_core_elements_tsv(path: str | Path) -> list[CoreElements]:
    """Read cores from a tab-separated file with a header line."""
    path = Path(path)
    cores: list[CoreElements] = []
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != _CORE_FIELDS:
            raise DataError(f"{path}:1: header must be {list(_CORE_FIELDS)}, got {header}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != len(_CORE_FIELDS):
                raise DataError(f"{path}:{lineno}: expected {len(_CORE_FIELDS)} fields")
            cores.append(_core_from_record(dict(zip(_CORE_FIELDS, fields)), f"{path}:{lineno}"))
    return cores


def read_core_elements_jsonl(path: str | Path) -> list[CoreElements]:
    """Read cores from line-delimited JSON records."""
    path = Path(path)
    cores: list[CoreElements] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from None
            cores.append(_core_from_record(record, f"{path}:{lineno}"))
    return cores


def read_core_elements(path: str | Path) -> list[CoreElements]:
    """Dispatch on file suffix: .tsv -> tabular, anything else -> JSONL."""
    path = Path(path)
    if path.suffix.lower() == ".tsv":
        return read_core_elements_tsv(path)
    return read_core_elements_jsonl(path)


def sample_to_record(sample: ArtificialSample, split: Optional[str] = None) -> dict:
    input_text, output_text = make_e2e_pair(sample)
    record = {
        "core_id": sample.core_id,
        "config": sample.config.to_dict(),
        "full_text": sample.full_text,
        "masked_text": sample.masked_text,
        "gold_dm": sample.gold_dm,
        "adu_spans": [[s.start, s.end, s.label] for s in sample.adu_spans],
        "input_text": input_text,
        "output_text": output_text,
    }
    if split is not None:
        record["split"] = split
    return record


def write_samples_jsonl(
    path: str | Path, samples: Iterable[ArtificialSample], split: Optional[str] = None
) -> None:
    """Write samples as line-delimited JSON, one record per sample."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_record(sample, split), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_samples_jsonl(path: str | Path) -> list[ArtificialSample]:
    """Read back records produced by :func:`write_samples_jsonl`."""
    path = Path(path)
    samples: list[ArtificialSample] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: not valid JSON ({exc})") from None
            try:
                samples.append(
                    ArtificialSample(
                        core_id=record["core_id"],
                        config=TemplateConfig.from_dict(record["config"]),
                        full_text=record["full_text"],
                        masked_text=record["masked_text"],
                        gold_dm=record["gold_dm"],
                        adu_spans=tuple(
                            AduSpan(start, end, label) for start, end, label in record["adu_spans"]
                        ),
                    )
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from None
    return samples

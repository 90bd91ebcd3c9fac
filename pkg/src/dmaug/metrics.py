"""Scoring utilities for marker prediction and sequence labeling.

Marker-level scoring compares predicted against reference connectives with
embedding cosine metrics and two sense inventories; sequence-level scoring
covers exact-span F1, token accuracy/macro-F1, and the agreement statistics
used for annotation studies.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence

import numpy as np

from .core import DataError, DmSlot, bio_to_spans, normalize_dm, tokenize

__all__ = [
    "EXCLUDED",
    "EmbeddingTable",
    "SenseLexicon",
    "SentenceEncoder",
    "AveragedVectorEncoder",
    "MetricResources",
    "MetricReport",
    "SpanScores",
    "TokenScores",
    "avg_vector_similarity",
    "sentence_similarity",
    "sense_of",
    "sense_match",
    "explicit_accuracy_report",
    "coverage_report",
    "span_f1",
    "token_metrics",
    "cohens_kappa",
    "pearson",
    "sense_confusion",
]


class _Excluded:
    """Sentinel for occurrences that sense scoring must skip."""

    _instance: Optional["_Excluded"] = None

    def __new__(cls) -> "_Excluded":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "EXCLUDED"


EXCLUDED = _Excluded()


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


class EmbeddingTable:
    """Fixed-dimension word-vector lookup, case-insensitive with lowercase fallback."""

    def __init__(self, vectors: Mapping[str, Sequence[float]]):
        if not vectors:
            raise DataError("embedding table must contain at least one vector")
        self._vectors: dict[str, np.ndarray] = {}
        self.dimension = -1
        for word, values in vectors.items():
            vec = np.asarray(values, dtype=float)
            if vec.ndim != 1:
                raise DataError(f"vector for {word!r} is not one-dimensional")
            if self.dimension < 0:
                self.dimension = vec.shape[0]
            elif vec.shape[0] != self.dimension:
                raise DataError(
                    f"vector for {word!r} has dimension {vec.shape[0]}, "
                    f"expected {self.dimension}"
                )
            self._vectors[word] = vec

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        """Read the text vector format: a "count dimension" line, then one word per line."""
        path = Path(path)
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise DataError(f"{path}:1: expected 'count dimension' header")
            try:
                count, dim = int(header[0]), int(header[1])
            except ValueError as exc:
                raise DataError(f"{path}:1: non-numeric header: {header}") from exc
            vectors: dict[str, list[float]] = {}
            for lineno, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise DataError(
                        f"{path}:{lineno}: expected {dim} components, got {len(parts) - 1}"
                    )
                vectors[parts[0]] = [float(x) for x in parts[1:]]
        if len(vectors) != count:
            raise DataError(f"{path}: header promises {count} vectors, found {len(vectors)}")
        return cls(vectors)

    def get(self, word: str) -> Optional[np.ndarray]:
        hit = self._vectors.get(word)
        if hit is None:
            hit = self._vectors.get(word.lower())
        return hit

    def __contains__(self, word: str) -> bool:
        return self.get(word) is not None

    def __len__(self) -> int:
        return len(self._vectors)


def _cosine01(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    # negative similarity carries no signal for this task; clamp into [0, 1]
    return min(1.0, max(0.0, float(np.dot(a, b)) / (na * nb)))


def _avg_vector(text: str, table: EmbeddingTable) -> Optional[np.ndarray]:
    hits = [table.get(tok) for tok in tokenize(text)] if text.strip() else []
    hits = [h for h in hits if h is not None]
    if not hits:
        return None
    return np.mean(hits, axis=0)


def avg_vector_similarity(pred: str, gold: str, table: EmbeddingTable) -> float:
    """Cosine of averaged word vectors, in [0, 1].

    Identical non-empty markers score 1.0 outright; a side with no
    in-vocabulary token scores 0.0.
    """
    if normalize_dm(pred) and normalize_dm(pred) == normalize_dm(gold):
        return 1.0
    va, vb = _avg_vector(pred, table), _avg_vector(gold, table)
    if va is None or vb is None:
        return 0.0
    return _cosine01(va, vb)


class SentenceEncoder(Protocol):
    """Anything that turns a text into a fixed-dimension vector."""

    def encode(self, text: str) -> np.ndarray: ...


class AveragedVectorEncoder:
    """Offline stand-in for a sentence encoder: mean word vector of the text.

    Out-of-vocabulary-only texts encode to the zero vector, which downstream
    cosine treats as similarity 0.
    """

    def __init__(self, table: EmbeddingTable):
        self._table = table

    def encode(self, text: str) -> np.ndarray:
        vec = _avg_vector(text, self._table)
        if vec is None:
            return np.zeros(self._table.dimension)
        return vec


def sentence_similarity(pred: str, gold: str, enc: SentenceEncoder) -> float:
    """Cosine of sentence encodings, clamped to [0, 1]."""
    if pred == gold and pred.strip():
        return 1.0
    return _cosine01(np.asarray(enc.encode(pred), float), np.asarray(enc.encode(gold), float))


# ---------------------------------------------------------------------------
# Sense inventories
# ---------------------------------------------------------------------------

_SENSE_SETS = {
    "arg_marker": frozenset({"forward", "backward", "thesis", "rebuttal"}),
    "disc_rel": frozenset({"Comparison", "Contingency", "Expansion", "Temporal"}),
}


class SenseLexicon:
    """Marker-to-sense map under one of the two supported inventories."""

    def __init__(self, kind: str, mapping: Mapping[str, str]):
        allowed = _SENSE_SETS.get(kind)
        if allowed is None:
            raise DataError(f"unknown sense inventory {kind!r}")
        self.kind = kind
        self._map: dict[str, str] = {}
        for dm, sense in mapping.items():
            if sense not in allowed:
                raise DataError(f"sense {sense!r} for {dm!r} not in {sorted(allowed)}")
            key = normalize_dm(dm)
            if not key:
                raise DataError("empty marker text in sense mapping")
            self._map[key] = sense

    @classmethod
    def load(cls, path: str | Path, kind: str) -> "SenseLexicon":
        """Read a two-column TSV (header ``dm<TAB>sense``; ``#`` comments allowed)."""
        path = Path(path)
        mapping: dict[str, str] = {}
        with path.open(encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if header != ["dm", "sense"]:
                raise DataError(f"{path}:1: expected 'dm\\tsense' header, got {header}")
            for lineno, raw in enumerate(fh, start=2):
                line = raw.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise DataError(f"{path}:{lineno}: expected two tab-separated fields")
                mapping[fields[0]] = fields[1]
        try:
            return cls(kind, mapping)
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from exc

    def get(self, dm: str) -> Optional[str]:
        return self._map.get(normalize_dm(dm))

    def __len__(self) -> int:
        return len(self._map)


def sense_of(dm: str, lex: SenseLexicon) -> Optional[str]:
    """Sense of a marker after normalization, or None when unlisted."""
    return lex.get(dm)


def sense_match(pred_dm: str, gold_dm: str, lex: SenseLexicon):
    """1/0 agreement on sense, or EXCLUDED when the reference has no sense."""
    gold_sense = sense_of(gold_dm, lex)
    if gold_sense is None:
        return EXCLUDED
    return 1 if sense_of(pred_dm, lex) == gold_sense else 0


# ---------------------------------------------------------------------------
# Slot-level reports
# ---------------------------------------------------------------------------

_METRIC_NAMES = ("word_embs", "retrofit_embs", "sbert_embs", "arg_marker", "disc_rel")


@dataclass(frozen=True)
class MetricResources:
    """Bundle of scoring resources; absent entries switch their metric off."""

    word_table: Optional[EmbeddingTable] = None
    retrofit_table: Optional[EmbeddingTable] = None
    encoder: Optional[SentenceEncoder] = None
    arg_lexicon: Optional[SenseLexicon] = None
    rel_lexicon: Optional[SenseLexicon] = None


@dataclass(frozen=True)
class MetricReport:
    """Per-metric means in [0, 1] with occurrence book-keeping.

    A metric whose resource was not supplied is None, never fabricated.
    ``excluded`` counts reference slots the sense metrics skipped as
    unmappable.
    """

    word_embs: Optional[float] = None
    retrofit_embs: Optional[float] = None
    sbert_embs: Optional[float] = None
    arg_marker: Optional[float] = None
    disc_rel: Optional[float] = None
    counts: Mapping[str, int] = field(default_factory=dict)
    excluded: Mapping[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            **{name: getattr(self, name) for name in _METRIC_NAMES},
            "counts": dict(self.counts),
            "excluded": dict(self.excluded),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def format_table(self) -> str:
        rows = ["metric          mean     n"]
        for name in _METRIC_NAMES:
            value = getattr(self, name)
            shown = "absent" if value is None else f"{value:.4f}"
            rows.append(f"{name:<15} {shown:>6} {self.counts.get(name, 0):>5}")
        return "\n".join(rows)


def _check_shapes(gold: Sequence[Sequence], pred: Sequence[Sequence]) -> None:
    if len(gold) != len(pred):
        raise DataError(f"{len(gold)} reference sequences vs {len(pred)} predicted")
    for idx, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise DataError(f"sequence {idx}: {len(g)} reference slots vs {len(p)} predicted")


def _slot_text(slot) -> str:
    return slot.text if isinstance(slot, DmSlot) else str(slot)


def explicit_accuracy_report(
    gold: Sequence[Sequence[DmSlot]],
    pred: Sequence[Sequence[DmSlot]],
    resources: MetricResources,
) -> MetricReport:
    """Score predictions at every explicit reference slot.

    Per sequence, each metric averages over that sequence's scored
    occurrences; the report then macro-averages over sequences.  An empty
    prediction at an explicit slot scores 0 on every metric.  Sense metrics
    only consider reference markers their lexicon can map, and report the
    rest under ``excluded``.
    """
    _check_shapes(gold, pred)

    def scorers(g: str, p: str):
        out: dict[str, Optional[float]] = {}
        if resources.word_table is not None:
            out["word_embs"] = avg_vector_similarity(p, g, resources.word_table)
        if resources.retrofit_table is not None:
            out["retrofit_embs"] = avg_vector_similarity(p, g, resources.retrofit_table)
        if resources.encoder is not None:
            out["sbert_embs"] = sentence_similarity(p, g, resources.encoder)
        if resources.arg_lexicon is not None:
            m = sense_match(p, g, resources.arg_lexicon)
            out["arg_marker"] = None if m is EXCLUDED else float(m)
        if resources.rel_lexicon is not None:
            m = sense_match(p, g, resources.rel_lexicon)
            out["disc_rel"] = None if m is EXCLUDED else float(m)
        return out

    active = [
        name
        for name, resource in zip(
            _METRIC_NAMES,
            (
                resources.word_table,
                resources.retrofit_table,
                resources.encoder,
                resources.arg_lexicon,
                resources.rel_lexicon,
            ),
        )
        if resource is not None
    ]
    seq_means: dict[str, list[float]] = {name: [] for name in active}
    counts: Counter = Counter()
    excluded: Counter = Counter()
    for gold_seq, pred_seq in zip(gold, pred):
        per_seq: dict[str, list[float]] = {name: [] for name in active}
        for gold_slot, pred_slot in zip(gold_seq, pred_seq):
            gold_text = _slot_text(gold_slot)
            if not gold_text:
                continue  # implicit reference slot: coverage's business, not ours
            scored = scorers(gold_text, _slot_text(pred_slot))
            for name in active:
                value = scored.get(name)
                if value is None:
                    excluded[name] += 1
                    continue
                per_seq[name].append(value)
                counts[name] += 1
        for name in active:
            if per_seq[name]:
                seq_means[name].append(sum(per_seq[name]) / len(per_seq[name]))

    values: dict[str, Optional[float]] = {name: None for name in _METRIC_NAMES}
    for name in active:
        values[name] = (
            sum(seq_means[name]) / len(seq_means[name]) if seq_means[name] else 0.0
        )
    return MetricReport(counts=dict(counts), excluded=dict(excluded), **values)


def coverage_report(
    gold: Sequence[Sequence[DmSlot]],
    pred: Sequence[Sequence[DmSlot]],
) -> float:
    """Fraction of slots (explicit and implicit) that received a prediction.

    Computed per sequence, then macro-averaged; sequences without slots are
    ignored.
    """
    _check_shapes(gold, pred)
    fractions = []
    for gold_seq, pred_seq in zip(gold, pred):
        if not len(gold_seq):
            continue
        filled = sum(1 for slot in pred_seq if _slot_text(slot))
        fractions.append(filled / len(gold_seq))
    return sum(fractions) / len(fractions) if fractions else 0.0


# ---------------------------------------------------------------------------
# Sequence labeling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpanScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TokenScores:
    accuracy: float
    macro_f1: float


def _require_parallel(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> None:
    if len(gold) != len(pred):
        raise DataError(f"{len(gold)} reference sequences vs {len(pred)} predicted")
    for idx, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise DataError(
                f"sequence {idx}: reference has {len(g)} tokens, prediction {len(p)}"
            )


def span_f1(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> SpanScores:
    """Micro-averaged exact-match span precision/recall/F1 over BIO labelings."""
    _require_parallel(gold, pred)
    tp = fp = fn = 0
    for gold_seq, pred_seq in zip(gold, pred):
        gold_spans = {(s.start, s.end, s.label) for s in bio_to_spans(gold_seq)}
        pred_spans = {(s.start, s.end, s.label) for s in bio_to_spans(pred_seq)}
        tp += len(gold_spans & pred_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    if tp + fp + fn == 0:
        return SpanScores(1.0, 1.0, 1.0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SpanScores(precision, recall, f1)


def token_metrics(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> TokenScores:
    """Flat token accuracy and macro-F1 over the union tag set (O included)."""
    _require_parallel(gold, pred)
    flat_gold = [tag for seq in gold for tag in seq]
    flat_pred = [tag for seq in pred for tag in seq]
    if not flat_gold:
        raise DataError("no tokens to score")
    accuracy = sum(g == p for g, p in zip(flat_gold, flat_pred)) / len(flat_gold)
    f1s = []
    for tag in sorted(set(flat_gold) | set(flat_pred)):
        tp = sum(1 for g, p in zip(flat_gold, flat_pred) if g == tag and p == tag)
        fp = sum(1 for g, p in zip(flat_gold, flat_pred) if g != tag and p == tag)
        fn = sum(1 for g, p in zip(flat_gold, flat_pred) if g == tag and p != tag)
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return TokenScores(accuracy=accuracy, macro_f1=sum(f1s) / len(f1s))


# ---------------------------------------------------------------------------
# Agreement statistics
# ---------------------------------------------------------------------------


def cohens_kappa(a: Sequence, b: Sequence) -> float:
    """Chance-corrected agreement between two categorical labelings."""
    if len(a) != len(b):
        raise DataError(f"label arrays differ in length: {len(a)} vs {len(b)}")
    if not len(a):
        raise DataError("cannot compute agreement on empty arrays")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    counts_a, counts_b = Counter(a), Counter(b)
    expected = sum(
        (counts_a[label] / n) * (counts_b[label] / n)
        for label in set(counts_a) | set(counts_b)
    )
    if math.isclose(expected, 1.0):
        # both marginals are degenerate: agreement is all-or-nothing
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation of two equal-length real arrays."""
    if len(x) != len(y):
        raise DataError(f"arrays differ in length: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise DataError("correlation needs at least two points")
    xa, ya = np.asarray(x, float), np.asarray(y, float)
    for name, arr in (("first", xa), ("second", ya)):
        if bool(np.all(arr == arr[0])):
            raise DataError(f"{name} array has zero variance; correlation undefined")
    xc, yc = xa - xa.mean(), ya - ya.mean()
    # rescale to unit magnitude so subnormal spreads cannot underflow to a
    # zero norm (the scale factors cancel out of the quotient)
    for centered in (xc, yc):
        peak = np.max(np.abs(centered))
        if peak == 0.0:
            raise DataError("centered array has zero spread; correlation undefined")
        centered /= peak
    return float(np.dot(xc, yc) / (np.linalg.norm(xc) * np.linalg.norm(yc)))


# ---------------------------------------------------------------------------
# Error analysis
# ---------------------------------------------------------------------------


def sense_confusion(
    gold_dms: Iterable[str],
    pred_dms: Iterable[str],
    lex: SenseLexicon,
) -> dict[tuple[str, str], int]:
    """Count (reference sense, predicted sense) pairs for error analysis.

    Reference markers the lexicon cannot map are skipped; unmapped
    predictions are bucketed under ``"none"``.
    """
    gold_list, pred_list = list(gold_dms), list(pred_dms)
    if len(gold_list) != len(pred_list):
        raise DataError(f"{len(gold_list)} reference markers vs {len(pred_list)} predicted")
    pairs: Counter = Counter()
    for g, p in zip(gold_list, pred_list):
        gold_sense = sense_of(g, lex)
        if gold_sense is None:
            continue
        pairs[(gold_sense, sense_of(p, lex) or "none")] += 1
    return dict(pairs)

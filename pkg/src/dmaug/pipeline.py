"""End-to-end orchestration: build augmented training views of a labeled
corpus, carry labels across the rewrite, and score external tagger output
after mapping it back onto the original tokens.

The tagger itself stays external: this module emits its training files and
consumes its prediction files, so any sequence labeler can plug in.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .alignment import needleman_wunsch, project_labels
from .artificial import DmPolicy
from .augment import DEFAULT_ROLE_MAPS, AugmentRequest, remote_augment, rule_based_augment
from .core import DataError, DmSlot, TokenSequence, tokenize
from .extraction import (
    AnnotatedParagraph,
    diff_predicted_dms,
    gold_dms_left_context,
    remove_explicit_dms,
)
from .metrics import (
    MetricReport,
    MetricResources,
    SpanScores,
    TokenScores,
    coverage_report,
    explicit_accuracy_report,
    span_f1,
    token_metrics,
)

__all__ = [
    "RunConfig",
    "DownstreamInstance",
    "RunReport",
    "prepare_downstream",
    "prepare_downstream_batch",
    "backproject_predictions",
    "evaluate_run",
    "summarize_runs",
    "format_mean_std",
]

_INPUT_MODES = ("original", "removed_dms")
_AUGMENTERS = ("none", "rule", "remote")


@dataclass(frozen=True)
class RunConfig:
    """How one experiment run treats its input and fills its markers."""

    input_mode: str = "original"
    augmenter: str = "none"
    endpoint: Optional[str] = None
    schema: str = "artificial"
    seed: int = 13
    timeout: float = 30.0
    max_workers: int = 4

    def __post_init__(self):
        if self.input_mode not in _INPUT_MODES:
            raise DataError(f"input_mode must be one of {_INPUT_MODES}, got {self.input_mode!r}")
        if self.augmenter not in _AUGMENTERS:
            raise DataError(f"augmenter must be one of {_AUGMENTERS}, got {self.augmenter!r}")
        if self.augmenter == "remote" and not self.endpoint:
            raise DataError("remote augmentation needs an endpoint")
        if self.augmenter == "rule" and self.schema not in DEFAULT_ROLE_MAPS:
            raise DataError(
                f"no role map for schema {self.schema!r}; "
                f"known: {sorted(DEFAULT_ROLE_MAPS)}"
            )
        if self.max_workers < 1:
            raise DataError("max_workers must be positive")

    def policy(self) -> DmPolicy:
        return DmPolicy(seed=self.seed)


@dataclass
class DownstreamInstance:
    """One labeled sequence and everything derived from it along the run.

    ``base_*`` fields describe the sequence the augmenter actually saw (the
    original, or the marker-stripped variant).  ``gold_slots`` always come
    from the original sequence, before any stripping, so marker metrics keep
    their reference.  A stage failure leaves the instance partially filled
    with ``failed_stage`` set; later stages skip it.
    """

    original_tokens: TokenSequence
    original_labels: tuple[str, ...]
    gold_slots: tuple[DmSlot, ...] = ()
    base_tokens: Optional[TokenSequence] = None
    base_adu_starts: tuple[int, ...] = ()
    base_slots: tuple[DmSlot, ...] = ()
    source_text: str = ""
    augmented_text: str = ""
    augmented_tokens: Optional[TokenSequence] = None
    projected_labels: Optional[tuple[str, ...]] = None
    predicted_slots: tuple[DmSlot, ...] = ()
    predicted_labels: Optional[tuple[str, ...]] = None
    backprojected_labels: Optional[tuple[str, ...]] = None
    dropped_predictions: int = 0
    failed_stage: Optional[str] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    def _fail(self, stage: str, exc: Exception) -> "DownstreamInstance":
        self.failed_stage = stage
        self.error = str(exc)
        return self


def _augment_text(
    paragraph: AnnotatedParagraph, cfg: RunConfig
) -> str:
    if cfg.augmenter == "none":
        return paragraph.text()
    if cfg.augmenter == "rule":
        return rule_based_augment(paragraph, cfg.policy(), cfg.schema)
    request = AugmentRequest(
        paragraph.text(),
        candidate_positions=tuple(adu.start for adu in paragraph.adus),
    )
    assert cfg.endpoint is not None
    return remote_augment(request, cfg.endpoint, timeout=cfg.timeout)


def prepare_downstream(
    tokens: Sequence[str],
    labels: Sequence[str],
    cfg: RunConfig,
) -> DownstreamInstance:
    """Run one sequence through stripping, augmentation, and label carry-over.

    Never raises for a bad record: each stage catches its own failure and
    tags the instance with the stage name, so corpus runs keep going.
    """
    inst = DownstreamInstance(
        original_tokens=TokenSequence(tokens), original_labels=tuple(labels)
    )
    try:
        if len(labels) != len(inst.original_tokens):
            raise DataError(
                f"{len(labels)} labels for {len(inst.original_tokens)} tokens"
            )
        paragraph = AnnotatedParagraph.from_labels(inst.original_tokens, labels)
        inst.gold_slots = tuple(gold_dms_left_context(paragraph))
    except Exception as exc:
        return inst._fail("validate", exc)

    try:
        if cfg.input_mode == "removed_dms":
            base = remove_explicit_dms(paragraph, inst.gold_slots)
        else:
            base = paragraph
        inst.base_tokens = TokenSequence(base.tokens)
        inst.base_adu_starts = tuple(adu.start for adu in base.adus)
        inst.base_slots = tuple(gold_dms_left_context(base))
        inst.source_text = base.text()
    except Exception as exc:
        return inst._fail("remove", exc)

    try:
        inst.augmented_text = _augment_text(base, cfg)
    except Exception as exc:
        return inst._fail("augment", exc)

    try:
        inst.augmented_tokens = TokenSequence(tokenize(inst.augmented_text))
    except Exception as exc:
        return inst._fail("retokenize", exc)

    try:
        inserted = diff_predicted_dms(
            list(base.tokens), list(inst.augmented_tokens), inst.base_adu_starts
        )
        # an already-present marker counts as this run's prediction for its slot
        inst.predicted_slots = tuple(
            diff_slot if diff_slot.is_explicit else kept
            for diff_slot, kept in zip(inserted, inst.base_slots)
        )
    except Exception as exc:
        return inst._fail("recover", exc)

    try:
        alignment = needleman_wunsch(list(base.tokens), list(inst.augmented_tokens))
        inst.projected_labels = tuple(
            project_labels(alignment, list(base.labels()))
        )
    except Exception as exc:
        return inst._fail("project", exc)
    return inst


def prepare_downstream_batch(
    records: Sequence[tuple[Sequence[str], Sequence[str]]],
    cfg: RunConfig,
) -> list[DownstreamInstance]:
    """Prepare many records with a bounded worker pool, preserving order."""
    if not records:
        return []
    with ThreadPoolExecutor(max_workers=cfg.max_workers) as pool:
        return list(
            pool.map(lambda rec: prepare_downstream(rec[0], rec[1], cfg), records)
        )


def backproject_predictions(
    inst: DownstreamInstance, interior: str = "contiguity"
) -> tuple[str, ...]:
    """Carry tagger output on the augmented tokens back to the originals.

    Predictions that only cover inserted tokens have nowhere to land; they
    are dropped and counted on the instance.
    """
    if inst.augmented_tokens is None:
        raise DataError("instance has no augmented tokens; prepare it first")
    if inst.predicted_labels is None:
        raise DataError("instance carries no predictions to back-project")
    if len(inst.predicted_labels) != len(inst.augmented_tokens):
        raise DataError(
            f"{len(inst.predicted_labels)} predictions for "
            f"{len(inst.augmented_tokens)} augmented tokens"
        )
    alignment = needleman_wunsch(
        list(inst.augmented_tokens), list(inst.original_tokens)
    )
    unanchored = {
        first for first, second in alignment.pairs if first is not None and second is None
    }
    inst.dropped_predictions = sum(
        1 for idx in unanchored if inst.predicted_labels[idx] != "O"
    )
    inst.backprojected_labels = tuple(
        project_labels(alignment, list(inst.predicted_labels), interior=interior)
    )
    return inst.backprojected_labels


@dataclass(frozen=True)
class RunReport:
    """Scores of one run: sequence labeling plus marker-slot quality."""

    instances_total: int
    instances_evaluated: int
    failures: Mapping[str, int] = field(default_factory=dict)
    span: Optional[SpanScores] = None
    token: Optional[TokenScores] = None
    dm_coverage: Optional[float] = None
    dm_accuracy: Optional[MetricReport] = None
    dropped_predictions: int = 0

    def as_dict(self) -> dict:
        return {
            "instances_total": self.instances_total,
            "instances_evaluated": self.instances_evaluated,
            "failures": dict(self.failures),
            "span_precision": self.span.precision if self.span else None,
            "span_recall": self.span.recall if self.span else None,
            "span_f1": self.span.f1 if self.span else None,
            "token_accuracy": self.token.accuracy if self.token else None,
            "token_macro_f1": self.token.macro_f1 if self.token else None,
            "dm_coverage": self.dm_coverage,
            "dm_accuracy": self.dm_accuracy.as_dict() if self.dm_accuracy else None,
            "dropped_predictions": self.dropped_predictions,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def evaluate_run(
    instances: Sequence[DownstreamInstance],
    resources: Optional[MetricResources] = None,
) -> RunReport:
    """Score a finished run against its own gold labels and slots.

    Failed instances are excluded from the scores and tallied by stage.
    Sequence-labeling scores need back-projected predictions on every healthy
    instance; marker reports only need the prepared slots.
    """
    failures: dict[str, int] = {}
    healthy: list[DownstreamInstance] = []
    for inst in instances:
        if inst.ok:
            healthy.append(inst)
        else:
            assert inst.failed_stage is not None
            failures[inst.failed_stage] = failures.get(inst.failed_stage, 0) + 1

    span = token = None
    scored = [inst for inst in healthy if inst.backprojected_labels is not None]
    if scored:
        gold = [list(inst.original_labels) for inst in scored]
        pred = [list(inst.backprojected_labels) for inst in scored]
        span = span_f1(gold, pred)
        token = token_metrics(gold, pred)

    dm_coverage = None
    dm_accuracy = None
    slotted = [inst for inst in healthy if inst.gold_slots]
    if slotted:
        gold_slots = [list(inst.gold_slots) for inst in slotted]
        pred_slots = [list(inst.predicted_slots) for inst in slotted]
        dm_coverage = coverage_report(gold_slots, pred_slots)
        if resources is not None:
            dm_accuracy = explicit_accuracy_report(gold_slots, pred_slots, resources)

    return RunReport(
        instances_total=len(instances),
        instances_evaluated=len(scored),
        failures=failures,
        span=span,
        token=token,
        dm_coverage=dm_coverage,
        dm_accuracy=dm_accuracy,
        dropped_predictions=sum(inst.dropped_predictions for inst in healthy),
    )


_SUMMARY_FIELDS = (
    "span_precision",
    "span_recall",
    "span_f1",
    "token_accuracy",
    "token_macro_f1",
    "dm_coverage",
)


def summarize_runs(reports: Sequence[RunReport]) -> dict[str, tuple[float, float]]:
    """Mean and population standard deviation per metric over seed runs.

    Metrics missing from any run are left out of the summary.
    """
    if not reports:
        raise DataError("nothing to summarize")
    table: dict[str, tuple[float, float]] = {}
    dicts = [report.as_dict() for report in reports]
    for name in _SUMMARY_FIELDS:
        values = [d[name] for d in dicts]
        if any(v is None for v in values):
            continue
        arr = np.asarray(values, dtype=float)
        table[name] = (float(arr.mean()), float(arr.std()))
    return table


def format_mean_std(mean: float, std: float) -> str:
    """Render a summary cell like ``0.713 (± .007)``."""
    return f"{mean:.3f} (± {std:.3f})".replace("± 0.", "± .")

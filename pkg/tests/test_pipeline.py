import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmaug import assets
from dmaug.artificial import generate_split, read_core_elements_tsv
from dmaug.core import DataError, tokenize
from dmaug.extraction import AnnotatedParagraph
from dmaug.metrics import EmbeddingTable, MetricResources
from dmaug.pipeline import (
    DownstreamInstance,
    RunConfig,
    RunReport,
    backproject_predictions,
    evaluate_run,
    format_mean_std,
    prepare_downstream,
    prepare_downstream_batch,
    summarize_runs,
)

CAUSAL_SENTENCE = "Because it rains, I think that we stay home."
CAUSAL_LABELS = [
    "O",
    "B-Premise",
    "I-Premise",
    "O",
    "O",
    "O",
    "O",
    "B-Claim",
    "I-Claim",
    "I-Claim",
    "O",
]


def _sample_paragraphs(count):
    cores = read_core_elements_tsv(assets.default_cores_path())
    out = []
    for sample in generate_split(cores)[:count]:
        paragraph = AnnotatedParagraph.build(tokenize(sample.full_text), sample.adu_spans)
        out.append((list(paragraph.tokens), list(paragraph.labels())))
    return out


class TestRunConfig:
    def test_defaults_are_valid(self):
        cfg = RunConfig()
        assert cfg.input_mode == "original" and cfg.augmenter == "none"

    def test_bad_mode_rejected(self):
        with pytest.raises(DataError, match="input_mode"):
            RunConfig(input_mode="shuffled")

    def test_bad_augmenter_rejected(self):
        with pytest.raises(DataError, match="augmenter"):
            RunConfig(augmenter="llm")

    def test_remote_requires_endpoint(self):
        with pytest.raises(DataError, match="endpoint"):
            RunConfig(augmenter="remote")

    def test_rule_requires_known_schema(self):
        with pytest.raises(DataError, match="role map"):
            RunConfig(augmenter="rule", schema="weird")

    def test_seed_feeds_policy(self):
        assert RunConfig(seed=5).policy().seed == 5


class TestPrepare:
    def test_baseline_identity_path(self):
        tokens = tokenize(CAUSAL_SENTENCE)
        inst = prepare_downstream(tokens, CAUSAL_LABELS, RunConfig())
        assert inst.ok
        assert list(inst.augmented_tokens) == list(tokens)
        assert list(inst.projected_labels) == CAUSAL_LABELS
        assert inst.source_text == CAUSAL_SENTENCE

    def test_marker_stripping_golden(self):
        text = (
            "A great number of plants and animals died out because "
            "they were unable to fit into the new environment."
        )
        tokens = tokenize(text)
        labels = ["O"] * len(tokens)
        for i in range(0, 9):
            labels[i] = "B-Claim" if i == 0 else "I-Claim"
        because = tokens.index("because")
        for i in range(because + 1, len(tokens) - 1):
            labels[i] = "B-Premise" if i == because + 1 else "I-Premise"
        inst = prepare_downstream(tokens, labels, RunConfig(input_mode="removed_dms"))
        assert inst.ok
        assert inst.source_text == (
            "A great number of plants and animals died out, "
            "they were unable to fit into the new environment."
        )
        assert [s.text for s in inst.gold_slots] == ["", "because"]

    def test_removed_mode_keeps_gold_slots_from_original(self):
        inst = prepare_downstream(
            tokenize(CAUSAL_SENTENCE), CAUSAL_LABELS, RunConfig(input_mode="removed_dms")
        )
        assert [s.text for s in inst.gold_slots] == ["Because", "I think that"]
        assert [s.text for s in inst.base_slots] == ["", ""]

    def test_original_mode_prediction_includes_kept_markers(self):
        inst = prepare_downstream(tokenize(CAUSAL_SENTENCE), CAUSAL_LABELS, RunConfig())
        assert [s.text for s in inst.predicted_slots] == ["Because", "I think that"]

    def test_rule_mode_fills_every_slot(self):
        inst = prepare_downstream(
            tokenize(CAUSAL_SENTENCE),
            CAUSAL_LABELS,
            RunConfig(input_mode="removed_dms", augmenter="rule"),
        )
        assert inst.ok
        assert all(s.is_explicit for s in inst.predicted_slots)

    def test_rule_mode_is_deterministic(self):
        cfg = RunConfig(input_mode="removed_dms", augmenter="rule", seed=21)
        tokens = tokenize(CAUSAL_SENTENCE)
        first = prepare_downstream(tokens, CAUSAL_LABELS, cfg)
        second = prepare_downstream(tokens, CAUSAL_LABELS, cfg)
        assert first.augmented_text == second.augmented_text

    def test_projection_length_matches_augmented(self):
        inst = prepare_downstream(
            tokenize(CAUSAL_SENTENCE),
            CAUSAL_LABELS,
            RunConfig(input_mode="removed_dms", augmenter="rule"),
        )
        assert len(inst.projected_labels) == len(inst.augmented_tokens)

    def test_validation_failure_is_tagged_not_raised(self):
        inst = prepare_downstream(["a", "b"], ["O"], RunConfig())
        assert inst.failed_stage == "validate"
        assert "labels" in inst.error

    def test_augment_failure_is_tagged(self):
        cfg = RunConfig(augmenter="remote", endpoint="http://127.0.0.1:1")
        inst = prepare_downstream(tokenize("it rains."), ["O", "O", "O"], cfg)
        assert inst.failed_stage == "augment"

    def test_remote_echo_behaves_like_baseline(self, scripted_server):
        _, endpoint = scripted_server
        cfg = RunConfig(augmenter="remote", endpoint=endpoint, timeout=5.0)
        inst = prepare_downstream(tokenize(CAUSAL_SENTENCE), CAUSAL_LABELS, cfg)
        assert inst.ok
        assert inst.augmented_text == inst.source_text

    def test_batch_preserves_order_and_isolates_failures(self):
        records = _sample_paragraphs(3)
        records.insert(1, (["a", "b"], ["O"]))  # malformed
        cfg = RunConfig(input_mode="removed_dms", augmenter="rule")
        instances = prepare_downstream_batch(records, cfg)
        assert len(instances) == 4
        assert [inst.ok for inst in instances] == [True, False, True, True]
        assert instances[1].failed_stage == "validate"
        for record, inst in zip(records, instances):
            assert list(inst.original_tokens) == list(record[0])


class TestBackprojection:
    def _prepared(self, cfg=None):
        cfg = cfg or RunConfig(input_mode="removed_dms", augmenter="rule")
        return prepare_downstream(tokenize(CAUSAL_SENTENCE), CAUSAL_LABELS, cfg)

    def test_identity_instance_passes_predictions_through(self):
        inst = prepare_downstream(tokenize(CAUSAL_SENTENCE), CAUSAL_LABELS, RunConfig())
        inst.predicted_labels = inst.projected_labels
        assert list(backproject_predictions(inst)) == CAUSAL_LABELS

    def test_round_trip_recovers_original_labels(self):
        inst = self._prepared()
        inst.predicted_labels = inst.projected_labels
        assert list(backproject_predictions(inst)) == CAUSAL_LABELS

    def test_prediction_on_inserted_tokens_is_dropped_and_counted(self):
        from dmaug.core import TokenSequence

        inst = DownstreamInstance(
            original_tokens=TokenSequence(["it", "rains", "."]),
            original_labels=("O", "O", "O"),
        )
        inst.augmented_tokens = TokenSequence(["Moreover", ",", "it", "rains", "."])
        inst.predicted_labels = ("B-Claim", "I-Claim", "O", "O", "O")
        result = backproject_predictions(inst)
        assert result == ("O", "O", "O")
        assert inst.dropped_predictions == 2

    def test_substituted_tokens_stay_anchored(self):
        # a same-position rewording pairs up in the alignment, so its
        # prediction lands on the original token rather than being dropped
        inst = self._prepared()
        original = {t.casefold() for t in inst.original_tokens}
        inst.predicted_labels = tuple(
            "B-Claim" if tok.casefold() not in original else "O"
            for tok in inst.augmented_tokens
        )
        backproject_predictions(inst)
        landed = sum(1 for tag in inst.backprojected_labels if tag != "O")
        novel = sum(
            1 for tok in inst.augmented_tokens if tok.casefold() not in original
        )
        assert landed + inst.dropped_predictions <= novel
        assert inst.dropped_predictions >= 0

    def test_missing_predictions_rejected(self):
        inst = self._prepared()
        with pytest.raises(DataError, match="no predictions"):
            backproject_predictions(inst)

    def test_wrong_length_predictions_rejected(self):
        inst = self._prepared()
        inst.predicted_labels = ("O",)
        with pytest.raises(DataError, match="predictions for"):
            backproject_predictions(inst)

    def test_unprepared_instance_rejected(self):
        inst = DownstreamInstance(
            original_tokens=tokenize("it rains."), original_labels=("O", "O", "O")
        )
        with pytest.raises(DataError, match="prepare it first"):
            backproject_predictions(inst)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 199))
    def test_synthetic_round_trip_property(self, index):
        cores = read_core_elements_tsv(assets.default_cores_path())
        sample = generate_split(cores)[index]
        paragraph = AnnotatedParagraph.build(tokenize(sample.full_text), sample.adu_spans)
        cfg = RunConfig(input_mode="removed_dms", augmenter="rule", seed=index)
        inst = prepare_downstream(list(paragraph.tokens), list(paragraph.labels()), cfg)
        assert inst.ok
        inst.predicted_labels = inst.projected_labels
        backproject_predictions(inst)
        gold_spans = {
            (s.start, s.end, s.label) for s in paragraph.adus
        }
        from dmaug.core import bio_to_spans

        recovered = {
            (s.start, s.end, s.label)
            for s in bio_to_spans(list(inst.backprojected_labels))
        }
        assert recovered == gold_spans


class TestEvaluation:
    def _scored_instance(self):
        inst = prepare_downstream(
            tokenize(CAUSAL_SENTENCE),
            CAUSAL_LABELS,
            RunConfig(input_mode="removed_dms", augmenter="rule"),
        )
        inst.predicted_labels = inst.projected_labels
        backproject_predictions(inst)
        return inst

    def test_perfect_run_scores_one(self):
        report = evaluate_run([self._scored_instance()])
        assert report.span.f1 == 1.0
        assert report.token.accuracy == 1.0
        assert report.dm_coverage == 1.0

    def test_report_lists_expected_fields(self):
        report = evaluate_run([self._scored_instance()])
        blob = report.as_dict()
        for key in (
            "span_precision",
            "span_recall",
            "span_f1",
            "token_accuracy",
            "token_macro_f1",
            "dm_coverage",
            "dm_accuracy",
            "dropped_predictions",
            "failures",
        ):
            assert key in blob

    def test_failures_are_tallied_by_stage(self):
        bad = prepare_downstream(["a", "b"], ["O"], RunConfig())
        report = evaluate_run([self._scored_instance(), bad])
        assert report.failures == {"validate": 1}
        assert report.instances_total == 2
        assert report.instances_evaluated == 1

    def test_resources_enable_marker_accuracy(self):
        table = EmbeddingTable.load(assets.default_vectors_path())
        report = evaluate_run(
            [self._scored_instance()], MetricResources(word_table=table)
        )
        assert report.dm_accuracy is not None
        assert report.dm_accuracy.word_embs is not None

    def test_reports_are_reproducible(self):
        a = evaluate_run([self._scored_instance()]).to_json()
        b = evaluate_run([self._scored_instance()]).to_json()
        assert a == b

    def test_summary_means_and_std(self):
        reports = [evaluate_run([self._scored_instance()]) for _ in range(3)]
        summary = summarize_runs(reports)
        mean, std = summary["span_f1"]
        assert mean == 1.0 and std == 0.0
        assert "token_accuracy" in summary

    def test_summary_drops_absent_metrics(self):
        report = RunReport(instances_total=1, instances_evaluated=0)
        assert summarize_runs([report]) == {}

    def test_summary_rejects_empty(self):
        with pytest.raises(DataError):
            summarize_runs([])

    def test_mean_std_formatting(self):
        assert format_mean_std(0.713, 0.007) == "0.713 (± .007)"
        assert format_mean_std(1.0, 0.0) == "1.000 (± .000)"

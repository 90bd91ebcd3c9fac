import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmaug import assets
from dmaug.artificial import DmPolicy, generate_split, read_core_elements_tsv
from dmaug.augment import (
    AugmentRequest,
    DiscoveryPair,
    ExplicitRelation,
    ImplicitRelation,
    PdtbDocument,
    RemoteProtocolError,
    RemoteTimeout,
    RemoteUnavailable,
    plan_rule_inserts,
    prepare_discovery_pair,
    prepare_pdtb_pairs,
    read_discovery_tsv,
    read_pairs_jsonl,
    read_pdtb_jsonl,
    remote_augment,
    remote_augment_many,
    rule_based_augment,
    write_pairs_jsonl,
)
from dmaug.core import AduSpan, DataError, dm_equal, tokenize
from dmaug.extraction import (
    AnnotatedParagraph,
    diff_predicted_dms,
    gold_dms_left_context,
    remove_explicit_dms,
)


def _paragraph(text, spans):
    return AnnotatedParagraph.build(tokenize(text), [AduSpan(*s) for s in spans])


# ---------------------------------------------------------------------------
# Rule baseline
# ---------------------------------------------------------------------------


class TestRuleAugment:
    def test_two_unit_sentence_gets_both_markers(self):
        p = _paragraph(
            "We should extend the scheme, shared bikes help.",
            [(0, 5, "Claim"), (6, 9, "Premise")],
        )
        policy = DmPolicy()
        out = rule_based_augment(p, policy, "artificial")
        slots = diff_predicted_dms(list(p.tokens), tokenize(out), [0, 6])
        assert all(s.is_explicit for s in slots)
        claim_dm, premise_dm = slots[0].text, slots[1].text
        assert any(dm_equal(claim_dm, dm) for dm in policy.claim_dms)
        assert any(dm_equal(premise_dm, dm) for dm in policy.support_mid_dms)

    def test_deterministic_across_calls(self):
        p = _paragraph("it rains, we stay.", [(0, 2, "Claim"), (3, 5, "Premise")])
        assert rule_based_augment(p) == rule_based_augment(p)

    def test_fully_marked_paragraph_unchanged(self):
        p = _paragraph(
            "Because it rains, I think that we stay home.",
            [(1, 3, "Premise"), (7, 10, "Claim")],
        )
        assert rule_based_augment(p) == p.text()

    def test_later_sentence_start_takes_detached_marker(self):
        p = _paragraph(
            "Because it rains, we stay. The field is soaked.",
            [(1, 3, "Premise"), (4, 6, "Claim"), (7, 11, "Premise")],
        )
        out = rule_based_augment(p)
        slots = diff_predicted_dms(list(p.tokens), tokenize(out), [1, 4, 7])
        assert slots[0].text == "" or not slots[0].is_explicit  # already marked
        assert slots[1].is_explicit  # mid-sentence claim
        lead_dm = slots[2].text  # opens the second sentence
        assert any(dm_equal(lead_dm, dm) for dm in DmPolicy().support_lead_dms)
        # detached style: capitalized, followed by a comma in the output
        assert f"{lead_dm}," in out

    def test_insertions_only_never_edits_existing_tokens(self):
        p = _paragraph(
            "The tax helps, emissions fell. People noticed.",
            [(0, 3, "Claim"), (4, 6, "Premise"), (7, 9, "Premise")],
        )
        before = list(p.tokens)
        out_tokens = tokenize(rule_based_augment(p))
        # the original tokens must survive as a subsequence, byte-identical
        it = iter(out_tokens)
        assert all(any(tok == candidate for candidate in it) for tok in before)

    def test_unmapped_label_is_rejected_by_name(self):
        p = _paragraph("it rains.", [(0, 2, "Verdict")])
        with pytest.raises(DataError, match="Verdict"):
            rule_based_augment(p, DmPolicy(), "artificial")

    def test_unknown_builtin_map_rejected(self):
        p = _paragraph("it rains.", [(0, 2, "Claim")])
        with pytest.raises(DataError, match="no built-in role map"):
            rule_based_augment(p, DmPolicy(), "nope")

    def test_plan_positions_are_unit_starts(self):
        p = _paragraph("it rains, we stay.", [(0, 2, "Claim"), (3, 5, "Premise")])
        plan = plan_rule_inserts(p, DmPolicy(), {"Claim": "claim", "Premise": "support"})
        assert [pos for pos, _ in plan] == [0, 3]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 39))
    def test_remove_then_augment_recovers_planned_markers(self, config_index):
        cores = read_core_elements_tsv(assets.default_cores_path())
        sample = generate_split(cores[:1])[config_index]
        paragraph = AnnotatedParagraph.build(tokenize(sample.full_text), sample.adu_spans)
        bare = remove_explicit_dms(paragraph, gold_dms_left_context(paragraph))
        policy = DmPolicy(seed=99)
        plan = plan_rule_inserts(bare, policy, {"Claim": "claim", "Premise": "support"})
        assert [pos for pos, _ in plan] == [adu.start for adu in bare.adus]
        out = rule_based_augment(bare, policy, "artificial")
        recovered = diff_predicted_dms(
            list(bare.tokens), tokenize(out), [adu.start for adu in bare.adus]
        )
        assert all(slot.is_explicit for slot in recovered)
        for slot, (_, planned_tokens) in zip(recovered, plan):
            planned_text = " ".join(t for t in planned_tokens if t != ",")
            assert dm_equal(slot.text, planned_text)


# ---------------------------------------------------------------------------
# Remote client
# ---------------------------------------------------------------------------


class TestRemoteAugment:
    def test_echo_round_trip(self, scripted_server):
        _, endpoint = scripted_server
        text = "It rains, we stay home."
        assert remote_augment(AugmentRequest(text), endpoint) == text

    def test_server_error_is_protocol_error(self, scripted_server):
        server, endpoint = scripted_server
        server.mode = "boom"
        with pytest.raises(RemoteProtocolError, match="500"):
            remote_augment(AugmentRequest("x y z"), endpoint)

    def test_non_json_body_is_protocol_error(self, scripted_server):
        server, endpoint = scripted_server
        server.mode = "not-json"
        with pytest.raises(RemoteProtocolError, match="non-JSON"):
            remote_augment(AugmentRequest("x y z"), endpoint)

    def test_missing_field_is_protocol_error(self, scripted_server):
        server, endpoint = scripted_server
        server.mode = "wrong-shape"
        with pytest.raises(RemoteProtocolError, match="augmented_text"):
            remote_augment(AugmentRequest("x y z"), endpoint)

    def test_unreachable_endpoint(self):
        with pytest.raises(RemoteUnavailable):
            remote_augment(AugmentRequest("x"), "http://127.0.0.1:1", retries=0)

    def test_timeout_class(self, scripted_server):
        server, endpoint = scripted_server
        server.mode = "slow-once"
        with pytest.raises(RemoteTimeout):
            remote_augment(AugmentRequest("x"), endpoint, timeout=0.3, retries=0)

    def test_one_retry_rides_out_a_slow_first_answer(self, scripted_server):
        server, endpoint = scripted_server
        server.mode = "slow-once"
        assert remote_augment(AugmentRequest("ok then"), endpoint, timeout=0.5, retries=1) == "ok then"
        assert server.hits == 2

    def test_batch_keeps_order_and_isolates_failures(self, scripted_server):
        _, endpoint = scripted_server
        requests_ = [AugmentRequest(f"text {i}") for i in range(8)]
        results = remote_augment_many(requests_, endpoint, max_workers=4)
        assert results == [f"text {i}" for i in range(8)]
        down = remote_augment_many(requests_[:2], "http://127.0.0.1:1", retries=0)
        assert all(isinstance(r, RemoteUnavailable) for r in down)


class TestAugmentRequest:
    def test_rejects_empty_text(self):
        with pytest.raises(DataError, match="empty"):
            AugmentRequest("   ")

    def test_rejects_out_of_range_position(self):
        with pytest.raises(DataError, match="outside"):
            AugmentRequest("one two", candidate_positions=(2,))

    def test_rejects_unsorted_positions(self):
        with pytest.raises(DataError, match="strictly increasing"):
            AugmentRequest("one two three", candidate_positions=(1, 1))


# ---------------------------------------------------------------------------
# Pair preparation
# ---------------------------------------------------------------------------


class TestDiscoveryPairs:
    def test_connective_leads_second_sentence(self):
        pair = DiscoveryPair(
            s1="The sensors degrade slowly.",
            s2="The maintenance window is wide.",
            y="overall,",
        )
        source, target = prepare_discovery_pair(pair)
        assert source == "The sensors degrade slowly. The maintenance window is wide."
        assert target == "The sensors degrade slowly. Overall, the maintenance window is wide."

    def test_no_case_edits_when_none_needed(self):
        pair = DiscoveryPair(s1="Rain came.", s2="the field flooded.", y="Consequently,")
        _, target = prepare_discovery_pair(pair)
        assert target == "Rain came. Consequently, the field flooded."

    def test_terminal_run_collapses_to_one(self):
        source, _ = prepare_discovery_pair(DiscoveryPair("It rained!!", "We left.", "so"))
        assert source == "It rained! We left."

    def test_missing_terminal_added(self):
        source, _ = prepare_discovery_pair(DiscoveryPair("It rained", "We left.", "so"))
        assert source == "It rained. We left."

    def test_round_trip_recovers_connective(self):
        for y in ("overall,", "because of that,", "so"):
            pair = DiscoveryPair("The pump failed.", "The line stopped.", y)
            source, target = prepare_discovery_pair(pair)
            boundary = len(tokenize(_first_of(source)))
            [slot] = diff_predicted_dms(tokenize(source), tokenize(target), [boundary])
            assert dm_equal(slot.text, y)

    def test_idempotent(self):
        pair = DiscoveryPair("One thing happened.", "Another followed.", "then")
        assert prepare_discovery_pair(pair) == prepare_discovery_pair(pair)

    def test_empty_fields_rejected(self):
        with pytest.raises(DataError, match="field y"):
            DiscoveryPair("a.", "b.", " ")


def _first_of(source: str) -> str:
    terminal = source.index(".")
    return source[: terminal + 1]


class TestPdtbPairs:
    def test_mid_sentence_marker_becomes_comma(self):
        doc = PdtbDocument(
            text="the hall was crowded but the talks ran long",
            explicit=(ExplicitRelation(21, 24, "but"),),
        )
        source, target = prepare_pdtb_pairs(doc)
        assert source == "the hall was crowded, the talks ran long"
        assert target == doc.text

    def test_sentence_initial_marker_recapitalizes(self):
        doc = PdtbDocument(
            text="However, prices rose.",
            explicit=(ExplicitRelation(0, 7, "However"),),
        )
        source, _ = prepare_pdtb_pairs(doc)
        assert source == "Prices rose."

    def test_marker_after_punctuation_deleted_plainly(self):
        doc = PdtbDocument(
            text="rates fell; but demand grew",
            explicit=(ExplicitRelation(12, 15, "but"),),
        )
        source, _ = prepare_pdtb_pairs(doc)
        assert source == "rates fell; demand grew"

    def test_implicit_connective_inserted_at_sentence_start(self):
        text = "Prices rose. Demand fell."
        doc = PdtbDocument(text=text, implicit=(ImplicitRelation(13, "however"),))
        _, target = prepare_pdtb_pairs(doc)
        assert target == "Prices rose. However demand fell."

    def test_implicit_connective_mid_sentence(self):
        text = "prices rose and demand fell"
        doc = PdtbDocument(text=text, implicit=(ImplicitRelation(16, "Then"),))
        _, target = prepare_pdtb_pairs(doc)
        assert target == "prices rose and then demand fell"

    def test_document_without_relations_is_identity(self):
        doc = PdtbDocument(text="Nothing to see here.")
        assert prepare_pdtb_pairs(doc) == (doc.text, doc.text)

    def test_overlapping_annotations_rejected(self):
        with pytest.raises(DataError, match="overlapping"):
            PdtbDocument(
                text="a because since b",
                explicit=(
                    ExplicitRelation(2, 9, "because"),
                    ExplicitRelation(5, 13, "use sinc"),
                ),
            )

    def test_connective_text_mismatch_rejected(self):
        with pytest.raises(DataError, match="text has"):
            PdtbDocument(text="it rains a lot", explicit=(ExplicitRelation(3, 8, "because"),))

    def test_out_of_range_annotations_rejected(self):
        with pytest.raises(DataError, match="outside document"):
            PdtbDocument(text="short", explicit=(ExplicitRelation(2, 99, "x"),))
        with pytest.raises(DataError, match="outside document"):
            PdtbDocument(text="short", implicit=(ImplicitRelation(99, "but"),))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


class TestFileFormats:
    def test_discovery_tsv_round_trip(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text(
            "s1\ts2\ty\nThe pump failed.\tThe line stopped.\tso\n", encoding="utf-8"
        )
        [pair] = read_discovery_tsv(path)
        assert pair == DiscoveryPair("The pump failed.", "The line stopped.", "so")

    def test_discovery_tsv_bad_header(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\tc\nx\ty\tz\n", encoding="utf-8")
        with pytest.raises(DataError, match="header"):
            read_discovery_tsv(path)

    def test_discovery_tsv_error_carries_line_number(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("s1\ts2\ty\nonly two\tfields\n", encoding="utf-8")
        with pytest.raises(DataError, match="pairs.tsv:2"):
            read_discovery_tsv(path)

    def test_pdtb_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        record = {
            "text": "However, prices rose.",
            "explicit": [{"start": 0, "end": 7, "connective": "However"}],
            "implicit": [{"offset": 9, "connective": "thus"}],
        }
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        [doc] = read_pdtb_jsonl(path)
        assert doc.explicit[0].connective == "However"
        assert doc.implicit[0].offset == 9

    def test_pdtb_jsonl_malformed_record(self, tmp_path):
        path = tmp_path / "docs.jsonl"
        path.write_text('{"explicit": []}\n', encoding="utf-8")
        with pytest.raises(DataError, match="docs.jsonl:1"):
            read_pdtb_jsonl(path)

    def test_pairs_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "out.jsonl"
        pairs = [("in a", "out a"), ("in b", "out b")]
        write_pairs_jsonl(path, pairs)
        assert read_pairs_jsonl(path) == pairs

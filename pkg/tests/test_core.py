import pytest
from hypothesis import given, strategies as st

from dmaug.core import (
    AduSpan,
    DataError,
    DmSlot,
    HOTEL,
    LabelSequence,
    MTX,
    PEC,
    TokenSequence,
    bio_to_spans,
    capitalize_first,
    detokenize,
    dm_equal,
    is_valid_bio,
    lowercase_first,
    normalize_dm,
    read_conll,
    repair_bio,
    sentence_start_of,
    sentence_starts,
    spans_to_bio,
    tokenize,
    write_conll,
)

# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------


def test_tokenize_separates_punctuation():
    assert tokenize("However, it rains.") == ["However", ",", "it", "rains", "."]


def test_tokenize_splits_clitics():
    assert tokenize("don't stop") == ["don", "'t", "stop"]
    assert tokenize("it's") == ["it", "'s"]


def test_tokenize_empty_input():
    assert tokenize("") == []
    assert tokenize("   \n\t") == []


def test_tokenize_keeps_hyphenated_words_and_decimals():
    assert tokenize("state-of-the-art results: 3.5 points") == [
        "state-of-the-art",
        "results",
        ":",
        "3.5",
        "points",
    ]


def test_tokenize_applies_nfc():
    composed = "café"
    decomposed = "café"
    assert tokenize(decomposed) == tokenize(composed) == [composed]


def test_detokenize_spacing_rules():
    assert detokenize(["(", "yes", ")"]) == "(yes)"
    assert detokenize(["However", ",", "it", "rains", "."]) == "However, it rains."
    assert detokenize(["don", "'t", "stop"]) == "don't stop"
    assert detokenize([]) == ""


def test_detokenize_pairs_straight_quotes():
    toks = ["He", "said", '"', "hi", '"', "and", '"', "bye", '"', "."]
    assert detokenize(toks) == 'He said "hi" and "bye".'


@given(
    st.text(
        alphabet=st.sampled_from(
            list("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")
            + list(" .,;:!?()[]'\"-—")
        ),
        max_size=60,
    )
)
def test_retokenizing_detokenized_output_is_stable(text):
    toks = tokenize(text)
    assert tokenize(detokenize(toks)) == toks


def test_sentence_starts_terminal_heuristic():
    toks = tokenize("One here. Two there! Three?")
    assert sentence_starts(toks) == [0, 3, 6]
    assert sentence_starts([]) == []
    # an ellipsis ends at most one sentence
    assert sentence_starts(tokenize("wait... done")) == [0, 4]


def test_sentence_start_of_picks_enclosing_sentence():
    starts = [0, 3, 6]
    assert sentence_start_of(starts, 0) == 0
    assert sentence_start_of(starts, 4) == 3
    assert sentence_start_of(starts, 6) == 6


def test_case_helpers_touch_first_letter_only():
    assert capitalize_first("ecological concerns") == "Ecological concerns"
    assert capitalize_first('"quoted"') == '"Quoted"'
    assert capitalize_first(", , ,") == ", , ,"
    assert lowercase_first("The Work") == "the Work"


def test_marker_normalization_strips_at_most_one_trailing_comma():
    assert normalize_dm("Moreover,") == "moreover"
    assert normalize_dm(" On the Other Hand , ") == "on the other hand"
    assert normalize_dm("However, ,") == "however,"
    assert normalize_dm("because") == "because"


def test_marker_equality_is_case_and_comma_insensitive():
    assert dm_equal("Moreover,", "moreover")
    assert dm_equal("HOWEVER", "however")
    assert not dm_equal("moreover", "however")


# ---------------------------------------------------------------------------
# Sequence types
# ---------------------------------------------------------------------------


def test_token_sequence_rejects_empty_and_spaced_tokens():
    with pytest.raises(DataError, match="position 1"):
        TokenSequence(["ok", ""])
    with pytest.raises(DataError, match="whitespace"):
        TokenSequence(["a b"])


def test_token_sequence_round_trips_text():
    seq = TokenSequence.from_text("However, it rains.")
    assert list(seq) == ["However", ",", "it", "rains", "."]
    assert seq.text() == "However, it rains."
    assert seq[0] == "However" and len(seq) == 5


def test_label_sequence_validates_tag_syntax():
    LabelSequence(["O", "B-Claim", "I-Claim"])
    with pytest.raises(DataError, match="position 1"):
        LabelSequence(["O", "B-"])
    with pytest.raises(DataError, match="position 0"):
        LabelSequence(["X-Claim"])


def test_bio_validity_and_repair():
    assert is_valid_bio(["O", "B-Claim", "I-Claim", "O"])
    assert not is_valid_bio(["O", "I-Claim"])
    assert not is_valid_bio(["B-Premise", "I-Claim"])
    assert list(repair_bio(["O", "I-Claim", "I-Claim"])) == ["O", "B-Claim", "I-Claim"]
    assert list(repair_bio(["B-Premise", "I-Claim"])) == ["B-Premise", "B-Claim"]


def test_schemas_carry_expected_label_sets():
    assert PEC.labels == {"Premise", "Claim", "MajorClaim"}
    assert MTX.labels == {"Premise", "Claim"}
    assert HOTEL.labels == {
        "Background",
        "Claim",
        "ImplicitPremise",
        "MajorClaim",
        "Premise",
        "Recommendation",
    }
    with pytest.raises(DataError, match="MajorClaim"):
        MTX.check("MajorClaim")


def test_dm_slot_explicitness():
    assert DmSlot(0, "however").is_explicit
    assert not DmSlot(1, "").is_explicit


# ---------------------------------------------------------------------------
# Span <-> BIO
# ---------------------------------------------------------------------------


def test_spans_to_bio_golden():
    tags = spans_to_bio([AduSpan(1, 3, "Claim"), AduSpan(4, 5, "Premise")], 6)
    assert list(tags) == ["O", "B-Claim", "I-Claim", "O", "B-Premise", "O"]


def test_spans_to_bio_rejects_overlap_naming_the_span():
    with pytest.raises(DataError, match=r"start=2, end=5.*overlaps"):
        spans_to_bio([AduSpan(0, 3, "Claim"), AduSpan(2, 5, "Premise")], 6)


def test_spans_to_bio_rejects_out_of_range():
    with pytest.raises(DataError, match="exceeds sequence length 4"):
        spans_to_bio([AduSpan(2, 6, "Claim")], 4)


def test_span_construction_rejects_degenerate_ranges():
    with pytest.raises(DataError):
        AduSpan(3, 3, "Claim")
    with pytest.raises(DataError):
        AduSpan(-1, 2, "Claim")


def test_bio_to_spans_tolerant_promotes_stray_continuations():
    spans = bio_to_spans(["O", "I-Claim", "I-Claim", "O"])
    assert spans == [AduSpan(1, 3, "Claim")]
    spans = bio_to_spans(["B-Premise", "I-Claim"])
    assert spans == [AduSpan(0, 1, "Premise"), AduSpan(1, 2, "Claim")]


def test_bio_to_spans_strict_reports_offending_index():
    with pytest.raises(DataError, match="position 1"):
        bio_to_spans(["O", "I-Claim"], strict=True)


@st.composite
def _span_layouts(draw):
    length = draw(st.integers(min_value=1, max_value=14))
    spans = []
    cursor = 0
    while cursor < length:
        if draw(st.booleans()):
            start = cursor
            end = draw(st.integers(min_value=start + 1, max_value=length))
            spans.append(AduSpan(start, end, draw(st.sampled_from(["Claim", "Premise"]))))
            cursor = end
        cursor += draw(st.integers(min_value=0, max_value=2)) + (0 if spans and spans[-1].end == cursor else 1)
    return length, spans


@given(_span_layouts())
def test_span_bio_round_trip(layout):
    length, spans = layout
    recovered = bio_to_spans(spans_to_bio(spans, length))
    assert recovered == spans


# ---------------------------------------------------------------------------
# CoNLL files
# ---------------------------------------------------------------------------


def _sample_sequences():
    return [
        (TokenSequence(["However", ",", "it", "rains", "."]), LabelSequence(["O", "O", "B-Claim", "I-Claim", "O"])),
        (TokenSequence(["Sure", "."]), LabelSequence(["B-Premise", "O"])),
    ]


def test_conll_round_trip(tmp_path):
    path = tmp_path / "toy.conll"
    write_conll(path, _sample_sequences())
    assert read_conll(path) == _sample_sequences()


def test_conll_read_reports_file_position(tmp_path):
    path = tmp_path / "broken.conll"
    path.write_text("ok\tO\nbad line\n", encoding="utf-8")
    with pytest.raises(DataError, match=r"broken\.conll:2"):
        read_conll(path)


def test_conll_read_rejects_malformed_tag(tmp_path):
    path = tmp_path / "tags.conll"
    path.write_text("ok\tB-\n", encoding="utf-8")
    with pytest.raises(DataError, match=r"tags\.conll:1.*malformed tag"):
        read_conll(path)


def test_conll_write_rejects_length_mismatch(tmp_path):
    with pytest.raises(DataError, match="2 tokens but 1 tags"):
        write_conll(tmp_path / "x.conll", [(["a", "b"], ["O"])])


def test_conll_read_normalizes_tokens(tmp_path):
    path = tmp_path / "nfc.conll"
    path.write_text("café\tO\n", encoding="utf-8")
    [(tokens, _)] = read_conll(path)
    assert tokens[0] == "café"

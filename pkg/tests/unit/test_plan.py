"""Tests for plan tokenization, parsing and catalog validation"""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.alignment.plan import (
    load_catalog,
    load_plan,
    parse_catalog,
    parse_plan,
    serialize_plan,
    tokenize,
    validate_plan,
)
from src.errors import CatalogInvalid, EmptySpeech, MissingInput, ParseError, PlanInvalid
from src.models import Channel, ExpressionPlan, SpeedLevel

_ALPHABET = list("abzAZ09\u0130I\u0131\u00df\u00e9\u00c9'\u2019-.,!? ") + ["\u0301", "\u0308", "\u093e", "\u0915"]


class TestTokenize:
    """Test speech tokenization"""

    def test_greeting(self):
        """Test the greeting splits into six lowercase words"""
        tokens = tokenize("Happy New Year to you too!")
        assert [t.normalized for t in tokens] == ["happy", "new", "year", "to", "you", "too"]
        assert [t.index for t in tokens] == list(range(6))
        assert tokens[0].surface == "Happy"

    def test_sentence_final_flag(self):
        """Test only words before terminal punctuation are sentence-final"""
        tokens = tokenize("Hello there. How are you?")
        assert [t.sentence_final for t in tokens] == [False, True, False, False, True]

    def test_clause_final_flag(self):
        """Test commas mark clause ends without marking sentence ends"""
        tokens = tokenize("Well, hello")
        assert tokens[0].clause_final
        assert not tokens[0].sentence_final
        assert not tokens[1].clause_final

    def test_intra_word_apostrophes_and_hyphens(self):
        """Test contractions and hyphenated words stay single tokens"""
        tokens = tokenize("Don't be half-hearted - ok?")
        assert [t.normalized for t in tokens] == ["don't", "be", "half-hearted", "ok"]

    def test_empty_speech(self):
        """Test text without word characters is rejected"""
        with pytest.raises(EmptySpeech):
            tokenize("  ... !!! ")

    def test_dotted_capital_stays_one_word(self):
        """Test lowercasing İ keeps its combining dot inside the word"""
        tokens = tokenize("İstanbul calling")
        assert [t.normalized for t in tokens] == ["i\u0307stanbul", "calling"]
        again = tokenize(" ".join(t.normalized for t in tokens))
        assert [t.normalized for t in again] == ["i\u0307stanbul", "calling"]

    def test_combining_marks_inside_words(self):
        """Test decomposed accents and vowel signs do not split words"""
        tokens = tokenize("cafe\u0301 \u0915\u093e\u092e")
        assert [t.surface for t in tokens] == ["cafe\u0301", "\u0915\u093e\u092e"]

    @given(st.text(alphabet=st.sampled_from(_ALPHABET), max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_normalization_is_idempotent(self, text):
        """Test tokenizing the joined normalized words reproduces them"""
        normalized = [t.normalized for t in tokenize("a " + text)]
        assert [t.normalized for t in tokenize(" ".join(normalized))] == normalized


class TestParsePlan:
    """Test plan document parsing"""

    def test_parse_full_plan(self, fixture_dir):
        """Test the fixture plan loads with actions in plan order"""
        plan = load_plan(fixture_dir / "plan.json")
        assert plan.expressions == ("<bless>",)
        assert plan.motions == ("<hello>", "<nod>")
        assert plan.action_ids == ["<bless>", "<hello>", "<nod>"]
        assert [a.channel for a in plan.actions] == [Channel.EXPRESSION, Channel.MOTION, Channel.MOTION]
        assert plan.speed == SpeedLevel.NORMAL
        assert plan.emotion_label == "joyful"

    def test_defaults(self):
        """Test omitted fields take their defaults"""
        plan = parse_plan('{"speech_text": "hi"}')
        assert plan.expressions == ()
        assert plan.motions == ()
        assert plan.speed == SpeedLevel.NORMAL

    def test_numeric_speed(self):
        """Test a direct multiplier is accepted"""
        plan = parse_plan('{"speech_text": "hi", "speed": 1.3}')
        assert plan.speed == pytest.approx(1.3)

    def test_malformed_json(self):
        """Test broken JSON reports a byte offset"""
        with pytest.raises(ParseError) as exc_info:
            parse_plan('{"speech_text": "hi",')
        assert exc_info.value.offset > 0

    def test_non_object_document(self):
        """Test a JSON array is not a plan"""
        with pytest.raises(ParseError):
            parse_plan("[1, 2]")

    def test_missing_speech(self):
        """Test speech_text is required"""
        with pytest.raises(PlanInvalid) as exc_info:
            parse_plan('{"expressions": []}')
        assert exc_info.value.field == "speech_text"

    def test_blank_speech(self):
        """Test whitespace-only speech is invalid"""
        with pytest.raises(PlanInvalid) as exc_info:
            parse_plan('{"speech_text": "   "}')
        assert exc_info.value.field == "speech_text"

    def test_malformed_action_id(self):
        """Test the offending list position is reported"""
        with pytest.raises(PlanInvalid) as exc_info:
            parse_plan('{"speech_text": "hi", "motions": ["<nod>", "wave"]}')
        assert exc_info.value.field == "motions[1]"

    def test_non_positive_speed(self):
        """Test negative multipliers are rejected"""
        with pytest.raises(PlanInvalid) as exc_info:
            parse_plan('{"speech_text": "hi", "speed": -1}')
        assert exc_info.value.field == "speed"

    def test_serialize_roundtrip(self, greeting_plan):
        """Test serialized plans parse back to the same plan"""
        assert parse_plan(serialize_plan(greeting_plan)) == greeting_plan

    def test_serialize_keys(self):
        """Test the plan file keys are used"""
        plan = ExpressionPlan(speech_text="hi", motions=("<nod>",), speed=1.5)
        data = json.loads(serialize_plan(plan))
        assert data == {
            "speech_text": "hi",
            "speed": 1.5,
            "emotion": "",
            "expressions": [],
            "motions": ["<nod>"],
        }

    def test_missing_file(self, temp_dir):
        """Test missing plan files raise MissingInput"""
        with pytest.raises(MissingInput):
            load_plan(temp_dir / "absent.json")


class TestCatalog:
    """Test catalog parsing"""

    def test_load_fixture_catalog(self, greeting_catalog):
        """Test durations, channels and conflicts load"""
        assert greeting_catalog.duration("<hello>") == 1.2
        assert greeting_catalog.channel("<bless>") == Channel.EXPRESSION
        assert greeting_catalog.in_conflict("<handshake>", "<wave>")
        assert greeting_catalog.in_conflict("<wave>", "<handshake>")
        assert not greeting_catalog.in_conflict("<hello>", "<nod>")

    def test_self_conflict(self):
        """Test a pair naming one action twice is invalid"""
        doc = {
            "actions": {"<nod>": {"duration_s": 0.8, "channel": "motion"}},
            "conflicts": [["<nod>", "<nod>"]],
        }
        with pytest.raises(CatalogInvalid):
            parse_catalog(json.dumps(doc))

    def test_conflict_with_unknown_action(self):
        """Test conflict pairs may only reference catalogued actions"""
        doc = {
            "actions": {"<nod>": {"duration_s": 0.8, "channel": "motion"}},
            "conflicts": [["<nod>", "<wave>"]],
        }
        with pytest.raises(CatalogInvalid) as exc_info:
            parse_catalog(json.dumps(doc))
        assert "<wave>" in exc_info.value.message

    def test_non_positive_duration(self):
        """Test zero durations are invalid"""
        doc = {"actions": {"<nod>": {"duration_s": 0, "channel": "motion"}}}
        with pytest.raises(CatalogInvalid):
            parse_catalog(json.dumps(doc))

    def test_bad_action_key(self):
        """Test catalog keys must be bracketed identifiers"""
        doc = {"actions": {"nod": {"duration_s": 0.8, "channel": "motion"}}}
        with pytest.raises(CatalogInvalid):
            parse_catalog(json.dumps(doc))

    def test_malformed_catalog(self):
        """Test broken JSON raises ParseError"""
        with pytest.raises(ParseError):
            parse_catalog("{not json")

    def test_missing_catalog_file(self, temp_dir):
        """Test missing catalog files raise MissingInput"""
        with pytest.raises(MissingInput):
            load_catalog(temp_dir / "catalog.json")


class TestValidatePlan:
    """Test plan/catalog cross-checks"""

    def test_fixture_is_executable(self, greeting_plan, greeting_catalog):
        """Test the fixture plan validates cleanly"""
        report = validate_plan(greeting_plan, greeting_catalog)
        assert report.ok
        assert report.issues == []

    def test_unknown_action(self, sample_catalog):
        """Test uncatalogued actions are reported"""
        plan = ExpressionPlan(speech_text="hi", motions=("<dance>",))
        report = validate_plan(plan, sample_catalog)
        assert not report.ok
        assert report.issues == ["<dance>: unknown action"]

    def test_channel_mismatch(self, sample_catalog):
        """Test expressions placed among motions are reported"""
        plan = ExpressionPlan(speech_text="hi", motions=("<smile>",))
        report = validate_plan(plan, sample_catalog)
        assert len(report.issues) == 1
        assert "channel mismatch" in report.issues[0]
        assert report.issues[0].startswith("<smile>")

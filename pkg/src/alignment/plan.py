"""Expression plans: tokenization, parsing and catalog validation"""

import itertools
import json
import logging
import re
import unicodedata
from pathlib import Path
from typing import Any, List, Union

from pydantic import ValidationError

from src.errors import CatalogInvalid, EmptySpeech, ParseError, PlanInvalid
from src.models import (
    ActionCatalog,
    ExpressionPlan,
    SpeedLevel,
    ValidationReport,
    WordToken,
)
from src.utils.io import read_text

logger = logging.getLogger(__name__)


def _combining_marks() -> str:
    """Character-class ranges covering every Unicode combining mark"""
    ranges: List[List[int]] = []
    for cp in itertools.chain(range(0x0300, 0x20000), range(0xE0100, 0xE01F0)):
        if unicodedata.category(chr(cp))[0] != "M":
            continue
        if ranges and ranges[-1][1] == cp - 1:
            ranges[-1][1] = cp
        else:
            ranges.append([cp, cp])
    return "".join(f"\\U{first:08x}-\\U{last:08x}" for first, last in ranges)


# Letters/digits followed by letters, digits or combining marks, optionally
# joined by intra-word apostrophes or hyphens
_PART = rf"[^\W_](?:[^\W_]|[{_combining_marks()}])*"
_WORD = re.compile(rf"{_PART}(?:['’\-]{_PART})*")
_SENTENCE_END = set(".!?…")
_CLAUSE_END = set(",;:")


def tokenize(text: str) -> List[WordToken]:
    """
    Split speech text into word tokens

    Tokens break on whitespace and punctuation; intra-word apostrophes and
    hyphens stay inside the token. A token is sentence-final when the
    punctuation between it and the next token contains `.`, `!` or `?`.

    Args:
        text: Speech text

    Returns:
        Tokens in order, indexed from 0

    Raises:
        EmptySpeech: if the text holds no word characters
    """
    matches = list(_WORD.finditer(text or ""))
    if not matches:
        raise EmptySpeech(f"no words in speech text {text!r}")

    tokens = []
    for index, match in enumerate(matches):
        gap_end = matches[index + 1].start() if index + 1 < len(matches) else len(text)
        gap = set(text[match.end():gap_end])
        sentence_final = bool(gap & _SENTENCE_END)
        tokens.append(WordToken(
            surface=match.group(),
            normalized=match.group().lower(),
            index=index,
            sentence_final=sentence_final,
            clause_final=not sentence_final and bool(gap & _CLAUSE_END),
        ))
    return tokens


def _error_field(error: dict) -> str:
    """Render a pydantic error location as field[index]"""
    loc = error.get("loc", ())
    if not loc:
        return "document"
    name = "emotion" if loc[0] == "emotion_label" else str(loc[0])
    return name + "".join(f"[{part}]" for part in loc[1:] if isinstance(part, int))


def _load_json(document: Union[str, bytes]) -> Any:
    text = document.decode("utf-8") if isinstance(document, bytes) else document
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise ParseError(e.msg, offset) from e


def parse_plan(document: Union[str, bytes]) -> ExpressionPlan:
    """
    Parse a plan document

    Raises:
        ParseError: malformed JSON, or a top-level value that is not an object
        PlanInvalid: a field violates a plan invariant
    """
    data = _load_json(document)
    if not isinstance(data, dict):
        raise ParseError("plan document must be a JSON object", 0)

    if "speech_text" not in data:
        raise PlanInvalid("speech_text", "missing")

    try:
        plan = ExpressionPlan.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise PlanInvalid(_error_field(first), first.get("msg", "invalid value")) from e

    logger.debug("parsed plan: %d expressions, %d motions", len(plan.expressions), len(plan.motions))
    return plan


def serialize_plan(plan: ExpressionPlan) -> str:
    """Render a plan in the plan file format"""
    speed = plan.speed.value if isinstance(plan.speed, SpeedLevel) else plan.speed
    return json.dumps({
        "speech_text": plan.speech_text,
        "speed": speed,
        "emotion": plan.emotion_label,
        "expressions": list(plan.expressions),
        "motions": list(plan.motions),
    }, indent=2, ensure_ascii=False)


def load_plan(path: Union[str, Path]) -> ExpressionPlan:
    return parse_plan(read_text(path))


def parse_catalog(document: Union[str, bytes]) -> ActionCatalog:
    """
    Parse a catalog document

    The document holds `actions` (id -> {duration_s, channel}) and
    `conflicts` (list of id pairs).
    """
    data = _load_json(document)
    if not isinstance(data, dict) or not isinstance(data.get("actions"), dict):
        raise ParseError("catalog document must be an object with an 'actions' map", 0)

    try:
        return ActionCatalog(
            entries=data["actions"],
            conflicts=data.get("conflicts") or [],
        )
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise CatalogInvalid(f"{where or 'catalog'}: {first.get('msg', 'invalid value')}") from e


def load_catalog(path: Union[str, Path]) -> ActionCatalog:
    return parse_catalog(read_text(path))


def validate_plan(plan: ExpressionPlan, catalog: ActionCatalog) -> ValidationReport:
    """
    Check that every plan action exists in the catalog on its declared channel

    Returns:
        Report with one issue per offending plan action; empty when executable
    """
    issues = []
    for action in plan.actions:
        if action.action_id not in catalog:
            issues.append(f"{action.action_id}: unknown action")
            continue
        expected = catalog.channel(action.action_id)
        if expected != action.channel:
            issues.append(
                f"{action.action_id}: channel mismatch "
                f"(catalog says {expected.value}, plan places it in {action.channel.value}s)"
            )
    return ValidationReport(issues=issues)

"""Per-word speech timing estimates"""

import json
import logging
from pathlib import Path
from typing import Optional, Sequence, Union

from pydantic import ValidationError

from src.errors import EmptySpeech, FormatError, ParseError
from src.models import (
    DurationLexicon,
    PauseConfig,
    SpeedConfig,
    SpeedLevel,
    WordInterval,
    WordTimeline,
    WordToken,
)
from src.utils.io import read_text

logger = logging.getLogger(__name__)


def word_duration(word: WordToken, lexicon: DurationLexicon) -> float:
    """Baseline duration of a word: lexicon override, else clamped char rate"""
    override = lexicon.overrides.get(word.normalized)
    if override is not None:
        return override
    estimate = lexicon.rate_s_per_char * len(word.normalized)
    return min(max(estimate, lexicon.min_s), lexicon.max_s)


def speed_factor(
    speed: Union[SpeedLevel, str, float],
    speed_config: Optional[SpeedConfig] = None,
) -> float:
    return (speed_config or SpeedConfig()).factor(speed)


def build_timeline(
    words: Sequence[WordToken],
    lexicon: Optional[DurationLexicon] = None,
    speed: Union[SpeedLevel, str, float] = SpeedLevel.NORMAL,
    *,
    speed_config: Optional[SpeedConfig] = None,
    pauses: Optional[PauseConfig] = None,
) -> WordTimeline:
    """
    Lay the words end to end

    Each word starts where the previous one ended and lasts its baseline
    duration times the speed factor. With pauses enabled, a fixed gap is
    inserted after clause-final and sentence-final words (never after the
    last word).

    Args:
        words: Tokens in speech order
        lexicon: Baseline duration rule (defaults when omitted)
        speed: Named level or direct multiplier
        speed_config: Level -> factor map
        pauses: Optional punctuation pause model

    Returns:
        Word timeline
    """
    if not words:
        raise EmptySpeech("cannot build a timeline without words")

    lexicon = lexicon or DurationLexicon()
    pauses = pauses or PauseConfig()
    alpha = speed_factor(speed, speed_config)

    intervals = []
    t = 0.0
    for position, word in enumerate(words):
        start = t
        end = start + word_duration(word, lexicon) * alpha
        intervals.append(WordInterval(index=word.index, word=word.normalized, t_start=start, t_end=end))
        t = end
        if pauses.enabled and position + 1 < len(words):
            if word.sentence_final:
                t += pauses.sentence_pause_s
            elif word.clause_final:
                t += pauses.comma_pause_s

    logger.debug("timeline: %d words, alpha=%s, speech_end=%.3f", len(intervals), alpha, intervals[-1].t_end)
    return WordTimeline(words=tuple(intervals), speech_end=intervals[-1].t_end, speed_factor=alpha)


def load_lexicon(path: Union[str, Path]) -> DurationLexicon:
    """
    Load a lexicon file

    The file is a JSON map word -> seconds with an optional `default_rule`
    object holding `rate_s_per_char`, `min_s` and `max_s`.
    """
    text = read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, len(text[:e.pos].encode("utf-8"))) from e
    if not isinstance(data, dict):
        raise FormatError("lexicon must be a JSON object")

    rule = data.pop("default_rule", None) or {}
    if not isinstance(rule, dict):
        raise FormatError("default_rule must be an object")

    try:
        return DurationLexicon(overrides=data, **rule)
    except (ValidationError, TypeError) as e:
        raise FormatError(f"invalid lexicon: {e}") from e

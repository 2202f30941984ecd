"""Builders for hand-made alignment inputs"""

import numpy as np

from src.models import ExpressionPlan, RelevanceMatrix, WordInterval, WordTimeline


def make_timeline(starts, speech_end):
    """Contiguous timeline whose words begin at the given times"""
    ends = list(starts[1:]) + [speech_end]
    words = tuple(
        WordInterval(index=i, word=f"w{i}", t_start=s, t_end=e)
        for i, (s, e) in enumerate(zip(starts, ends))
    )
    return WordTimeline(words=words, speech_end=speech_end)


def make_matrix(values, theta=0.7):
    return RelevanceMatrix.from_values(np.array(values, dtype=float), theta)


def make_plan(expressions=(), motions=()):
    words = "w " * 3
    return ExpressionPlan(speech_text=words.strip(), expressions=expressions, motions=motions)

"""Seeded random alignment instances and their JSON fixture form"""

from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.models import (
    ActionCatalog,
    AlignConfig,
    Channel,
    ChannelMode,
    ExpressionPlan,
    RelevanceMatrix,
    WordInterval,
    WordTimeline,
)
from src.utils.config import Config


class InstanceLimits(BaseModel):
    """Size bounds for generated instances"""
    model_config = ConfigDict(frozen=True)

    max_actions: int = 4
    max_words: int = 10
    max_horizon_s: float = 5.0
    tick: float = Config.TICK_S


class AlignmentInstance(BaseModel):
    """Everything a solver needs, already resolved"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    plan: ExpressionPlan
    timeline: WordTimeline
    matrix: RelevanceMatrix
    catalog: ActionCatalog
    config: AlignConfig


def random_instance(rng: np.random.Generator, limits: InstanceLimits = InstanceLimits()) -> AlignmentInstance:
    """
    Draw a small instance

    Word durations, action durations and relevance values are rounded so the
    instance survives a JSON round trip unchanged. Conflict pairs and the
    channel mode are random too.
    """
    n_words = int(rng.integers(1, limits.max_words + 1))
    tail_margin = float(rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]))
    speech_room = limits.max_horizon_s - tail_margin
    word_max = min(0.4, speech_room / n_words)
    durations = np.round(rng.uniform(0.05, word_max, size=n_words), 2)
    durations = np.maximum(durations, 0.01)

    words = []
    t = 0.0
    for i, d in enumerate(durations):
        end = round(t + float(d), 9)
        words.append(WordInterval(index=i, word=f"w{i}", t_start=t, t_end=end))
        t = end
    timeline = WordTimeline(words=tuple(words), speech_end=t)

    n_actions = int(rng.integers(0, limits.max_actions + 1))
    channels = [Channel.EXPRESSION if rng.random() < 0.5 else Channel.MOTION for _ in range(n_actions)]
    ids = [f"<act_{j}>" for j in range(n_actions)]
    expressions = [a for a, c in zip(ids, channels) if c == Channel.EXPRESSION]
    motions = [a for a, c in zip(ids, channels) if c == Channel.MOTION]
    plan = ExpressionPlan(
        speech_text=" ".join(w.word for w in words),
        expressions=tuple(expressions),
        motions=tuple(motions),
    )

    entries = {
        a: {"duration_s": round(float(rng.uniform(0.1, 1.6)), 2), "channel": c}
        for a, c in zip(ids, channels)
    }
    conflicts = [
        (ids[a], ids[b])
        for a in range(n_actions)
        for b in range(a + 1, n_actions)
        if rng.random() < 0.3
    ]
    catalog = ActionCatalog(entries=entries, conflicts=conflicts)

    theta = float(rng.choice([0.0, 0.3, 0.7]))
    values = np.round(rng.uniform(-0.2, 1.0, size=(n_words, n_actions)), 3)
    matrix = RelevanceMatrix.from_values(values, theta)

    config = AlignConfig(
        delta=float(rng.choice([0.1, 0.2, 0.3, 0.5])),
        tick=limits.tick,
        tail_margin=tail_margin,
        channel_mode=ChannelMode.MERGED if rng.random() < 0.5 else ChannelMode.PER_CHANNEL,
        modal_sync=bool(rng.random() < 0.9),
        context_map=bool(rng.random() < 0.9),
    )
    return AlignmentInstance(plan=plan, timeline=timeline, matrix=matrix, catalog=catalog, config=config)


def instance_to_dict(instance: AlignmentInstance) -> Dict[str, Any]:
    return {
        "plan": instance.plan.model_dump(mode="json", by_alias=True),
        "timeline": instance.timeline.model_dump(mode="json"),
        "matrix": {
            "values": instance.matrix.values.tolist(),
            "theta": instance.matrix.theta,
        },
        "catalog": {
            "actions": {
                a: entry.model_dump(mode="json") for a, entry in instance.catalog.entries.items()
            },
            "conflicts": [list(pair) for pair in sorted(instance.catalog.conflicts)],
        },
        "config": instance.config.model_dump(mode="json"),
    }


def instance_from_dict(data: Dict[str, Any]) -> AlignmentInstance:
    plan = ExpressionPlan.model_validate(data["plan"])
    values = np.array(data["matrix"]["values"], dtype=float).reshape(
        len(data["timeline"]["words"]), len(plan.actions)
    )
    return AlignmentInstance(
        plan=plan,
        timeline=WordTimeline.model_validate(data["timeline"]),
        matrix=RelevanceMatrix.from_values(values, data["matrix"]["theta"]),
        catalog=ActionCatalog(
            entries=data["catalog"]["actions"],
            conflicts=data["catalog"]["conflicts"],
        ),
        config=AlignConfig.model_validate(data["config"]),
    )

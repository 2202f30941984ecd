"""Data models for co-speech alignment"""

from enum import Enum
from typing import Annotated, Any, ClassVar, Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    StringConstraints,
    field_validator,
    model_validator,
)

from src.utils.config import Config

ACTION_ID_REGEX = r"^<[a-z0-9_]+>$"

ActionId = Annotated[str, StringConstraints(pattern=ACTION_ID_REGEX)]
PositiveSeconds = Annotated[float, Field(gt=0, allow_inf_nan=False)]
NonNegativeSeconds = Annotated[float, Field(ge=0, allow_inf_nan=False)]


class Channel(str, Enum):
    """Actuation lanes an action can run on"""
    EXPRESSION = "expression"
    MOTION = "motion"


class SpeedLevel(str, Enum):
    """Named speech rates"""
    SLOW = "slow"
    NORMAL = "normal"
    FAST = "fast"


class ChannelMode(str, Enum):
    """How the ordering constraint groups plan actions"""
    PER_CHANNEL = "per-channel"
    MERGED = "merged"


class EventKind(str, Enum):
    """Playback event types"""
    WORD_START = "WORD_START"
    WORD_END = "WORD_END"
    ACTION_START = "ACTION_START"
    ACTION_END = "ACTION_END"


class OutputFormat(str, Enum):
    JSON = "json"
    GANTT = "gantt"
    BOTH = "both"


# =============================================================================
# PLANS AND CATALOGS
# =============================================================================

class PlanAction(BaseModel):
    """One action of a plan, in plan order"""
    model_config = ConfigDict(frozen=True)

    action_id: str
    channel: Channel


class ExpressionPlan(BaseModel):
    """Speech text plus the expression and motion sequences to perform with it"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    speech_text: str
    expressions: Tuple[ActionId, ...] = ()
    motions: Tuple[ActionId, ...] = ()
    speed: Union[SpeedLevel, PositiveSeconds] = SpeedLevel.NORMAL
    emotion_label: str = Field(default="", alias="emotion")

    @field_validator("speech_text")
    @classmethod
    def _speech_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("speech text is empty")
        return value

    @property
    def actions(self) -> List[PlanAction]:
        """Plan actions in plan order: expressions first, then motions"""
        return [
            PlanAction(action_id=a, channel=Channel.EXPRESSION) for a in self.expressions
        ] + [
            PlanAction(action_id=a, channel=Channel.MOTION) for a in self.motions
        ]

    @property
    def action_ids(self) -> List[str]:
        return [a.action_id for a in self.actions]


class WordToken(BaseModel):
    """A word of the speech text"""
    model_config = ConfigDict(frozen=True)

    surface: str
    normalized: str = Field(min_length=1)
    index: int = Field(ge=0)
    sentence_final: bool = False
    clause_final: bool = False


class CatalogEntry(BaseModel):
    """Duration and lane of an executable action"""
    model_config = ConfigDict(frozen=True)

    duration_s: PositiveSeconds
    channel: Channel


class ActionCatalog(BaseModel):
    """Executable actions and the pairs that may not run close together"""
    model_config = ConfigDict(frozen=True)

    entries: Dict[ActionId, CatalogEntry]
    conflicts: FrozenSet[Tuple[str, str]] = frozenset()

    @field_validator("conflicts", mode="before")
    @classmethod
    def _normalize_pairs(cls, value: Any) -> Any:
        if value is None:
            return frozenset()
        pairs = []
        for pair in value:
            pair = tuple(pair)
            if len(pair) != 2:
                raise ValueError(f"conflict entry {list(pair)} is not a pair")
            pairs.append(tuple(sorted(pair)))
        return frozenset(pairs)

    @model_validator(mode="after")
    def _check_conflicts(self) -> "ActionCatalog":
        for a, b in sorted(self.conflicts):
            if a == b:
                raise ValueError(f"conflict pair ({a}, {b}) is a self-pair")
            for action_id in (a, b):
                if action_id not in self.entries:
                    raise ValueError(f"conflict pair ({a}, {b}) references unknown action {action_id}")
        return self

    def __contains__(self, action_id: str) -> bool:
        return action_id in self.entries

    def duration(self, action_id: str) -> float:
        return self.entries[action_id].duration_s

    def channel(self, action_id: str) -> Channel:
        return self.entries[action_id].channel

    def in_conflict(self, a: str, b: str) -> bool:
        return tuple(sorted((a, b))) in self.conflicts


class ValidationReport(BaseModel):
    """Plan issues found against a catalog; empty means executable"""
    issues: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.issues


# =============================================================================
# TIMELINE
# =============================================================================

class DurationLexicon(BaseModel):
    """Baseline word durations: explicit overrides, else a clamped per-character rate"""
    model_config = ConfigDict(frozen=True)

    overrides: Dict[str, PositiveSeconds] = {}
    rate_s_per_char: PositiveSeconds = Config.RATE_S_PER_CHAR
    min_s: PositiveSeconds = Config.MIN_WORD_S
    max_s: PositiveSeconds = Config.MAX_WORD_S

    @field_validator("overrides")
    @classmethod
    def _fold_keys(cls, value: Dict[str, float]) -> Dict[str, float]:
        return {k.lower(): v for k, v in value.items()}

    @model_validator(mode="after")
    def _check_clamp(self) -> "DurationLexicon":
        if self.min_s > self.max_s:
            raise ValueError(f"min_s ({self.min_s}) exceeds max_s ({self.max_s})")
        return self


class SpeedConfig(BaseModel):
    """Speech-rate adjustment factors"""
    model_config = ConfigDict(frozen=True)

    level_factors: Dict[SpeedLevel, PositiveSeconds] = Field(
        default_factory=lambda: {SpeedLevel(k): v for k, v in Config.SPEED_FACTORS.items()}
    )

    def factor(self, speed: Union[SpeedLevel, str, float]) -> float:
        """Resolve a named level or a direct multiplier"""
        if isinstance(speed, (int, float)) and not isinstance(speed, bool):
            if not speed > 0:
                raise ValueError(f"speed multiplier must be positive, got {speed}")
            return float(speed)
        return self.level_factors[SpeedLevel(speed)]


class PauseConfig(BaseModel):
    """Optional silent gaps after punctuation (wall-clock, not rate-scaled)"""
    model_config = ConfigDict(frozen=True)

    enabled: bool = False
    comma_pause_s: NonNegativeSeconds = Config.COMMA_PAUSE_S
    sentence_pause_s: NonNegativeSeconds = Config.SENTENCE_PAUSE_S


class WordInterval(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    word: str
    t_start: float
    t_end: float


class WordTimeline(BaseModel):
    """Estimated start and end time of every spoken word"""
    model_config = ConfigDict(frozen=True)

    words: Tuple[WordInterval, ...]
    speech_end: float
    speed_factor: float = 1.0

    @model_validator(mode="after")
    def _check_order(self) -> "WordTimeline":
        if not self.words:
            raise ValueError("timeline has no words")
        if self.words[0].t_start != 0.0:
            raise ValueError("first word must start at 0")
        previous_end = 0.0
        for interval in self.words:
            if interval.t_end <= interval.t_start:
                raise ValueError(f"word {interval.index} has non-positive duration")
            if interval.t_start < previous_end - 1e-12:
                raise ValueError(f"word {interval.index} overlaps its predecessor")
            previous_end = interval.t_end
        if abs(self.speech_end - previous_end) > 1e-9:
            raise ValueError("speech_end must equal the last word end")
        return self

    @property
    def starts(self) -> np.ndarray:
        return np.array([w.t_start for w in self.words], dtype=float)

    @property
    def ends(self) -> np.ndarray:
        return np.array([w.t_end for w in self.words], dtype=float)


# =============================================================================
# RELEVANCE
# =============================================================================

class RelevanceMatrix(BaseModel):
    """Word x plan-action cosine relevance with the retained (>= theta) mask"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    mask: np.ndarray
    theta: float

    @model_validator(mode="after")
    def _check_shapes(self) -> "RelevanceMatrix":
        if self.values.ndim != 2 or self.values.shape != self.mask.shape:
            raise ValueError(
                f"values {self.values.shape} and mask {self.mask.shape} must be equal 2-d shapes"
            )
        self.values.setflags(write=False)
        self.mask.setflags(write=False)
        return self

    @classmethod
    def from_values(cls, values: np.ndarray, theta: float) -> "RelevanceMatrix":
        values = np.array(values, dtype=float)
        return cls(values=values, mask=values >= theta, theta=theta)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def scaled(self, factor: float) -> "RelevanceMatrix":
        """Multiply every retained value by factor, keeping the mask"""
        values = np.where(self.mask, self.values * factor, self.values)
        return RelevanceMatrix(values=values, mask=self.mask.copy(), theta=self.theta)

    def retained_pairs(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.mask))]


# =============================================================================
# SCHEDULING
# =============================================================================

class AlignConfig(BaseModel):
    """Solver parameters and ablation toggles"""
    model_config = ConfigDict(frozen=True)

    delta: PositiveSeconds = Config.DELTA_S
    tick: PositiveSeconds = Config.TICK_S
    tail_margin: NonNegativeSeconds = Config.TAIL_MARGIN_S
    channel_mode: ChannelMode = ChannelMode.PER_CHANNEL
    modal_sync: bool = True
    context_map: bool = True
    temporal_plan: bool = True

    @model_validator(mode="after")
    def _tick_within_delta(self) -> "AlignConfig":
        if self.tick > self.delta:
            raise ValueError(f"tick ({self.tick}) must not exceed delta ({self.delta})")
        return self


class ScheduledAction(BaseModel):
    model_config = ConfigDict(frozen=True)

    action_id: str
    channel: Channel
    start_s: float
    duration_s: float
    matched_word_index: Optional[int] = None
    matched_word: Optional[str] = None
    term_score: float = 0.0

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


class Schedule(BaseModel):
    """Start time of every plan action and the alignment objective it reaches"""
    model_config = ConfigDict(frozen=True)

    actions: Tuple[ScheduledAction, ...] = ()
    objective: float = 0.0
    horizon: float
    tick: float
    metadata: Dict[str, Any] = {}

    @property
    def start_vector(self) -> Tuple[float, ...]:
        return tuple(a.start_s for a in self.actions)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "objective": self.objective,
            "horizon": self.horizon,
            "actions": [
                {
                    "id": a.action_id,
                    "channel": a.channel.value,
                    "start_s": a.start_s,
                    "duration_s": a.duration_s,
                    "matched_word": a.matched_word,
                    "matched_word_index": a.matched_word_index,
                    "term_score": a.term_score,
                }
                for a in self.actions
            ],
            "metadata": self.metadata,
        }


class AlignmentCheck(BaseModel):
    """How far an action starts from the word it was matched to"""
    model_config = ConfigDict(frozen=True)

    action_id: str
    matched_word: Optional[str] = None
    offset_s: Optional[float] = None
    aligned: bool = False


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str  # ordering, conflict, horizon, grid, unknown
    action_ids: Tuple[str, ...]
    message: str


class ConstraintReport(BaseModel):
    violations: List[Violation] = []

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def messages(self) -> List[str]:
        return [v.message for v in self.violations]


# =============================================================================
# PLAYBACK
# =============================================================================

class Event(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_s: float
    kind: EventKind
    id: str
    channel: str  # speech, expression or motion


class EventLog(BaseModel):
    """Time-ordered speech and action events of one simulated utterance"""
    model_config = ConfigDict(frozen=True)

    events: Tuple[Event, ...] = ()
    total_duration: float = 0.0


# =============================================================================
# DISTILLATION TOOLS
# =============================================================================

class QuantSpec(BaseModel):
    """Symmetric INT4 step; codes live in [-8, 7]"""
    model_config = ConfigDict(frozen=True)

    QMIN: ClassVar[int] = -8
    QMAX: ClassVar[int] = 7

    delta: PositiveSeconds


class DedupResult(BaseModel):
    retained: List[int]
    duplicates: List[int]
    fingerprints: List[int]
    duplication_rate: float


# =============================================================================
# CLI
# =============================================================================

class RunConfig(BaseModel):
    """Resolved flags of one CLI invocation"""
    model_config = ConfigDict(frozen=True)

    subcommand: str
    plan_path: Optional[str] = None
    catalog_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    lexicon_path: Optional[str] = None
    theta: float = Field(default=Config.THETA, ge=0, le=1)
    delta: PositiveSeconds = Config.DELTA_S
    tick: PositiveSeconds = Config.TICK_S
    tail_margin: NonNegativeSeconds = Config.TAIL_MARGIN_S
    speed: Optional[Union[SpeedLevel, PositiveSeconds]] = None
    channel_mode: ChannelMode = ChannelMode.PER_CHANNEL
    modal_sync: bool = True
    context_map: bool = True
    temporal_plan: bool = True
    pauses: bool = False
    out_path: Optional[str] = None
    output_format: OutputFormat = OutputFormat.JSON
    gantt_path: Optional[str] = None
    events_path: Optional[str] = None
    width: int = Field(default=Config.GANTT_WIDTH, ge=20)
    cols_per_second: Optional[PositiveSeconds] = None

    def align_config(self) -> AlignConfig:
        return AlignConfig(
            delta=self.delta,
            tick=self.tick,
            tail_margin=self.tail_margin,
            channel_mode=self.channel_mode,
            modal_sync=self.modal_sync,
            context_map=self.context_map,
            temporal_plan=self.temporal_plan,
        )

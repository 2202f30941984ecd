"""Simulated execution of a schedule alongside the speech it accompanies"""

import logging
from collections import defaultdict, deque
from typing import Any, Dict, List, Optional

from src.alignment.scheduler import check_constraints
from src.errors import ConfigInvalid, ConstraintViolation
from src.models import (
    ActionCatalog,
    AlignConfig,
    Event,
    EventKind,
    EventLog,
    Schedule,
    WordTimeline,
)
from src.utils.config import Config

logger = logging.getLogger(__name__)

LANES = ("speech", "expression", "motion")

_KIND_RANK = {
    EventKind.WORD_END: 0,
    EventKind.ACTION_END: 1,
    EventKind.WORD_START: 2,
    EventKind.ACTION_START: 3,
}
_LABEL_WIDTH = 12


def simulate(
    schedule: Schedule,
    timeline: WordTimeline,
    catalog: ActionCatalog,
    config: Optional[AlignConfig] = None,
) -> EventLog:
    """
    Merge word timing and scheduled actions into one event stream

    Ties in time resolve ends before starts, then speech before expression
    before motion, then source order.

    Raises:
        ConstraintViolation: the schedule fails the constraint re-check
    """
    config = config or AlignConfig()
    report = check_constraints(schedule, catalog, config, timeline)
    if not report.ok:
        raise ConstraintViolation(report.messages)

    keyed = []
    for seq, word in enumerate(timeline.words):
        keyed.append((word.t_start, EventKind.WORD_START, "speech", seq, word.word))
        keyed.append((word.t_end, EventKind.WORD_END, "speech", seq, word.word))
    for seq, action in enumerate(schedule.actions):
        lane = action.channel.value
        keyed.append((action.start_s, EventKind.ACTION_START, lane, seq, action.action_id))
        keyed.append((action.end_s, EventKind.ACTION_END, lane, seq, action.action_id))

    keyed.sort(key=lambda e: (e[0], _KIND_RANK[e[1]], LANES.index(e[2]), e[3]))
    events = tuple(Event(t_s=t, kind=kind, id=name, channel=lane) for t, kind, lane, _, name in keyed)

    total = max([timeline.speech_end] + [a.end_s for a in schedule.actions])
    logger.debug("simulated %d events over %.3fs", len(events), total)
    return EventLog(events=events, total_duration=total)


def events_to_json(log: EventLog) -> List[Dict[str, Any]]:
    return [
        {"t_s": e.t_s, "kind": e.kind.value, "id": e.id, "channel": e.channel}
        for e in log.events
    ]


def _ruler(chart_cols: int, cols_per_second: float, total: float) -> str:
    cells = [" "] * chart_cols
    second = 0
    while second <= total:
        col = int(second * cols_per_second)
        label = str(second)
        if col + len(label) > chart_cols:
            break
        cells[col:col + len(label)] = label
        second += 1
    return "".join(cells)


def render_gantt(
    log: EventLog,
    width: int = Config.GANTT_WIDTH,
    cols_per_second: Optional[float] = None,
) -> str:
    """
    Draw the log as three text lanes

    Each word or action becomes a bar `|name====` starting at
    int(start * cols_per_second) and spanning int(duration * cols_per_second)
    columns (at least one). Bars past the right edge are clipped.

    Args:
        log: Simulated events
        width: Total line width including the lane labels (>= 20)
        cols_per_second: Horizontal scale; fits the whole log when omitted
    """
    if width < 20:
        raise ConfigInvalid(f"gantt width must be at least 20 columns, got {width}")
    chart_cols = width - _LABEL_WIDTH
    if cols_per_second is None:
        cols_per_second = chart_cols / log.total_duration if log.total_duration > 0 else 1.0
    elif cols_per_second <= 0:
        raise ConfigInvalid(f"cols_per_second must be positive, got {cols_per_second}")

    rows = {lane: [" "] * chart_cols for lane in LANES}
    open_spans: Dict[tuple, deque] = defaultdict(deque)
    for event in log.events:
        key = (event.channel, event.id)
        if event.kind in (EventKind.WORD_START, EventKind.ACTION_START):
            open_spans[key].append(event.t_s)
            continue
        start = open_spans[key].popleft()
        first = int(start * cols_per_second)
        span = max(1, int((event.t_s - start) * cols_per_second))
        bar = ("|" + event.id).ljust(span, "=")[:span]
        row = rows[event.channel]
        for offset, char in enumerate(bar):
            if 0 <= first + offset < chart_cols:
                row[first + offset] = char

    lines = ["time".ljust(_LABEL_WIDTH - 1) + "|" + _ruler(chart_cols, cols_per_second, log.total_duration)]
    for lane in LANES:
        lines.append(lane.ljust(_LABEL_WIDTH - 1) + "|" + "".join(rows[lane]).rstrip())
    return "\n".join(line.rstrip() for line in lines) + "\n"

"""Start-time optimization for plan actions

Every action gets a start time on a fixed grid. The objective rewards an
action when it starts within delta of the start of a word it is relevant
to; chained actions may not overlap, conflicting actions must start more
than the longer of their durations apart, and everything has to finish
before the horizon (speech end plus a tail margin).

The optimal solver runs max-sum variable elimination over the actions'
start ticks: one score factor per action and one feasibility factor per
chain link or conflict pair. Actions are then fixed in plan order at the
smallest tick whose max-marginal still reaches the optimum, which gives
the lexicographic tie-break. Scores are compared as exact integers so the
solver, the greedy fallback and the brute-force oracle agree bit for bit.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.alignment.plan import validate_plan
from src.errors import DimError, Infeasible, PlanNotExecutable, TooLarge
from src.models import (
    ActionCatalog,
    AlignConfig,
    AlignmentCheck,
    Channel,
    ChannelMode,
    ConstraintReport,
    ExpressionPlan,
    RelevanceMatrix,
    Schedule,
    ScheduledAction,
    Violation,
    WordTimeline,
)
from src.utils.config import Config

logger = logging.getLogger(__name__)

_EPS = 1e-9


# =============================================================================
# GRID ARITHMETIC
# =============================================================================

def grid_time(k: int, tick: float) -> float:
    """Seconds of grid point k"""
    return round(k * tick, 9)


def chain_gap_ticks(duration: float, tick: float) -> int:
    """Fewest ticks between the starts of an action and its chain successor"""
    return max(0, math.ceil(duration / tick - _EPS))


def conflict_gap_ticks(d_a: float, d_b: float, tick: float) -> int:
    """Fewest ticks between the starts of two conflicting actions (strictly more than max duration)"""
    return math.floor(max(d_a, d_b) / tick + _EPS) + 1


def last_start_tick(horizon: float, duration: float, tick: float) -> int:
    """Latest grid point at which an action still ends by the horizon; negative if none"""
    return math.floor((horizon - duration) / tick + _EPS)


# =============================================================================
# SCORING
# =============================================================================

def score_grid(
    j: int,
    times: np.ndarray,
    matrix: RelevanceMatrix,
    timeline: WordTimeline,
    config: AlignConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Objective term of action j at each of the given start times

    Args:
        j: Plan-action column
        times: Candidate start times in seconds
        matrix: Word/action relevance
        timeline: Word start times
        config: Window width and ablation toggles

    Returns:
        (scores, matched word positions); the position is -1 where the score is 0
    """
    times = np.asarray(times, dtype=float)
    retained = matrix.mask[:, j]
    n_times = times.shape[0]
    if not retained.any():
        return np.zeros(n_times), np.full(n_times, -1, dtype=int)

    weights = matrix.values[:, j] if config.context_map else np.ones(retained.shape[0])
    weights = np.where(retained, weights, 0.0)

    if config.modal_sync:
        in_window = np.abs(times[:, None] - timeline.starts[None, :]) < config.delta
    else:
        in_window = np.ones((n_times, retained.shape[0]), dtype=bool)

    contributions = np.where(in_window & retained[None, :], weights[None, :], 0.0)
    scores = np.maximum(contributions.max(axis=1), 0.0)
    matched = contributions.argmax(axis=1)
    matched[scores <= 0] = -1
    return scores, matched


def action_score(
    j: int,
    t: float,
    matrix: RelevanceMatrix,
    timeline: WordTimeline,
    config: AlignConfig,
) -> float:
    """max_i S(w_i, a_j) * [|t - t^s_i| < delta] over retained pairs; 0 when none applies"""
    scores, _ = score_grid(j, np.array([t]), matrix, timeline, config)
    return float(scores[0])


# =============================================================================
# DISCRETIZED PROBLEM
# =============================================================================

class PairRule:
    """Constraint between an earlier action a and a later action b, in ticks"""

    def __init__(self, chain_gap: Optional[int] = None, conflict_gap: Optional[int] = None):
        self.chain_gap = chain_gap
        self.conflict_gap = conflict_gap

    def allowed(self, k_a, k_b):
        """Elementwise check, broadcasting over numpy arrays"""
        ok = np.ones(np.broadcast(k_a, k_b).shape, dtype=bool)
        if self.chain_gap is not None:
            ok &= (k_b - k_a) >= self.chain_gap
        if self.conflict_gap is not None:
            ok &= np.abs(k_b - k_a) >= self.conflict_gap
        return ok

    def offsets(self) -> Tuple[int, Optional[int]]:
        """
        The allowed values of k_b - k_a as (ahead, behind)

        A pair is allowed when k_b - k_a >= ahead, or when behind is not None
        and k_b - k_a <= -behind.
        """
        if self.chain_gap is None:
            return self.conflict_gap, self.conflict_gap
        return max(self.chain_gap, self.conflict_gap or 0), None


def chain_groups(channels: Sequence[Channel], mode: ChannelMode) -> List[List[int]]:
    """Plan-order index chains that must not overlap"""
    if mode == ChannelMode.MERGED:
        return [list(range(len(channels)))] if channels else []
    return [
        [j for j, c in enumerate(channels) if c == channel]
        for channel in (Channel.EXPRESSION, Channel.MOTION)
    ]


class GridProblem:
    """An alignment instance restricted to grid start times"""

    def __init__(
        self,
        plan: ExpressionPlan,
        timeline: WordTimeline,
        matrix: RelevanceMatrix,
        catalog: ActionCatalog,
        config: AlignConfig,
    ):
        actions = plan.actions
        if matrix.shape != (len(timeline.words), len(actions)):
            raise DimError(
                f"relevance matrix {matrix.shape} does not match "
                f"{len(timeline.words)} words x {len(actions)} actions"
            )

        self.timeline = timeline
        self.config = config
        self.tick = config.tick
        self.horizon = timeline.speech_end + config.tail_margin
        self.action_ids = [a.action_id for a in actions]
        self.channels = [a.channel for a in actions]
        self.durations = [catalog.duration(a) for a in self.action_ids]
        self.last_ticks = [last_start_tick(self.horizon, d, self.tick) for d in self.durations]

        self.scores: List[np.ndarray] = []
        self.matched: List[np.ndarray] = []
        for j, last in enumerate(self.last_ticks):
            times = np.array([grid_time(k, self.tick) for k in range(max(last + 1, 0))])
            scores, matched = score_grid(j, times, matrix, timeline, config)
            self.scores.append(scores)
            self.matched.append(matched)

        self.rules: Dict[Tuple[int, int], PairRule] = {}
        for group in chain_groups(self.channels, config.channel_mode):
            for a, b in zip(group, group[1:]):
                self.rules[(a, b)] = PairRule(chain_gap=chain_gap_ticks(self.durations[a], self.tick))
        for b in range(len(actions)):
            for a in range(b):
                if catalog.in_conflict(self.action_ids[a], self.action_ids[b]):
                    rule = self.rules.setdefault((a, b), PairRule())
                    rule.conflict_gap = conflict_gap_ticks(self.durations[a], self.durations[b], self.tick)

    @property
    def size(self) -> int:
        return len(self.action_ids)

    def domain_size(self, j: int) -> int:
        return max(self.last_ticks[j] + 1, 0)

    def prefix(self, count: int) -> "GridProblem":
        """The same problem restricted to the first count actions"""
        sub = object.__new__(GridProblem)
        sub.__dict__.update(self.__dict__)
        for name in ("action_ids", "channels", "durations", "last_ticks", "scores", "matched"):
            setattr(sub, name, getattr(self, name)[:count])
        sub.rules = {pair: rule for pair, rule in self.rules.items() if pair[1] < count}
        return sub

    def earlier_partners(self, j: int) -> List[int]:
        return sorted(a for (a, b) in self.rules if b == j)

    def exact_scores(self) -> Tuple[List[np.ndarray], int]:
        """
        Scores as integers over a common power-of-two denominator

        Returns:
            (per-action integer arrays, sentinel value for infeasible cells)
        """
        ratios = {}
        for scores in self.scores:
            for value in np.unique(scores):
                ratios[float(value)] = float(value).as_integer_ratio()
        denominator = max((d for _, d in ratios.values()), default=1)
        as_int = {v: n * (denominator // d) for v, (n, d) in ratios.items()}

        max_total = sum(max((as_int[float(v)] for v in s), default=0) for s in self.scores)
        sentinel = -2 * (max_total + 1)
        dtype = np.int64 if -sentinel < 2**62 else object
        tables = [np.array([as_int[float(v)] for v in s], dtype=dtype) for s in self.scores]
        return tables, sentinel

    def to_schedule(self, ticks: Sequence[int], solver: str) -> Schedule:
        actions = []
        for j, k in enumerate(ticks):
            score = float(self.scores[j][k])
            position = int(self.matched[j][k])
            word = self.timeline.words[position] if position >= 0 else None
            actions.append(ScheduledAction(
                action_id=self.action_ids[j],
                channel=self.channels[j],
                start_s=grid_time(k, self.tick),
                duration_s=self.durations[j],
                matched_word_index=word.index if word else None,
                matched_word=word.word if word else None,
                term_score=score,
            ))
        return Schedule(
            actions=tuple(actions),
            objective=math.fsum(a.term_score for a in actions),
            horizon=self.horizon,
            tick=self.tick,
            metadata={
                "solver": solver,
                "delta": self.config.delta,
                "tick": self.tick,
                "tail_margin": self.config.tail_margin,
                "channel_mode": self.config.channel_mode.value,
                "modal_sync": self.config.modal_sync,
                "context_map": self.config.context_map,
                "temporal_plan": self.config.temporal_plan,
            },
        )


# =============================================================================
# SOLVERS
# =============================================================================

class _Factor:
    """A score table over the start ticks of the actions in `scope`"""

    __slots__ = ("scope", "table", "rule")

    def __init__(self, scope: Sequence[int], table: np.ndarray, rule: Optional[PairRule] = None):
        self.scope = tuple(scope)
        self.table = table
        self.rule = rule

    def given(self, ticks: Sequence[int]) -> "_Factor":
        """Fix the actions before len(ticks) at their chosen ticks"""
        if not any(v < len(ticks) for v in self.scope):
            return self
        index = tuple(ticks[v] if v < len(ticks) else slice(None) for v in self.scope)
        table = np.asarray(self.table[index], dtype=self.table.dtype)
        return _Factor([v for v in self.scope if v >= len(ticks)], table)


def _aligned(factor: _Factor, scope: Sequence[int]) -> np.ndarray:
    """View a factor's table as broadcastable against a table over `scope`"""
    order = sorted(factor.scope, key=list(scope).index)
    table = np.transpose(factor.table, [factor.scope.index(v) for v in order])
    return table[tuple(slice(None) if v in factor.scope else None for v in scope)]


class _MaxSum:
    """
    Max-sum variable elimination over start ticks

    Each action contributes a unary factor of exact integer scores and each
    pair rule a 0/sentinel factor. Eliminating an action maxes it out of the
    sum of the factors that mention it. The order is greedy by the size
    of the table that elimination would touch, so chains and trees of
    conflicts only ever produce vectors. A rule factor whose far end no
    other factor on the eliminated action mentions is passed through with
    running maxima instead of a full table.
    """

    def __init__(self, problem: GridProblem):
        values, self.sentinel = problem.exact_scores()
        self.dtype = values[0].dtype if values else np.dtype(np.int64)
        self.domains = [problem.domain_size(j) for j in range(problem.size)]
        self.factors = [_Factor((j,), values[j]) for j in range(problem.size)]
        for (a, b), rule in sorted(problem.rules.items()):
            allowed = rule.allowed(np.arange(self.domains[a])[:, None], np.arange(self.domains[b])[None, :])
            table = np.full(allowed.shape, self.sentinel, dtype=self.dtype)
            table[allowed] = 0
            self.factors.append(_Factor((a, b), table, rule))
        self._messages: Dict[tuple, Tuple[List[_Factor], _Factor]] = {}

    def max_marginal(self, query: int, ticks: Sequence[int] = ()) -> np.ndarray:
        """
        Best total score for each tick of `query`

        Actions before len(ticks) are held at the given ticks; every other
        action is maximized out. Cells with no feasible completion hold a
        negative value.
        """
        factors = [f.given(ticks) for f in self.factors]
        remaining = [v for v in range(len(ticks), len(self.domains)) if v != query]
        while remaining:
            v = min(remaining, key=lambda u: (self._cells(factors, u), -u))
            factors = self._eliminate(factors, v)
            remaining.remove(v)
        self._guard([query], self.domains[query])
        return self._sum(factors, [query])

    def _cells(self, factors: List[_Factor], v: int) -> int:
        scope = {u for f in factors if v in f.scope for u in f.scope}
        return math.prod(self.domains[u] for u in scope)

    def _guard(self, scope: Sequence[int], cells: int) -> None:
        if cells > Config.MAX_TABLE_CELLS:
            raise TooLarge(f"alignment table over {len(scope)} actions would hold {cells} cells")

    def _eliminate(self, factors: List[_Factor], v: int) -> List[_Factor]:
        touching = [f for f in factors if v in f.scope]
        key = (v, tuple(id(f) for f in touching))
        cached = self._messages.get(key)
        if cached is None:
            pair = _pass_through(touching, v)
            if pair is not None:
                scope, table = self._through_rule([f for f in touching if f is not pair], pair, v)
            else:
                scope = sorted({u for f in touching for u in f.scope} - {v})
                table = self._reduce(touching, scope, v)
            # the touching factors stay referenced so their ids are not reused
            cached = self._messages[key] = (touching, _Factor(scope, table))
        return [f for f in factors if v not in f.scope] + [cached[1]]

    def _sum(self, factors: List[_Factor], scope: Sequence[int], rows: Optional[slice] = None) -> np.ndarray:
        """Clipped sum of factors over `scope`, optionally restricted to rows of its first action"""
        shape = [self.domains[u] for u in scope]
        if rows is not None:
            shape[0] = len(range(*rows.indices(shape[0])))
        total = np.zeros(shape, dtype=self.dtype)
        for factor in factors:
            table = _aligned(factor, scope)
            if rows is not None and scope[0] in factor.scope:
                table = table[rows]
            total = np.maximum(total + table, self.sentinel)
        return total

    def _reduce(self, touching: List[_Factor], others: List[int], v: int) -> np.ndarray:
        scope = others + [v]
        self._guard(others, math.prod(self.domains[u] for u in others))
        work = math.prod(self.domains[u] for u in scope)
        if work > Config.MAX_ELIMINATION_CELLS:
            raise TooLarge(f"eliminating {len(scope)} coupled actions would visit {work} cells")
        if not others or work <= Config.CHUNK_CELLS:
            return np.asarray(self._sum(touching, scope).max(axis=-1), dtype=self.dtype)

        lead = self.domains[others[0]]
        step = max(1, Config.CHUNK_CELLS // (work // lead))
        out = np.empty([self.domains[u] for u in others], dtype=self.dtype)
        for start in range(0, lead, step):
            rows = slice(start, start + step)
            out[rows] = self._sum(touching, scope, rows).max(axis=-1)
        return out

    def _through_rule(self, rest: List[_Factor], pair: _Factor, v: int) -> Tuple[List[int], np.ndarray]:
        """
        Eliminate v across a pure ordering or conflict rule with partner w

        The remaining factors are summed over (their other actions, v); every
        allowed range of k_v given k_w is a prefix or suffix of v's axis, so
        running maxima along that axis give the message without a table
        over w and v together.
        """
        a, b = pair.scope
        w = a if v == b else b
        lead = sorted({u for f in rest for u in f.scope} - {v})
        self._guard(lead + [v], math.prod(self.domains[u] for u in lead + [v]))
        self._guard(lead + [w], math.prod(self.domains[u] for u in lead + [w]))

        scores = self._sum(rest, lead + [v])
        n_v = scores.shape[-1]
        prefix = np.maximum.accumulate(scores, axis=-1)
        suffix = np.flip(np.maximum.accumulate(np.flip(scores, axis=-1), axis=-1), axis=-1)

        ahead, behind = pair.rule.offsets()
        later = [ahead] if v == b else []
        earlier = [ahead] if v == a else []
        if behind is not None:
            (earlier if v == b else later).append(behind)

        ks = np.arange(self.domains[w])
        message = np.full(scores.shape[:-1] + ks.shape, self.sentinel, dtype=self.dtype)
        for gap in later:
            idx = ks + gap
            ok = idx < n_v
            message[..., ok] = np.maximum(message[..., ok], suffix[..., idx[ok]])
        for gap in earlier:
            idx = ks - gap
            ok = idx >= 0
            message[..., ok] = np.maximum(message[..., ok], prefix[..., idx[ok]])
        return lead + [w], message


def _pass_through(touching: List[_Factor], v: int) -> Optional[_Factor]:
    """A rule factor on v whose partner no other factor on v mentions"""
    for factor in touching:
        if factor.rule is None:
            continue
        w = factor.scope[0] if factor.scope[1] == v else factor.scope[1]
        if not any(w in other.scope for other in touching if other is not factor):
            return factor
    return None


def _first_unplaceable(problem: GridProblem) -> Tuple[str, str]:
    """The first action in plan order whose prefix has no feasible placement, with the reason"""
    for count in range(1, problem.size + 1):
        j = count - 1
        if problem.domain_size(j) == 0:
            return problem.action_ids[j], (
                f"duration {problem.durations[j]}s does not fit the {problem.horizon:.3f}s horizon"
            )
        if _MaxSum(problem.prefix(count)).max_marginal(0).max() < 0:
            return problem.action_ids[j], "no start time satisfies the constraints"
    return problem.action_ids[-1], "no start time satisfies the constraints"


def optimal_ticks(problem: GridProblem) -> List[int]:
    """
    Grid-optimal start ticks, lexicographically smallest among optima

    Actions are decided in plan order: each takes the smallest tick whose
    max-marginal, given the ticks already chosen, still reaches the optimum.

    Raises:
        Infeasible: naming the first action (in plan order) whose prefix
            cannot be placed
    """
    if problem.size == 0:
        return []
    if min(problem.domain_size(j) for j in range(problem.size)) == 0:
        raise Infeasible(*_first_unplaceable(problem))

    solver = _MaxSum(problem)
    ticks: List[int] = []
    best = None
    for j in range(problem.size):
        marginal = solver.max_marginal(j, ticks)
        if best is None:
            best = marginal.max()
            if best < 0:
                raise Infeasible(*_first_unplaceable(problem))
        ticks.append(int(np.flatnonzero(np.asarray(marginal == best, dtype=bool))[0]))
    logger.debug("max-sum messages computed: %d", len(solver._messages))
    return ticks


def greedy_ticks(problem: GridProblem) -> List[int]:
    """Earliest feasible start for each action in plan order, ignoring scores"""
    ticks: List[int] = []
    for j in range(problem.size):
        if problem.domain_size(j) == 0:
            raise Infeasible(
                problem.action_ids[j],
                f"duration {problem.durations[j]}s does not fit the {problem.horizon:.3f}s horizon",
            )
        candidates = np.arange(problem.domain_size(j))
        ok = np.ones(candidates.shape[0], dtype=bool)
        for p in problem.earlier_partners(j):
            ok &= problem.rules[(p, j)].allowed(ticks[p], candidates)
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            raise Infeasible(problem.action_ids[j], "no start after the actions placed before it")
        ticks.append(int(hits[0]))
    return ticks


def solve(
    plan: ExpressionPlan,
    timeline: WordTimeline,
    matrix: RelevanceMatrix,
    catalog: ActionCatalog,
    config: Optional[AlignConfig] = None,
) -> Schedule:
    """
    Assign a start time to every plan action

    With temporal planning on, the result maximizes the alignment objective
    over the grid (ties go to the lexicographically smallest start vector in
    plan order). With it off, actions take their earliest feasible start.

    Raises:
        PlanNotExecutable: the plan uses uncatalogued actions or wrong channels
        Infeasible: no start assignment satisfies the constraints
    """
    config = config or AlignConfig()
    report = validate_plan(plan, catalog)
    if not report.ok:
        raise PlanNotExecutable(report.issues)

    problem = GridProblem(plan, timeline, matrix, catalog, config)
    if config.temporal_plan:
        ticks, solver = optimal_ticks(problem), "dp"
    else:
        ticks, solver = greedy_ticks(problem), "greedy"
    schedule = problem.to_schedule(ticks, solver)
    logger.info("scheduled %d actions, objective %.4f (%s)", problem.size, schedule.objective, solver)
    return schedule


def greedy_schedule(
    plan: ExpressionPlan,
    timeline: WordTimeline,
    matrix: RelevanceMatrix,
    catalog: ActionCatalog,
    config: Optional[AlignConfig] = None,
) -> Schedule:
    config = (config or AlignConfig()).model_copy(update={"temporal_plan": False})
    return solve(plan, timeline, matrix, catalog, config)


# =============================================================================
# VERIFICATION
# =============================================================================

def check_constraints(
    schedule: Schedule,
    catalog: ActionCatalog,
    config: AlignConfig,
    timeline: WordTimeline,
) -> ConstraintReport:
    """
    Re-verify a schedule against grid, horizon, ordering and conflict rules

    Returns:
        Report listing every violated constraint; empty when valid
    """
    tick = config.tick
    horizon = timeline.speech_end + config.tail_margin
    violations: List[Violation] = []
    ticks: List[Optional[int]] = []
    durations: List[float] = []

    for action in schedule.actions:
        if action.action_id not in catalog:
            violations.append(Violation(
                kind="unknown", action_ids=(action.action_id,),
                message=f"{action.action_id}: unknown action",
            ))
            ticks.append(None)
            durations.append(action.duration_s)
            continue

        duration = catalog.duration(action.action_id)
        durations.append(duration)
        position = action.start_s / tick
        k = round(position)
        if action.start_s < 0 or abs(position - k) > 1e-6:
            violations.append(Violation(
                kind="grid", action_ids=(action.action_id,),
                message=f"grid: {action.action_id} starts at {action.start_s}s, not a multiple of {tick}s",
            ))
            ticks.append(None)
            continue
        ticks.append(k)
        if k > last_start_tick(horizon, duration, tick):
            violations.append(Violation(
                kind="horizon", action_ids=(action.action_id,),
                message=(
                    f"horizon: {action.action_id} ends at {action.start_s + duration:.3f}s "
                    f"after the {horizon:.3f}s horizon"
                ),
            ))

    channels = [a.channel for a in schedule.actions]
    for group in chain_groups(channels, config.channel_mode):
        for a, b in zip(group, group[1:]):
            if ticks[a] is None or ticks[b] is None:
                continue
            if ticks[b] - ticks[a] < chain_gap_ticks(durations[a], tick):
                first, second = schedule.actions[a], schedule.actions[b]
                violations.append(Violation(
                    kind="ordering", action_ids=(first.action_id, second.action_id),
                    message=(
                        f"ordering: {first.action_id} ends at {first.start_s + durations[a]:.3f}s "
                        f"but {second.action_id} starts at {second.start_s:.3f}s"
                    ),
                ))

    for b in range(len(schedule.actions)):
        for a in range(b):
            id_a, id_b = schedule.actions[a].action_id, schedule.actions[b].action_id
            if ticks[a] is None or ticks[b] is None or not catalog.in_conflict(id_a, id_b):
                continue
            if abs(ticks[b] - ticks[a]) < conflict_gap_ticks(durations[a], durations[b], tick):
                gap = abs(schedule.actions[b].start_s - schedule.actions[a].start_s)
                violations.append(Violation(
                    kind="conflict", action_ids=(id_a, id_b),
                    message=(
                        f"conflict: {id_a} and {id_b} start {gap:.3f}s apart, "
                        f"need more than {max(durations[a], durations[b])}s"
                    ),
                ))

    return ConstraintReport(violations=violations)


def alignment_report(schedule: Schedule, timeline: WordTimeline, delta: float) -> List[AlignmentCheck]:
    """Offset of each action from its matched word start; unmatched actions are never aligned"""
    starts = {w.index: w.t_start for w in timeline.words}
    checks = []
    for action in schedule.actions:
        if action.matched_word_index is None:
            checks.append(AlignmentCheck(action_id=action.action_id))
            continue
        offset = action.start_s - starts[action.matched_word_index]
        checks.append(AlignmentCheck(
            action_id=action.action_id,
            matched_word=action.matched_word,
            offset_s=offset,
            aligned=abs(offset) < delta,
        ))
    return checks

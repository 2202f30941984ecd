"""Exhaustive reference solver over the start-time grid"""

import logging
from typing import List, Optional

import numpy as np

from src.alignment.plan import validate_plan
from src.alignment.scheduler import GridProblem, check_constraints
from src.errors import ConstraintViolation, Infeasible, PlanNotExecutable, TooLarge
from src.models import (
    ActionCatalog,
    AlignConfig,
    ExpressionPlan,
    RelevanceMatrix,
    Schedule,
    WordTimeline,
)
from src.utils.config import Config

logger = logging.getLogger(__name__)


class _Search:
    """Depth-first enumeration in plan order; the last two actions are scored as one block"""

    def __init__(self, problem: GridProblem):
        self.problem = problem
        self.values, self.sentinel = problem.exact_scores()
        self.m = problem.size
        self.tail = min(2, self.m)
        self.head = self.m - self.tail
        self.best_total = None
        self.best_ticks: Optional[List[int]] = None
        self.deepest = 0

    def _allowed(self, prefix: List[int], j: int) -> np.ndarray:
        candidates = np.arange(self.problem.domain_size(j))
        ok = np.ones(candidates.shape[0], dtype=bool)
        for p, k in enumerate(prefix):
            rule = self.problem.rules.get((p, j))
            if rule is not None:
                ok &= rule.allowed(k, candidates)
        return ok

    def _offer(self, total, ticks: List[int]) -> None:
        # strict: the first optimum met in lexicographic order wins
        if self.best_total is None or total > self.best_total:
            self.best_total = total
            self.best_ticks = ticks

    def run(self) -> None:
        self._visit([], 0)

    def _visit(self, prefix: List[int], total) -> None:
        depth = len(prefix)
        self.deepest = max(self.deepest, depth)
        if depth == self.head:
            self._finish(prefix, total)
            return
        for k in np.flatnonzero(self._allowed(prefix, depth)):
            k = int(k)
            self._visit(prefix + [k], total + self.values[depth][k])

    def _finish(self, prefix: List[int], total) -> None:
        first = self.head
        ok_first = self._allowed(prefix, first)
        if not ok_first.any():
            return
        self.deepest = max(self.deepest, first + 1)

        if self.tail == 1:
            masked = np.where(ok_first, self.values[first], self.sentinel)
            k = int(np.argmax(masked))
            self._offer(total + masked[k], prefix + [k])
            return

        second = first + 1
        ok = ok_first[:, None] & self._allowed(prefix, second)[None, :]
        rule = self.problem.rules.get((first, second))
        if rule is not None:
            ok &= rule.allowed(
                np.arange(self.problem.domain_size(first))[:, None],
                np.arange(self.problem.domain_size(second))[None, :],
            )
        if not ok.any():
            return
        self.deepest = self.m
        totals = self.values[first][:, None] + self.values[second][None, :]
        masked = np.where(ok, totals, self.sentinel)
        flat = int(np.argmax(masked))
        k1, k2 = divmod(flat, masked.shape[1])
        self._offer(total + masked[k1, k2], prefix + [k1, k2])


def brute_force_solve(
    plan: ExpressionPlan,
    timeline: WordTimeline,
    matrix: RelevanceMatrix,
    catalog: ActionCatalog,
    config: Optional[AlignConfig] = None,
) -> Schedule:
    """
    Enumerate every grid assignment and keep the best

    Same grid, scores and tie-break as the optimal solver, so on
    any instance both return identical start vectors.

    Raises:
        PlanNotExecutable: plan fails catalog validation
        TooLarge: more than the enumeration bound of assignments
        Infeasible: no assignment satisfies the constraints
    """
    config = config or AlignConfig()
    report = validate_plan(plan, catalog)
    if not report.ok:
        raise PlanNotExecutable(report.issues)

    problem = GridProblem(plan, timeline, matrix, catalog, config)
    if problem.size == 0:
        return problem.to_schedule([], "brute-force")

    enumerations = 1
    for j in range(problem.size):
        enumerations *= problem.domain_size(j)
    if enumerations > Config.ORACLE_MAX_ENUMERATIONS:
        raise TooLarge(
            f"{enumerations} grid assignments exceed the bound of {Config.ORACLE_MAX_ENUMERATIONS}"
        )

    search = _Search(problem)
    search.run()
    if search.best_ticks is None:
        raise Infeasible(problem.action_ids[search.deepest], "no start time satisfies the constraints")

    schedule = problem.to_schedule(search.best_ticks, "brute-force")
    verdict = check_constraints(schedule, catalog, config, timeline)
    if not verdict.ok:
        raise ConstraintViolation(verdict.messages)
    logger.debug("brute force: %d assignments bounded, objective %.4f", enumerations, schedule.objective)
    return schedule

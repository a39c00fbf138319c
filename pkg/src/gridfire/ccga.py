"""Iterative robust planning loop and its result containers.

The loop alternates two problems. The master chooses investments and
switching against every uncertainty realization collected so far and yields
a lower bound; the worst-case subproblem takes the master's plan, finds the
realization that maximizes operating cost, and yields an upper bound
(investment plus worst-case operation). Each new realization enters the
master as a fresh recourse block, so the lower bound can only rise. The
loop stops when the bound gap closes to epsilon, when the subproblem
returns a realization the master has already priced, or at the iteration
cap.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import (
    CaseData,
    CaseError,
    DispatchSolution,
    PlanDecision,
    PlanningConfig,
    UncertaintyRealization,
    validate_case,
)

__all__ = [
    "IterationRecord",
    "RobustPlanResult",
    "RiskInfeasibleError",
    "check_convergence",
    "solve",
]


class RiskInfeasibleError(CaseError):
    """The master has no feasible plan (risk tolerance below any reachable score)."""


@dataclass(frozen=True)
class IterationRecord:
    """One loop pass: bounds, gap, timings, and the new realization's size."""

    index: int
    lb: float
    ub: float
    gap: float
    subproblem_ms: float
    master_ms: float
    realization_flags: int = 0


@dataclass
class RobustPlanResult:
    """Final plan with bound history and per-realization dispatches.

    ``dispatches`` is keyed by realization label: "nominal" is always
    present; "worst" is the final plan's dispatch under the worst-case
    realization when the plan is robustly feasible; intermediate vertices
    appear as "realization_1", "realization_2", ...
    """

    case: CaseData
    plan: PlanDecision
    lb: float
    ub: float
    converged: bool
    worst_realization: UncertaintyRealization
    iterations: tuple[IterationRecord, ...]
    dispatches: dict[str, DispatchSolution] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.ub - self.lb

    @property
    def investment_cost(self) -> float:
        return self.plan.investment_cost(self.case)

    @property
    def worst_operational_cost(self) -> float:
        return self.ub - self.investment_cost

    def labeled_dispatches(self) -> dict[str, DispatchSolution]:
        return dict(self.dispatches)

    def report_dispatch(self, which: str = "worst") -> DispatchSolution:
        """Dispatch used for reports; falls back to nominal when the worst
        realization's dispatch is unavailable."""
        if which not in ("worst", "nominal"):
            raise ValueError(f"report realization must be 'worst' or 'nominal', got {which!r}")
        if which in self.dispatches:
            return self.dispatches[which]
        return self.dispatches["nominal"]


def check_convergence(lb: float, ub: float, eps: float) -> bool:
    """True when the bound gap has closed: ub - lb <= eps.

    Infinite sentinels behave naturally: lb = -inf or ub = +inf never
    converges (their difference is +inf or nan).
    """
    gap = ub - lb
    return gap <= eps if not math.isnan(gap) else False

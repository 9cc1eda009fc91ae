"""Exact optimal general-variable branching for small instances.

The solver explores every branching strategy over the full ``(gap, remaining
multiplicities)`` state space. Dominance pruning is deliberately absent: a
dominated variable can be the strictly optimal root choice.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import INFEASIBLE, Instance, Variable, checked_size, validate_instance
from .errors import StateSpaceTooLarge, VerificationFailed

MAX_MULTIPLICITY_BUDGET = 24


class _Solver:
    """Memoised recursion over mixed-radix encoded multiplicity vectors.

    With all multiplicities equal to one the encoding is a plain bitmask.
    """

    def __init__(self, inst: Instance, max_budget: int):
        budget = sum(inst.multiplicities)
        if budget > max_budget:
            raise StateSpaceTooLarge(
                f"sum of multiplicities {budget} exceeds the cap of {max_budget}"
            )
        self.variables = inst.variables
        self.place = []
        self.radix = []
        weight = 1
        for m in inst.multiplicities:
            self.place.append(weight)
            self.radix.append(m + 1)
            weight *= m + 1
        self.full_state = sum(m * p for m, p in zip(inst.multiplicities, self.place))
        self.memo: dict[tuple[int, int], float | int] = {}

    def remaining(self, state: int, i: int) -> int:
        return (state // self.place[i]) % self.radix[i]

    def branch(self, gap: int, state: int, i: int):
        v = self.variables[i]
        child = state - self.place[i]
        return 1 + self.size(gap - v.l, child) + self.size(gap - v.r, child)

    def size(self, gap: int, state: int):
        if gap <= 0:
            return 1
        if state == 0:
            return INFEASIBLE
        key = (gap, state)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        best = INFEASIBLE
        for i in range(len(self.variables)):
            if self.remaining(state, i):
                best = min(best, self.branch(gap, state, i))
        best = checked_size(best)
        self.memo[key] = best
        return best


def gvb_opt_size(inst: Instance, max_budget: int = MAX_MULTIPLICITY_BUDGET):
    """Smallest tree closing ``inst.gap`` within the per-path multiplicities.

    Returns :data:`INFEASIBLE` when no tree exists.
    """
    solver = _Solver(inst, max_budget)
    return solver.size(inst.gap, solver.full_state)


def gvb_opt_size_with_forced_root(
    inst: Instance, root_var: int, max_budget: int = MAX_MULTIPLICITY_BUDGET
):
    """Smallest tree whose root branches on ``root_var``."""
    if not 0 <= root_var < inst.n:
        raise IndexError(f"root variable {root_var} out of range")
    if inst.multiplicities[root_var] < 1:
        raise ValueError(f"variable {root_var} has multiplicity 0 and cannot be the root")
    solver = _Solver(inst, max_budget)
    return checked_size(solver.branch(inst.gap, solver.full_state, root_var))


DOMINATED_ROOT_INSTANCE = validate_instance([(5, 6, 1), (9, 9, 1), (5, 10, 1)], 15)


@dataclass
class DominatedRootReport:
    optimal: float | int
    via: dict[Variable, float | int]

    @property
    def passed(self) -> bool:
        return (
            self.optimal == 9
            and self.via[Variable(5, 6)] == 9
            and self.via[Variable(9, 9)] >= 11
            and self.via[Variable(5, 10)] >= 11
        )


def dominated_root_values(inst: Instance = DOMINATED_ROOT_INSTANCE) -> DominatedRootReport:
    via = {v: gvb_opt_size_with_forced_root(inst, i) for i, v in enumerate(inst.variables)}
    return DominatedRootReport(gvb_opt_size(inst), via)


def verify_prop3_counterexample(raise_on_failure: bool = True) -> DominatedRootReport:
    """A dominated variable, (5,6), is the unique optimal root at G = 15."""
    report = dominated_root_values(DOMINATED_ROOT_INSTANCE)
    if not report.passed and raise_on_failure:
        raise VerificationFailed(
            f"dominated-root counterexample failed: optimum {report.optimal}, "
            f"forced roots {({str(k): v for k, v in report.via.items()})}",
            gap=DOMINATED_ROOT_INSTANCE.gap,
        )
    return report

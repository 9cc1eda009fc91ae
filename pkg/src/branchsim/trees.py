"""Exact single- and multiple-variable tree sizes.

All tables are plain Python ints guarded by :func:`checked_size`, so a
comparison between two sizes is always exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import MAX_TREE_SIZE, Variable, as_variable, checked_size
from .errors import VerificationFailed
from .ratio import compute_phi


@dataclass(frozen=True)
class SvbTable:
    variable: Variable
    sizes: tuple[int, ...]

    def __getitem__(self, gap: int) -> int:
        return 1 if gap <= 0 else self.sizes[gap]


@dataclass(frozen=True)
class MvbTable:
    variables: tuple[Variable, ...]
    sizes: tuple[int, ...]
    choice: tuple[int, ...]  # -1 at gap 0 (leaf)

    def __getitem__(self, gap: int) -> int:
        return 1 if gap <= 0 else self.sizes[gap]


def svb_sizes(v, max_gap: int, limit=MAX_TREE_SIZE) -> list[int]:
    """``t(g)`` for ``g = 0..max_gap`` under single-variable branching."""
    v = as_variable(v)
    l, r = v.l, v.r
    t = [1] * (max_gap + 1)
    for g in range(1, max_gap + 1):
        a = t[g - l] if g > l else 1
        b = t[g - r] if g > r else 1
        t[g] = checked_size(1 + a + b, limit)
    return t


def svb_table(v, max_gap: int, limit=MAX_TREE_SIZE) -> SvbTable:
    return SvbTable(as_variable(v), tuple(svb_sizes(v, max_gap, limit)))


def svb_size(v, gap: int, limit=MAX_TREE_SIZE) -> int:
    """Size of the minimal tree closing ``gap`` by branching on ``v`` only."""
    if gap < 0:
        raise ValueError("gap must be >= 0")
    v = as_variable(v)
    if gap == 0:
        return 1
    # rolling window of the last r values
    l, r = v.l, v.r
    window = [1] * (r + 1)  # window[g % (r+1)] = t(g)
    width = r + 1
    for g in range(1, gap + 1):
        a = window[(g - l) % width] if g > l else 1
        b = window[(g - r) % width] if g > r else 1
        window[g % width] = checked_size(1 + a + b, limit)
    return window[gap % width]


def svb_log_size(v, gap: int, anchor: int) -> float:
    """``ln t(anchor) + (gap - anchor) * ln(phi)``."""
    if not 0 <= anchor <= gap:
        raise ValueError("need 0 <= anchor <= gap")
    v = as_variable(v)
    base = math.log(svb_sizes(v, anchor, limit=None)[anchor])
    if gap == anchor:
        return base
    return base + (gap - anchor) * math.log(compute_phi(v).phi)


def mvb_table(variables: Sequence, max_gap: int, limit=MAX_TREE_SIZE) -> MvbTable:
    vs = tuple(as_variable(v) for v in variables)
    if not vs:
        raise ValueError("need at least one variable")
    if max_gap < 0:
        raise ValueError("gap must be >= 0")
    t = [1] * (max_gap + 1)
    choice = [-1] * (max_gap + 1)
    for g in range(1, max_gap + 1):
        best = None
        arg = -1
        for i, v in enumerate(vs):
            a = t[g - v.l] if g > v.l else 1
            b = t[g - v.r] if g > v.r else 1
            if best is None or a + b < best:
                best, arg = a + b, i
        t[g] = checked_size(1 + best, limit)
        choice[g] = arg
    return MvbTable(vs, tuple(t), tuple(choice))


def mvb_size(variables: Sequence, gap: int, limit=MAX_TREE_SIZE) -> tuple[int, int]:
    """Minimal multiple-variable tree size and the root variable achieving it.

    Ties go to the lowest index; the choice is -1 when ``gap == 0``.
    """
    table = mvb_table(variables, gap, limit)
    return table.sizes[gap], table.choice[gap]


def mvb_ratio(variables: Sequence) -> float:
    return min(compute_phi(v).phi for v in variables)


# t(G) + 1 = (A * 4**k + B) / D for G = 6k + residue, instance (2,4), (3,3).
CLOSED_FORM_COEFFS = {
    0: (2, 0, 1),
    1: (8, 4, 3),
    2: (10, 2, 3),
    3: (4, 0, 1),
    4: (16, 2, 3),
    5: (20, 4, 3),
}

COUNTEREXAMPLE_VARIABLES = (Variable(2, 4), Variable(3, 3))


def mvb_closed_form(gap: int, limit=MAX_TREE_SIZE) -> int:
    """Closed-form tree size for the instance ``(2,4), (3,3)``."""
    if gap < 0:
        raise ValueError("gap must be >= 0")
    k, residue = divmod(gap, 6)
    a, b, d = CLOSED_FORM_COEFFS[residue]
    num = a * 4**k + b
    if num % d:
        raise ArithmeticError(f"closed form not integral at gap {gap}")
    return checked_size(num // d - 1, limit)


@dataclass
class GapCheck:
    gap: int
    dp: int
    closed_form: int
    via_24: int | None = None
    via_33: int | None = None

    @property
    def passed(self) -> bool:
        ok = self.dp == self.closed_form
        if self.via_24 is not None:
            ok = ok and self.via_24 < self.via_33
        return ok


@dataclass
class MvbReport:
    gap_max: int
    checks: list[GapCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def strict_gaps(self) -> list[int]:
        return [c.gap for c in self.checks if c.via_24 is not None]

    def first_failure(self) -> GapCheck | None:
        return next((c for c in self.checks if not c.passed), None)


def verify_mvb_counterexample(
    gap_max: int, raise_on_failure: bool = True, limit=None
) -> MvbReport:
    """Check the closed form against the DP and that (2,4) wins at G = 2 + 6k.

    Runs with unbounded integers by default; sizes pass 2**128 near G = 384.
    """
    if gap_max < 8:
        raise ValueError("gap_max must be >= 8")
    table = mvb_table(COUNTEREXAMPLE_VARIABLES, gap_max, limit)
    checks = []
    for g in range(gap_max + 1):
        check = GapCheck(g, table.sizes[g], mvb_closed_form(g, limit))
        if g >= 8 and g % 6 == 2:
            check.via_24 = 1 + table[g - 2] + table[g - 4]
            check.via_33 = 1 + 2 * table[g - 3]
        checks.append(check)
    report = MvbReport(gap_max, checks)
    bad = report.first_failure()
    if bad is not None and raise_on_failure:
        raise VerificationFailed(
            f"MVB counterexample check failed at gap {bad.gap}: dp={bad.dp}, "
            f"closed form={bad.closed_form}, via (2,4)={bad.via_24}, via (3,3)={bad.via_33}",
            gap=bad.gap,
        )
    return report

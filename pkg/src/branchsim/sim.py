"""Simulated tree sizes under a selection rule, over dominance-free states.

With a rule that never picks a dominated variable, the set of unused
variables is always the dominance down-closure of its non-dominated members
(the *frontier*), so ``(frontier, gap)`` identifies a DP state. Frontier
updates use the reduced dominance DAG: after using ``i``, a successor ``s``
of ``i`` joins the frontier once none of its immediate dominators is unused,
which is a single AND against a precomputed predecessor mask.
"""

from __future__ import annotations

import enum
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    INFEASIBLE,
    Instance,
    Variable,
    build_dominance_dag,
    checked_size,
    dominates,
    validate_instance,
)
from .errors import NumericError, RuleViolation, StateExplosion
from .scoring import RuleKind, ScoringParams, SelectionRule

WORD_SIZE = 64
GENERATOR = "numpy.random.PCG64"


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class FrontierState:
    """A DP state: available non-dominated variables plus the used set."""

    frontier: int
    used: int
    n: int

    @property
    def unused(self) -> int:
        return ((1 << self.n) - 1) & ~self.used

    def indegree(self, dag, i: int) -> int:
        """Number of immediate dominators of ``i`` not yet used."""
        return (dag.reduced_pred[i] & self.unused).bit_count()


class _FrontierGraph:
    def __init__(self, variables: Sequence):
        self.variables = [tuple(v) for v in variables]
        self.n = len(self.variables)
        self.dag = build_dominance_dag(self.variables)
        self.all = (1 << self.n) - 1

    def initial(self) -> FrontierState:
        return FrontierState(self.dag.roots(), 0, self.n)

    def advance(self, frontier: int, unused: int, i: int) -> tuple[int, int]:
        bit = 1 << i
        unused &= ~bit
        frontier &= ~bit
        pred = self.dag.reduced_pred
        for s in _bits(self.dag.reduced[i]):
            if not pred[s] & unused:
                frontier |= 1 << s
        return frontier, unused

    def closure(self, frontier: int) -> int:
        """Unused set implied by a frontier: the frontier plus all it dominates."""
        unused = frontier
        for i in _bits(frontier):
            unused |= self.dag.full[i]
        return unused


def simulate_tree_size(inst: Instance, rule: SelectionRule, key: str = "frontier"):
    """Size of the tree built by always branching on ``rule``'s choice.

    Multiplicities must all be one. ``key="used"`` memoises on the used set
    instead of the frontier (a cross-check of the frontier encoding).
    Returns :data:`INFEASIBLE` when some path runs out of variables.
    """
    if any(m != 1 for m in inst.multiplicities):
        raise ValueError("the simulator requires all multiplicities to equal 1")
    if inst.n > WORD_SIZE:
        raise ValueError(f"at most {WORD_SIZE} variables are supported")
    if key not in ("frontier", "used"):
        raise ValueError("key must be 'frontier' or 'used'")
    graph = _FrontierGraph(inst.variables)
    variables = inst.variables
    memo: dict[tuple[int, int], float | int] = {}
    candidates_of: dict[int, list[tuple[int, Variable]]] = {}
    by_used = key == "used"
    full = graph.all

    def size(frontier: int, unused: int, gap: int):
        if gap <= 0:
            return 1
        if not unused:
            return INFEASIBLE
        k = (full & ~unused if by_used else frontier, gap)
        hit = memo.get(k)
        if hit is not None:
            return hit
        cands = candidates_of.get(frontier)
        if cands is None:
            cands = [(i, variables[i]) for i in _bits(frontier)]
            candidates_of[frontier] = cands
        i = rule.select(cands, gap)
        if not frontier >> i & 1:
            raise RuleViolation(f"rule selected variable {i} outside the frontier")
        f2, u2 = graph.advance(frontier, unused, i)
        v = variables[i]
        result = checked_size(1 + size(f2, u2, gap - v.l) + size(f2, u2, gap - v.r))
        memo[k] = result
        return result

    start = graph.initial()
    limit = sys.getrecursionlimit()
    if limit < 4 * inst.n + 100:
        sys.setrecursionlimit(4 * inst.n + 100)
    return size(start.frontier, start.unused, inst.gap)


def enumerate_frontiers(variables: Sequence, budget: int = 10**8) -> set[int]:
    """Every frontier reachable by consuming frontier variables one at a time."""
    if len(variables) > WORD_SIZE:
        raise ValueError(f"at most {WORD_SIZE} variables are supported")
    if not variables:
        return {0}
    graph = _FrontierGraph(variables)
    start = graph.initial()
    seen = {start.frontier}
    stack = [(start.frontier, start.unused)]
    while stack:
        frontier, unused = stack.pop()
        for i in _bits(frontier):
            f2, u2 = graph.advance(frontier, unused, i)
            if f2 not in seen:
                seen.add(f2)
                if len(seen) > budget:
                    raise StateExplosion(f"more than {budget} frontier states")
                stack.append((f2, u2))
    return seen


def expected_nondominated_count_exact(n: int) -> Fraction:
    if n < 0:
        raise ValueError("n must be >= 0")
    return sum((Fraction(math.comb(n, k), math.factorial(k)) for k in range(n + 1)), Fraction(0))


def expected_nondominated_count(n: int) -> float:
    """Mean number of dominance-free subsets of ``n`` pairs with distinct coordinates."""
    return float(expected_nondominated_count_exact(n))


def count_nondominated_subsets(pairs: Sequence) -> int:
    """Count subsets (including the empty set) with no dominated member."""
    pairs = [tuple(p) for p in pairs]
    n = len(pairs)
    if n > 20:
        raise ValueError("brute-force counting is limited to n <= 20")
    conflict = [0] * n
    for i in range(n):
        for j in range(n):
            if dominates(pairs[i], pairs[j]) or dominates(pairs[j], pairs[i]):
                conflict[i] |= 1 << j
    free = bytearray(1 << n)
    free[0] = 1
    count = 1
    for s in range(1, 1 << n):
        low = (s & -s).bit_length() - 1
        rest = s & (s - 1)
        if free[rest] and not conflict[low] & rest:
            free[s] = 1
            count += 1
    return count


def continuous_pairs(n: int, rng: np.random.Generator) -> list[tuple[float, float]]:
    """Independent uniform pairs; coordinates are distinct with probability one."""
    xy = rng.random((n, 2))
    return [(float(a), float(b)) for a, b in xy]


# -- random instances --------------------------------------------------------


class Category(enum.Enum):
    BALANCED = ("Balanced", (1, 1000), (1, 1000))
    UNBALANCED = ("Unbalanced", (1, 500), (501, 1000))
    VERY_UNBALANCED = ("VeryUnbalanced", (1, 250), (251, 1000))
    EXTREMELY_UNBALANCED = ("ExtremelyUnbalanced", (1, 125), (126, 1000))

    def __init__(self, label, l_range, r_range):
        self.label = label
        self.l_range = l_range
        self.r_range = r_range

    @classmethod
    def parse(cls, name: str) -> Category:
        key = name.replace("_", "").replace("-", "").lower()
        for cat in cls:
            if cat.label.lower() == key or cat.name.replace("_", "").lower() == key:
                return cat
        raise ValueError(f"unknown category {name!r}")


#: Gap sizes (small, medium, large) used for each category at full scale.
REFERENCE_GAPS = {
    Category.BALANCED: (5000, 9000, 12000),
    Category.UNBALANCED: (4000, 7000, 9000),
    Category.VERY_UNBALANCED: (3000, 5000, 6000),
    Category.EXTREMELY_UNBALANCED: (2000, 3000, 3500),
}


def generate_instance(cat: Category, n: int, seed: int, gap: int = 0) -> Instance:
    """Draw ``n`` variables with multiplicity one; deterministic in ``seed``.

    All ``l`` values are drawn first, then all ``r`` values, from PCG64 seeded
    with ``seed``. Balanced pairs are swapped into ``l <= r``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    (l_lo, l_hi), (r_lo, r_hi) = cat.l_range, cat.r_range
    ls = rng.integers(l_lo, l_hi + 1, size=n)
    rs = rng.integers(r_lo, r_hi + 1, size=n)
    return validate_instance([(int(l), int(r), 1) for l, r in zip(ls, rs)], gap)


def instance_seed(seed: int, cat: Category, instance_id: int) -> int:
    cat_index = list(Category).index(cat)
    ss = np.random.SeedSequence([seed, cat_index, instance_id])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# -- experiments -------------------------------------------------------------


@dataclass
class ExperimentConfig:
    categories: list[Category]
    n_vars: int = 60
    gaps: dict[Category, tuple[int, ...]] = field(default_factory=lambda: dict(REFERENCE_GAPS))
    n_instances: int = 3000
    seed: int = 0
    rules: list[RuleKind] = field(
        default_factory=lambda: [RuleKind.PRODUCT, RuleKind.RATIO, RuleKind.SVTS]
    )
    params: ScoringParams = field(default_factory=ScoringParams)

    def __post_init__(self):
        if not 1 <= self.n_vars <= WORD_SIZE:
            raise ValueError(f"n_vars must be in [1, {WORD_SIZE}]")
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        self.rules = [RuleKind(r) for r in self.rules]
        for cat in self.categories:
            if any(g <= 0 for g in self.gaps[cat]):
                raise ValueError("gaps must be positive")


@dataclass(frozen=True)
class RunRecord:
    category: str
    gap: int
    seed: int
    instance_id: int
    rule: str
    tree_size: int | None
    status: str  # ok | infeasible | overflow

    CSV_FIELDS = ("category", "gap", "seed", "instance_id", "rule", "tree_size", "status")

    def as_row(self) -> dict:
        return {
            "category": self.category,
            "gap": self.gap,
            "seed": self.seed,
            "instance_id": self.instance_id,
            "rule": self.rule,
            "tree_size": "" if self.tree_size is None else self.tree_size,
            "status": self.status,
        }


@dataclass
class SummaryRow:
    category: str
    gap: int
    relative: dict[str, float]  # percent vs product; negative means smaller trees
    n_used: int
    n_excluded: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    rows: list[SummaryRow]


def _simulate_one(task):
    cat, n_vars, gaps, seed, instance_id, rules, params = task
    base = generate_instance(cat, n_vars, instance_seed(seed, cat, instance_id))
    out = []
    for gap in gaps:
        inst = base.with_gap(gap)
        for kind in rules:
            rule = SelectionRule(kind, params)
            try:
                size = simulate_tree_size(inst, rule)
                status = "ok" if size != INFEASIBLE else "infeasible"
                value = size if status == "ok" else None
            except NumericError:
                status, value = "overflow", None
            out.append(RunRecord(cat.label, gap, seed, instance_id, kind.value, value, status))
    return out


def summarise(records: Sequence[RunRecord], rules: Sequence[RuleKind]) -> list[SummaryRow]:
    """Ratio of geometric means against the product rule, per (category, gap)."""
    groups: dict[tuple[str, int], dict[int, dict[str, RunRecord]]] = {}
    for rec in records:
        groups.setdefault((rec.category, rec.gap), {}).setdefault(rec.instance_id, {})[rec.rule] = rec
    names = [RuleKind(r).value for r in rules]
    rows = []
    for (cat, gap), by_instance in groups.items():
        logs = {name: 0.0 for name in names}
        used = excluded = 0
        for recs in by_instance.values():
            if any(recs[name].status != "ok" for name in names):
                excluded += 1
                continue
            used += 1
            for name in names:
                logs[name] += math.log(recs[name].tree_size)
        relative = {}
        for name in names:
            if used == 0 or "product" not in logs:
                relative[name] = math.nan
            else:
                relative[name] = 100.0 * (math.exp((logs[name] - logs["product"]) / used) - 1.0)
        rows.append(SummaryRow(cat, gap, relative, used, excluded))
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, progress=None) -> ExperimentResult:
    """Simulate every instance under every rule and summarise against product.

    Instances where any rule is infeasible or overflows are excluded from the
    geometric means and counted in ``n_excluded``.
    """
    tasks = [
        (cat, cfg.n_vars, tuple(cfg.gaps[cat]), cfg.seed, i, tuple(cfg.rules), cfg.params)
        for cat in cfg.categories
        for i in range(cfg.n_instances)
    ]
    records: list[RunRecord] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for done, recs in enumerate(pool.map(_simulate_one, tasks, chunksize=4), 1):
                records.extend(recs)
                if progress:
                    progress(done, len(tasks))
    else:
        for done, task in enumerate(tasks, 1):
            records.extend(_simulate_one(task))
            if progress:
                progress(done, len(tasks))
    records.sort(key=lambda r: (list(Category).index(Category.parse(r.category)), r.gap, r.instance_id, r.rule))
    return ExperimentResult(cfg, records, summarise(records, cfg.rules))

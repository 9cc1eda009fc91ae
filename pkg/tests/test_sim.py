import csv
import io
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from branchsim.core import INFEASIBLE, build_dominance_dag, validate_instance
from branchsim.errors import RuleViolation, StateExplosion
from branchsim.scoring import RuleKind, SelectionRule, make_rule
from branchsim.sim import (
    Category,
    ExperimentConfig,
    FrontierState,
    RunRecord,
    REFERENCE_GAPS,
    continuous_pairs,
    count_nondominated_subsets,
    enumerate_frontiers,
    expected_nondominated_count,
    expected_nondominated_count_exact,
    generate_instance,
    instance_seed,
    run_experiment,
    simulate_tree_size,
    summarise,
)
from branchsim.trees import svb_size

from oracles import count_free_subsets_naive, expected_count_float, simulate_full_subsets

THREE_VARS = validate_instance([(5, 6, 1), (9, 9, 1), (5, 10, 1)], 15)


def test_single_variable_examples():
    rule = make_rule("product")
    assert simulate_tree_size(validate_instance([(2, 5, 1)], 2), rule) == 3
    assert simulate_tree_size(validate_instance([(2, 5, 1)], 6), rule) == INFEASIBLE
    assert simulate_tree_size(validate_instance([(2, 5, 1)], 0), rule) == 1


def test_three_variable_product_rule():
    assert simulate_tree_size(THREE_VARS, make_rule("product")) == 11


def test_single_variable_matches_svb_when_feasible():
    for l in range(1, 6):
        for r in range(l, 8):
            for g in range(0, r + l + 2):
                size = simulate_tree_size(validate_instance([(l, r, 1)], g), make_rule("svts"))
                if size != INFEASIBLE:
                    assert size == svb_size((l, r), g)
                    assert g <= l


def test_requires_unit_multiplicities():
    with pytest.raises(ValueError):
        simulate_tree_size(validate_instance([(2, 5, 2)], 4), make_rule("product"))


class _Contrarian(SelectionRule):
    """Always returns an index that is not offered."""

    def select(self, candidates, gap):
        taken = {i for i, _ in candidates}
        return next(i for i in range(64) if i not in taken)


def test_rule_violation_is_detected():
    inst = validate_instance([(1, 1, 1), (2, 2, 1)], 3)
    with pytest.raises(RuleViolation):
        simulate_tree_size(inst, _Contrarian(RuleKind.PRODUCT))


@pytest.mark.parametrize("kind", list(RuleKind))
def test_frontier_key_matches_used_key_and_naive(kind):
    rng = random.Random(list(RuleKind).index(kind))
    for _ in range(25):
        n = rng.randint(1, 8)
        raw = [(rng.randint(1, 12), rng.randint(1, 12), 1) for _ in range(n)]
        inst = validate_instance(raw, rng.randint(0, 40))
        a = simulate_tree_size(inst, make_rule(kind))
        b = simulate_tree_size(inst, make_rule(kind), key="used")
        c = simulate_full_subsets(inst.variables, inst.gap, make_rule(kind))
        assert a == b == c


def test_one_step_expansion_matches_recurrence():
    rule = make_rule("ratio")
    inst = validate_instance([(2, 3, 1), (1, 4, 1), (3, 3, 1), (2, 2, 1)], 9)
    i = rule.select(list(enumerate(inst.variables)), inst.gap)
    v = inst.variables[i]
    rest = [(w.l, w.r, 1) for j, w in enumerate(inst.variables) if j != i]
    left = simulate_tree_size(validate_instance(rest, inst.gap - v.l), rule)
    right = simulate_tree_size(validate_instance(rest, max(0, inst.gap - v.r)), rule)
    assert simulate_tree_size(inst, rule) == 1 + left + right


def test_frontier_state_indegree():
    variables = [(1, 1), (2, 2), (3, 3), (1, 5)]
    dag = build_dominance_dag(variables)
    state = FrontierState(frontier=0b1100, used=0, n=4)
    assert state.unused == 0b1111
    assert state.indegree(dag, 0) == 2  # (2,2) and (1,5)
    assert state.indegree(dag, 2) == 0
    later = FrontierState(0b0010, 0b1100, 4)
    assert later.indegree(dag, 1) == 0
    assert later.indegree(dag, 0) == 1


def test_enumerate_frontier_examples():
    assert len(enumerate_frontiers([(1, 1), (2, 2), (3, 3)])) == 4
    assert len(enumerate_frontiers([(1, 3), (2, 2), (3, 1)])) == 8
    assert enumerate_frontiers([]) == {0}
    with pytest.raises(StateExplosion):
        enumerate_frontiers([(i, 20 - i) for i in range(1, 12)], budget=100)


def test_frontiers_are_exactly_the_free_subsets():
    rng = np.random.Generator(np.random.PCG64(2))
    for n in range(1, 11):
        pairs = continuous_pairs(n, rng)
        assert len(enumerate_frontiers(pairs)) == count_nondominated_subsets(pairs)
    rnd = random.Random(9)
    for _ in range(20):
        pairs = [(rnd.randint(1, 5), rnd.randint(1, 5)) for _ in range(8)]
        assert len(enumerate_frontiers(pairs)) <= count_nondominated_subsets(pairs)


def test_count_subsets_examples_and_oracle():
    assert count_nondominated_subsets([(1, 1), (2, 2), (3, 3)]) == 4
    assert count_nondominated_subsets([(1, 3), (2, 2), (3, 1)]) == 8
    assert count_nondominated_subsets([(4, 4)]) == 2
    rnd = random.Random(1)
    for _ in range(30):
        pairs = [(rnd.randint(1, 6), rnd.randint(1, 6)) for _ in range(rnd.randint(0, 9))]
        assert count_nondominated_subsets(pairs) == count_free_subsets_naive(pairs)


def test_expected_count_examples():
    assert expected_nondominated_count(0) == 1
    assert expected_nondominated_count(2) == 3.5
    assert expected_nondominated_count_exact(3) == Fraction(17, 3)
    for n in range(30):
        assert expected_nondominated_count(n) == pytest.approx(expected_count_float(n), rel=1e-12)


def test_generator_ranges():
    inst = generate_instance(Category.BALANCED, 60, 42)
    assert inst.n == 60 and set(inst.multiplicities) == {1}
    assert all(1 <= v.l <= v.r <= 1000 for v in inst.variables)
    inst = generate_instance(Category.EXTREMELY_UNBALANCED, 5, 7)
    assert all(1 <= v.l <= 125 and 126 <= v.r <= 1000 for v in inst.variables)
    for cat in Category:
        (l_lo, l_hi), (r_lo, r_hi) = cat.l_range, cat.r_range
        inst = generate_instance(cat, 64, 3)
        if cat is not Category.BALANCED:
            assert all(l_lo <= v.l <= l_hi and r_lo <= v.r <= r_hi for v in inst.variables)


def test_generator_is_deterministic():
    assert generate_instance(Category.UNBALANCED, 30, 5) == generate_instance(Category.UNBALANCED, 30, 5)
    assert generate_instance(Category.UNBALANCED, 30, 5) != generate_instance(Category.UNBALANCED, 30, 6)
    a = instance_seed(0, Category.BALANCED, 3)
    assert a == instance_seed(0, Category.BALANCED, 3)
    assert len({instance_seed(0, c, i) for c in Category for i in range(50)}) == 200


def test_category_parse():
    assert Category.parse("ExtremelyUnbalanced") is Category.EXTREMELY_UNBALANCED
    assert Category.parse("very-unbalanced") is Category.VERY_UNBALANCED
    with pytest.raises(ValueError):
        Category.parse("lopsided")


def test_reference_gaps():
    assert REFERENCE_GAPS[Category.BALANCED] == (5000, 9000, 12000)
    assert REFERENCE_GAPS[Category.EXTREMELY_UNBALANCED] == (2000, 3000, 3500)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig([Category.BALANCED], n_vars=65)
    with pytest.raises(ValueError):
        ExperimentConfig([Category.BALANCED], gaps={Category.BALANCED: (0,)})


def test_product_only_experiment_is_all_zero():
    cfg = ExperimentConfig(
        [Category.BALANCED, Category.UNBALANCED],
        n_vars=10,
        gaps={Category.BALANCED: (500, 900), Category.UNBALANCED: (400,)},
        n_instances=5,
        rules=["product"],
    )
    result = run_experiment(cfg)
    assert len(result.rows) == 3
    assert all(row.relative == {"product": 0.0} for row in result.rows)
    assert len(result.records) == 15


def test_experiment_is_reproducible_and_parallel_safe():
    cfg = ExperimentConfig(
        [Category.VERY_UNBALANCED],
        n_vars=12,
        gaps={Category.VERY_UNBALANCED: (600,)},
        n_instances=6,
        seed=3,
    )
    a = run_experiment(cfg)
    b = run_experiment(cfg, jobs=2)
    assert a.records == b.records
    assert [r.relative for r in a.rows] == [r.relative for r in b.rows]


def test_summarise_excludes_failed_instances():
    recs = [
        RunRecord("Balanced", 10, 0, 0, "product", 100, "ok"),
        RunRecord("Balanced", 10, 0, 0, "ratio", 50, "ok"),
        RunRecord("Balanced", 10, 0, 1, "product", 400, "ok"),
        RunRecord("Balanced", 10, 0, 1, "ratio", 100, "ok"),
        RunRecord("Balanced", 10, 0, 2, "product", 7, "ok"),
        RunRecord("Balanced", 10, 0, 2, "ratio", None, "infeasible"),
    ]
    (row,) = summarise(recs, [RuleKind.PRODUCT, RuleKind.RATIO])
    assert (row.n_used, row.n_excluded) == (2, 1)
    # geometric means 200 and sqrt(5000)
    assert row.relative["ratio"] == pytest.approx(100 * (math.sqrt(5000) / 200 - 1))


def test_csv_schema():
    rec = RunRecord("Balanced", 10, 0, 2, "svts", None, "overflow")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RunRecord.CSV_FIELDS)
    writer.writeheader()
    writer.writerow(rec.as_row())
    assert buf.getvalue().splitlines() == [
        "category,gap,seed,instance_id,rule,tree_size,status",
        "Balanced,10,0,2,svts,,overflow",
    ]

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchsim.core import (
    EmptyInstance,
    Instance,
    Variable,
    build_dominance_dag,
    dominates,
    format_instance,
    parse_instance,
    transitive_closure,
    validate_instance,
)
from branchsim.errors import InstanceFormatError, NegativeGap, NonPositiveGain

gains = st.integers(min_value=1, max_value=30)
pairs = st.tuples(gains, gains)


def test_validate_swaps_orientation():
    inst = validate_instance([(5, 2, 1)], 6)
    assert inst.variables == (Variable(2, 5),)
    assert inst.multiplicities == (1,)
    assert inst.gap == 6


def test_validate_keeps_order():
    inst = validate_instance([(2, 4, 1), (3, 3, 1)], 8)
    assert inst.variables == (Variable(2, 4), Variable(3, 3))
    assert inst.n == 2


@pytest.mark.parametrize(
    "raw, gap, exc",
    [
        ([(0, 4, 1)], 8, NonPositiveGain),
        ([(3, -1, 1)], 8, NonPositiveGain),
        ([(2, 4, 1)], -1, NegativeGap),
        ([], 3, EmptyInstance),
    ],
)
def test_validate_errors(raw, gap, exc):
    with pytest.raises(exc):
        validate_instance(raw, gap)


def test_variable_rejects_non_integers():
    with pytest.raises(NonPositiveGain):
        Variable(1.5, 2)


def test_dominates_examples():
    assert dominates((5, 10), (5, 6))
    assert not dominates((3, 3), (3, 3))
    assert not dominates((2, 4), (3, 3))
    assert not dominates((3, 3), (2, 4))


@settings(max_examples=50, deadline=None)
@given(st.lists(pairs, min_size=1, max_size=20))
def test_dominance_is_a_strict_order(vs):
    for a in vs:
        assert not dominates(a, a)
        for b in vs:
            if dominates(a, b):
                assert not dominates(b, a)
            for c in vs:
                if dominates(a, b) and dominates(b, c):
                    assert dominates(a, c)


def test_dag_chain():
    dag = build_dominance_dag([(1, 1), (2, 2), (3, 3)])
    assert dag.full_edges() == {(2, 1), (2, 0), (1, 0)}
    assert dag.reduced_edges() == {(2, 1), (1, 0)}
    assert dag.indegree == (1, 1, 0)


def test_dag_antichain():
    dag = build_dominance_dag([(1, 3), (2, 2), (3, 1)])
    assert dag.full_edges() == set()
    assert dag.roots() == 0b111


def test_dag_three_variables():
    dag = build_dominance_dag([(5, 6), (9, 9), (5, 10)])
    assert dag.reduced_edges() == {(1, 0), (2, 0)}
    assert dag.full_edges() == dag.reduced_edges()


def test_duplicates_are_incomparable():
    dag = build_dominance_dag([(4, 7), (4, 7)])
    assert dag.full_edges() == set()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 15), st.integers(1, 15)), min_size=1, max_size=50))
def test_reduction_recloses_to_full(vs):
    dag = build_dominance_dag(vs)
    assert dag.reduced_edges() <= dag.full_edges()
    assert tuple(transitive_closure(dag.reduced)) == dag.full
    for u, v in dag.full_edges():
        assert dominates(vs[u], vs[v])
    assert len(dag.full_edges()) == sum(dominates(a, b) for a in vs for b in vs)
    # no reduced edge is implied by a two-step path
    for u, v in dag.reduced_edges():
        assert not any((u, w) in dag.full_edges() and (w, v) in dag.full_edges() for w in range(len(vs)))


def test_descending_r_orders_free_subsets_by_ascending_l():
    rng = random.Random(5)
    for _ in range(30):
        n = 8
        ls = rng.sample(range(1, 100), n)
        rs = rng.sample(range(1, 100), n)
        vs = list(zip(ls, rs))
        for mask in range(1 << n):
            subset = sorted((vs[i] for i in range(n) if mask >> i & 1), key=lambda p: -p[1])
            free = not any(dominates(a, b) for a in subset for b in subset)
            ascending = all(subset[i][0] < subset[i + 1][0] for i in range(len(subset) - 1))
            assert free == ascending


def test_instance_text_round_trip(tmp_path):
    text = "gap 15\n5 6 1\n9 9 1\n5 10 2\n"
    inst = parse_instance(text)
    assert format_instance(inst) == text
    path = tmp_path / "inst.txt"
    path.write_text(format_instance(inst))
    assert parse_instance(path.read_text()) == inst


def test_instance_parse_comments_and_swap():
    inst = parse_instance("# header\ngap 6   # the gap\n\n5 2 1\n")
    assert inst == validate_instance([(2, 5, 1)], 6)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(gains, gains, st.integers(0, 5)), min_size=1, max_size=10), st.integers(0, 10**6))
def test_round_trip_property(raw, gap):
    inst = validate_instance(raw, gap)
    text = format_instance(inst)
    assert parse_instance(text) == inst
    assert format_instance(parse_instance(text)) == text


@pytest.mark.parametrize(
    "text",
    ["5 6 1\n", "gap x\n1 2 1\n", "gap 3\n1 2\n", "gap 3\n"],
)
def test_instance_parse_errors(text):
    with pytest.raises((InstanceFormatError, EmptyInstance)):
        parse_instance(text)


def test_instance_rejects_mismatched_multiplicities():
    with pytest.raises(ValueError):
        Instance((Variable(1, 2),), (1, 1), 3)

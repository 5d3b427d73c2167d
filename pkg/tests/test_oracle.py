import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import prefix_optimum, random_instance, subsets
from knar.errors import InconsistentTables, TooLarge
from knar.instance import KnapsackInstance, effective_capacity, new_instance
from knar.oracle import DpTables, backtrack, brute_force, build_dp, check_tables


def test_build_dp_instance_a(instance_a):
    t = build_dp(instance_a)
    np.testing.assert_array_equal(
        t.value_table, [[0, 0, 0, 0, 0], [0, 0, 0.6, 0.6, 0.6], [0, 0, 0.6, 0.7, 0.7]]
    )
    np.testing.assert_array_equal(t.decision_table, [[0, 0, 1, 1, 1], [0, 0, 0, 1, 1]])


def test_build_dp_instance_a_matches_prefix_enumeration(instance_a):
    t = build_dp(instance_a)
    for i in range(3):
        for c in range(5):
            assert t.value_table[i, c] == pytest.approx(prefix_optimum(instance_a, i, c), abs=1e-12)


def test_build_dp_empty():
    t = build_dp(new_instance([], [], 0))
    assert t.value_table.shape == (1, 1) and t.value_table[0, 0] == 0
    assert t.decision_table.shape == (0, 1)


def test_zero_values_exclude_on_tie():
    inst = new_instance([1, 2, 3], [0.0, 0.0, 0.0], 5)
    t = build_dp(inst)
    assert not t.value_table.any()
    assert not t.decision_table.any()


def test_tie_resolves_to_exclude():
    # item 2 equals item 1; including it at c=1 is not a strict improvement
    inst = new_instance([1, 1], [0.5, 0.5], 1)
    t = build_dp(inst)
    assert t.decision_table[1, 1] == 0
    assert backtrack(inst, t).selected == (1, 0)


def test_backtrack_instance_a(instance_a):
    sol = backtrack(instance_a, build_dp(instance_a))
    assert sol.selected == (0, 1)
    assert sol.total_weight == 3
    assert sol.total_value == 0.7


def test_backtrack_all_zero_decisions(instance_a):
    t = build_dp(instance_a)
    zero = DpTables(t.value_table, np.zeros_like(t.decision_table))
    sol = backtrack(instance_a, zero)
    assert sol.selected == (0, 0) and sol.total_value == 0


def test_backtrack_single_item():
    inst = new_instance([1], [0.5], 1)
    sol = backtrack(inst, build_dp(inst))
    assert sol.selected == (1,) and sol.total_value == 0.5


def test_backtrack_rejects_corrupt_table(instance_a):
    t = build_dp(instance_a)
    bad = np.array(t.decision_table)
    bad[0, 1] = 1  # item 2 leaves c=1, where item 1 (w=2) cannot fit
    with pytest.raises(InconsistentTables):
        backtrack(instance_a, DpTables(t.value_table, bad))


def test_brute_force_examples(instance_a):
    sol = brute_force(instance_a)
    assert sol.selected == (0, 1) and sol.total_value == 0.7
    assert brute_force(new_instance([], [], 0)).total_value == 0
    assert brute_force(new_instance([1, 1], [0.5, 0.5], 1)).selected == (1, 0)


def test_brute_force_guard():
    inst = new_instance([1] * 25, [0.1] * 25, 3)
    with pytest.raises(TooLarge):
        brute_force(inst)


def test_brute_force_tie_break_prefers_low_index_items():
    # {1} and {2,3} both give 1.0
    inst = new_instance([2, 1, 1], [1.0, 0.5, 0.5], 2)
    assert brute_force(inst).selected == (1, 0, 0)
    inst = new_instance([1, 1, 1], [0.5, 0.5, 0.5], 2)
    assert brute_force(inst).selected == (1, 1, 0)


def test_brute_force_matches_python_enumeration(rng):
    for _ in range(30):
        inst = random_instance(rng, n_max=8)
        cap = effective_capacity(inst)
        best = max(
            sum(b * v for b, v in zip(bits, inst.values))
            for bits in subsets(inst.n)
            if sum(b * w for b, w in zip(bits, inst.weights)) <= cap
        )
        assert brute_force(inst).total_value == pytest.approx(best, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dp_agrees_with_brute_force(seed):
    inst = random_instance(np.random.default_rng(seed))
    t = build_dp(inst)
    sol = backtrack(inst, t)
    assert sol.total_weight <= effective_capacity(inst)
    assert sol.total_value == t.value_table[-1, -1]
    assert abs(sol.total_value - brute_force(inst).total_value) <= 1e-9
    check_tables(inst, t)


def test_check_tables_detects_violations(instance_a):
    t = build_dp(instance_a)
    value = np.array(t.value_table)
    value[2, 4] = 0.5
    with pytest.raises(InconsistentTables):
        check_tables(instance_a, DpTables(value, t.decision_table))


def test_large_table_is_fast():
    rng = np.random.default_rng(0)
    inst = KnapsackInstance(
        tuple(int(x) for x in rng.integers(1, 9, size=512)),
        tuple(float(x) for x in rng.uniform(0, 1, size=512)),
        512,
    )
    start = time.perf_counter()
    t = build_dp(inst)
    elapsed = time.perf_counter() - start
    assert t.value_table.shape == (513, 513)
    assert elapsed < 10.0

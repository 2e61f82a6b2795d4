import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridmarket.knapsack import KnapsackItem, select, solve_knapsack
from reference import brute_knapsack

items_st = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 40)), max_size=10)


def _items(pairs):
    return [KnapsackItem(k, v, w) for k, (v, w) in enumerate(pairs)]


def test_empty_instance():
    sol = solve_knapsack([], 100)
    assert sol.chosen == frozenset() and sol.total_value == 0 and sol.total_weight == 0


def test_three_item_example():
    sol = solve_knapsack(_items([(4, 5), (3, 4), (2, 3)]), 7)
    assert sol.chosen == {1, 2} and sol.total_value == 5 and sol.total_weight == 7


def test_zero_capacity_takes_only_weightless_items():
    sol = solve_knapsack(_items([(4, 0), (3, 1), (0, 0)]), 0)
    assert sol.chosen == {0}


def test_ties_go_to_smallest_id_tuple():
    # {0, 3} and {1, 2} are both worth 6; {0, 3} sorts first
    sol = solve_knapsack(_items([(3, 5), (2, 5), (4, 5), (3, 5)]), 10)
    assert sol.total_value == 7 and sol.chosen == {0, 2}
    sol = solve_knapsack(_items([(3, 5), (3, 5), (3, 5)]), 10)
    assert sol.chosen == {0, 1}


def test_ids_are_sorted_before_solving():
    items = [KnapsackItem("b", 3, 5), KnapsackItem("a", 3, 5)]
    assert solve_knapsack(items, 5).chosen == {"a"}


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        solve_knapsack([KnapsackItem(1, 1, 1), KnapsackItem(1, 2, 1)], 5)


def test_negative_entries_rejected():
    with pytest.raises(ValueError):
        KnapsackItem(0, -1, 1)


@given(items_st, st.integers(0, 120))
def test_matches_exhaustive_enumeration(pairs, cap):
    sol = solve_knapsack(_items(pairs), cap)
    value, chosen = brute_knapsack([(k, v, w) for k, (v, w) in enumerate(pairs)], cap)
    assert sol.total_value == value
    assert sol.chosen == chosen
    assert sol.total_weight <= cap


@given(items_st, st.integers(0, 120))
def test_deterministic(pairs, cap):
    assert solve_knapsack(_items(pairs), cap) == solve_knapsack(_items(pairs), cap)


@given(st.lists(st.tuples(st.floats(0, 50, allow_nan=False), st.integers(0, 20)), max_size=8),
       st.integers(0, 60))
def test_float_values(pairs, cap):
    sol = solve_knapsack(_items(pairs), cap)
    value, _ = brute_knapsack([(k, v, w) for k, (v, w) in enumerate(pairs)], cap)
    assert sol.total_value == pytest.approx(value, rel=1e-12, abs=1e-9)


def test_large_values_use_wide_arithmetic():
    v = np.array([2**40, 2**40 + 1, 3], dtype=np.int64)
    w = np.array([5, 6, 1], dtype=np.int64)
    assert list(select(v, w, 6)) == [True, False, True]
    assert list(select(v, w, 11)) == [True, True, False]


def test_items_heavier_than_capacity_are_skipped():
    v = np.array([100, 1], dtype=np.int64)
    w = np.array([10**9, 1], dtype=np.int64)
    assert list(select(v, w, 5)) == [False, True]

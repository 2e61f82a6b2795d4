"""Exact 0-1 knapsack by dynamic programming over integer capacities.

Among equal-value optima the solver returns the lexicographically smallest
chosen id tuple (ids ascending).  The table is filled over item suffixes so
the forward reconstruction can decide, item by item in id order, whether
taking the item keeps the optimum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from numba import njit


@dataclass(frozen=True)
class KnapsackItem:
    item_id: Hashable
    value: float
    weight: int

    def __post_init__(self):
        if self.value < 0 or self.weight < 0:
            raise ValueError(f"negative value/weight in {self}")


@dataclass(frozen=True)
class KnapsackSolution:
    chosen: frozenset
    total_value: float
    total_weight: int


@njit(cache=True, inline="always")
def _relax_row(cur, nxt, wi, vi):
    # cur[w] = max(nxt[w], nxt[w - wi] + vi); written over disjoint slices so
    # the compiler can vectorize the loop
    c = cur.shape[0]
    for w in range(min(wi, c)):
        cur[w] = nxt[w]
    if wi >= c:
        return
    src = nxt[:c - wi]
    top = nxt[wi:]
    dst = cur[wi:]
    for k in range(src.shape[0]):
        a = top[k]
        b = src[k] + vi
        dst[k] = a if a >= b else b


@njit(cache=True)
def _suffix_dp(values, weights, capacity):
    n = values.shape[0]
    table = np.zeros((n + 1, capacity + 1), dtype=values.dtype)
    for i in range(n - 1, -1, -1):
        _relax_row(table[i], table[i + 1], weights[i], values[i])
    chosen = np.zeros(n, dtype=np.bool_)
    w = capacity
    for i in range(n):
        best = table[i, w]
        if best <= 0:
            # the empty remainder is optimal and lexicographically smallest
            break
        wi = weights[i]
        if wi <= w and values[i] + table[i + 1, w - wi] == best:
            chosen[i] = True
            w -= wi
    return chosen


def select(values: np.ndarray, weights: np.ndarray, capacity: int) -> np.ndarray:
    """Boolean mask of the optimal subset; item ids are the array positions.

    ``values`` may be integer or float, ``weights`` must be nonnegative
    integers.  Items heavier than the capacity are skipped.
    """
    values = np.asarray(values)
    weights = np.asarray(weights, dtype=np.int64)
    n = values.shape[0]
    mask = np.zeros(n, dtype=bool)
    if n == 0 or capacity < 0:
        return mask
    fits = weights <= capacity
    idx = np.flatnonzero(fits)
    if idx.size == 0:
        return mask
    w = weights[idx]
    cap = int(min(capacity, w.sum()))
    if values.dtype.kind in "iu":
        v = values[idx].astype(np.int64)
        if v.sum() < 2**31:
            # half the table memory, roughly twice the speed
            v = v.astype(np.int32)
    else:
        v = values[idx].astype(np.float64)
    mask[idx] = _suffix_dp(v, w, cap)
    return mask


def solve_knapsack(items: Sequence[KnapsackItem], capacity: int) -> KnapsackSolution:
    """Maximize total value subject to total weight <= capacity."""
    if capacity < 0:
        raise ValueError("capacity must be nonnegative")
    ordered = sorted(items, key=lambda it: it.item_id)
    ids = [it.item_id for it in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate item ids")
    if not ordered:
        return KnapsackSolution(frozenset(), 0, 0)
    values = [it.value for it in ordered]
    as_int = all(isinstance(v, (int, np.integer)) for v in values)
    values = np.array(values, dtype=np.int64 if as_int else np.float64)
    weights = np.array([int(it.weight) for it in ordered], dtype=np.int64)
    mask = select(values, weights, int(capacity))
    chosen = [it for it, m in zip(ordered, mask) if m]
    total_value = sum(it.value for it in chosen)
    return KnapsackSolution(
        frozenset(it.item_id for it in chosen),
        total_value,
        sum(int(it.weight) for it in chosen),
    )

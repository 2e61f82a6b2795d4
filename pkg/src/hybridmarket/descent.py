"""Round-synchronous payment descent: the loop shared by the matching mechanisms.

Each round every active worker proposes to its candidate tasks at its
current asked payments, every task keeps the knapsack-optimal subset of the
standing proposals, and every rejected worker whose asked payment is still
above cost lowers it by its step (never below cost).  The loop stops at the
first round in which no asked payment changes.

A worker is active in round 1 and in every round that follows a change of
one of its asked payments; only active workers send proposals, which is what
the interaction counts record.  Tasks still see standing proposals from
inactive workers, so outcomes do not depend on the activity bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knapsack import select
from .model import PROB_SCALE


class RoundCapExceeded(RuntimeError):
    pass


@dataclass
class DescentOutcome:
    accepted: np.ndarray  # bool [T, W]
    prices: np.ndarray  # int64 [T, W], final asked payments (money units)
    rounds: int
    interactions: np.ndarray  # int64 [T, W]
    history: list | None = None


def payment_descent(
    values: np.ndarray,
    weight_scale: np.ndarray,
    capacity: np.ndarray,
    cost: np.ndarray,
    desire: np.ndarray,
    step: np.ndarray,
    eligible: np.ndarray,
    max_rounds: int,
    record_history: bool = False,
) -> DescentOutcome:
    """Run the descent over a task x worker grid.

    ``values[i, j]`` is what task i gains from worker j; the knapsack weight
    of a proposal is ``ceil(weight_scale[j] * price / PROB_SCALE)`` (the
    expected payment in the futures market, the payment itself when
    ``weight_scale == PROB_SCALE``).  ``eligible`` masks the pairs that may
    ever trade.
    """
    n_t, n_w = values.shape
    eligible = np.asarray(eligible, dtype=bool)
    price = np.where(eligible, desire, 0).astype(np.int64)
    floor = np.where(eligible, cost, 0).astype(np.int64)
    step = np.asarray(step, dtype=np.int64)
    scale = np.asarray(weight_scale, dtype=np.int64)
    accepted = np.zeros((n_t, n_w), dtype=bool)
    interactions = np.zeros((n_t, n_w), dtype=np.int64)
    active = np.ones(n_w, dtype=bool)
    dirty = np.ones(n_t, dtype=bool)
    history = [price.copy()] if record_history else None

    rounds = 0
    while True:
        rounds += 1
        if rounds > max_rounds:
            raise RoundCapExceeded(f"no convergence within {max_rounds} rounds")
        cand = eligible & (price >= floor)
        interactions += cand & active[None, :]
        for i in np.flatnonzero(dirty):
            cols = np.flatnonzero(cand[i])
            row = np.zeros(n_w, dtype=bool)
            if cols.size:
                weights = (scale[cols] * price[i, cols] + PROB_SCALE - 1) // PROB_SCALE
                row[cols] = select(values[i, cols], weights, int(capacity[i]))
            accepted[i] = row
        lower = cand & ~accepted & (price > floor)
        new_price = np.where(lower, np.maximum(price - step[None, :], floor), price)
        changed = new_price != price
        if not changed.any():
            break
        price = new_price
        if record_history:
            history.append(price.copy())
        active = changed.any(axis=0)
        dirty = changed.any(axis=1)

    return DescentOutcome(accepted & eligible, price, rounds, interactions, history)

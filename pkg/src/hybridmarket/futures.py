"""Long-term contracting with overbooking, payment descent and risk screening."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .descent import payment_descent
from .knapsack import select
from .model import (
    PROB_SCALE,
    QUALITY_SCALE,
    SetTooLarge,
    ValidatedMarket,
    _task_index,
    _worker_index,
    exact,
    expected_weights,
)

MAX_EXACT_WORKERS = 20


@dataclass
class FuturesOutcome:
    contracts_by_task: dict[int, frozenset[int]]
    contracts_by_worker: dict[int, frozenset[int]]
    locked_payments: dict[tuple[int, int], float]
    risk_ok: dict[int, bool]
    rounds_used: int
    interaction_counts: np.ndarray
    # asked-payment matrix (money units) after every round, when requested
    price_history: list | None = field(default=None, repr=False)

    def contract_mask(self, n_tasks: int, n_workers: int) -> np.ndarray:
        mask = np.zeros((n_tasks, n_workers), dtype=bool)
        for i, ws in self.contracts_by_task.items():
            mask[i, list(ws)] = True
        return mask


def candidate_tasks(worker, current_payments, vm: ValidatedMarket) -> frozenset[int]:
    """Tasks whose asked payment (currency, indexed by task) still covers the worker's cost."""
    j = _worker_index(worker)
    if isinstance(current_payments, Mapping):
        items = current_payments.items()
    else:
        items = enumerate(current_payments)
    return frozenset(i for i, p in items if vm.units(p) >= vm.cost[i, j])


def reduce_payment(current, step, cost):
    return max(current - step, cost)


def task_select_round(task, proposals: Iterable, vm: ValidatedMarket) -> frozenset[int]:
    """Knapsack acceptance over ``(worker, payment[, quality])`` proposals.

    Value is a_j * q_ij, weight the expected payment a_j * p rounded up to a
    money unit, capacity the overbooked budget.
    """
    i = _task_index(task)
    proposals = list(proposals)
    if not proposals:
        return frozenset()
    ids, values, weights = [], [], []
    for prop in proposals:
        j = _worker_index(prop[0])
        q_units = vm.quality[i, j] if len(prop) < 3 else round(prop[2] * QUALITY_SCALE)
        ids.append(j)
        values.append(int(vm.prob[j]) * int(q_units))
        weights.append(int(expected_weights(vm.prob[j], vm.units(prop[1]))))
    order = np.argsort(ids, kind="stable")
    mask = select(np.array(values, dtype=np.int64)[order], np.array(weights, dtype=np.int64)[order],
                  int(vm.overbooked_capacity()[i]))
    return frozenset(int(ids[k]) for k, m in zip(order, mask) if m)


def _quality_threshold(vm: ValidatedMarket, i: int) -> Fraction:
    """lambda_1 * Q_i in quality units."""
    return exact(vm.market.tasks[i].risk_scale) * int(vm.desired_quality[i])


def risk_surrogate(task, worker_set: Iterable, vm: ValidatedMarket, risk_tolerance=None) -> bool:
    """Sum a_j q_ij >= (1 - lambda_2) * lambda_1 * Q_i, evaluated exactly."""
    i = _task_index(task)
    lam2 = exact(vm.config.risk_tolerance if risk_tolerance is None else risk_tolerance)
    lhs = Fraction(sum(int(vm.prob[j]) * int(vm.quality[i, j]) for j in map(_worker_index, worker_set)),
                   PROB_SCALE)
    return lhs >= (1 - lam2) * _quality_threshold(vm, i)


def _outcome_distribution(i: int, workers: list[int], vm: ValidatedMarket):
    if len(workers) > MAX_EXACT_WORKERS:
        raise SetTooLarge(f"{len(workers)} workers; exact enumeration is limited to {MAX_EXACT_WORKERS}")
    sums = np.zeros(1, dtype=np.int64)
    probs = np.ones(1)
    for j in workers:
        a = int(vm.prob[j]) / PROB_SCALE
        sums = np.concatenate([sums, sums + vm.quality[i, j]])
        probs = np.concatenate([probs * (1 - a), probs * a])
    return sums, probs


def risk_exact(task, worker_set: Iterable, vm: ValidatedMarket) -> float:
    """Pr{sum alpha_j q_ij <= lambda_1 Q_i}, by enumerating all show-up outcomes."""
    i = _task_index(task)
    sums, probs = _outcome_distribution(i, sorted(map(_worker_index, worker_set)), vm)
    limit = _quality_threshold(vm, i)
    return float(probs[sums <= math.floor(limit)].sum())


def success_probability(task, worker_set: Iterable, vm: ValidatedMarket) -> float:
    """Pr{sum alpha_j q_ij >= lambda_1 Q_i}, by the same enumeration."""
    i = _task_index(task)
    sums, probs = _outcome_distribution(i, sorted(map(_worker_index, worker_set)), vm)
    limit = _quality_threshold(vm, i)
    return float(probs[sums >= math.ceil(limit)].sum())


def run_oia3m(vm: ValidatedMarket, record_history: bool = False) -> FuturesOutcome:
    n_t, n_w = vm.n_tasks, vm.n_workers
    res = payment_descent(
        values=vm.prob[None, :] * vm.quality,
        weight_scale=vm.prob,
        capacity=vm.overbooked_capacity(),
        cost=vm.cost,
        desire=vm.desire,
        step=vm.step,
        eligible=np.ones((n_t, n_w), dtype=bool),
        max_rounds=vm.config.max_rounds_cap,
        record_history=record_history,
    )
    by_task: dict[int, frozenset[int]] = {}
    risk_ok: dict[int, bool] = {}
    for i in range(n_t):
        chosen = frozenset(int(j) for j in np.flatnonzero(res.accepted[i]))
        risk_ok[i] = risk_surrogate(i, chosen, vm)
        # a task failing the screen leaves the futures market with its whole budget
        by_task[i] = chosen if risk_ok[i] else frozenset()
    by_worker = {j: frozenset(i for i in range(n_t) if j in by_task[i]) for j in range(n_w)}
    locked = {(i, j): vm.money(int(res.prices[i, j])) for i in range(n_t) for j in sorted(by_task[i])}
    return FuturesOutcome(by_task, by_worker, locked, risk_ok, res.rounds, res.interactions,
                          res.history)

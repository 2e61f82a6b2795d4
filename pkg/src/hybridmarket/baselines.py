"""Comparison mechanisms: pure spot, pure futures, greedy quality, random, uniform-price negotiation.

The greedy and random baselines take workers in their order while the budget
allows and skip (rather than stop at) a worker that does not fit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descent import payment_descent
from .futures import FuturesOutcome, run_oia3m
from .knapsack import select
from .model import PROB_SCALE, ParticipationDraw, ValidatedMarket


@dataclass
class BaselineOutcome:
    assignment: dict[int, frozenset[int]]
    payments: dict[tuple[int, int], float]
    payment_units: dict[tuple[int, int], int]
    interaction_counts: np.ndarray
    rounds: int

    @property
    def served(self) -> dict[tuple[int, int], int]:
        return self.payment_units


def _outcome(vm: ValidatedMarket, units: dict[tuple[int, int], int], counts, rounds) -> BaselineOutcome:
    units = dict(sorted(units.items()))
    assignment = {i: frozenset(j for (t, j) in units if t == i) for i in range(vm.n_tasks)}
    return BaselineOutcome(assignment, {k: vm.money(u) for k, u in units.items()}, units, counts, rounds)


def run_conventional_s(vm: ValidatedMarket, draw: ParticipationDraw) -> BaselineOutcome:
    """Many-to-many descent at transaction time over the present workers, budget B_i."""
    n_t, n_w = vm.n_tasks, vm.n_workers
    mask = draw.mask
    if not mask.any():
        return _outcome(vm, {}, np.zeros((n_t, n_w), dtype=np.int64), 0)
    res = payment_descent(
        values=vm.quality,
        weight_scale=np.full(n_w, PROB_SCALE, dtype=np.int64),
        capacity=vm.budget,
        cost=vm.cost,
        desire=vm.desire,
        step=vm.step,
        eligible=np.broadcast_to(mask, (n_t, n_w)),
        max_rounds=vm.config.max_rounds_cap,
    )
    units = {(int(i), int(j)): int(res.prices[i, j]) for i, j in zip(*np.nonzero(res.accepted))}
    return _outcome(vm, units, res.interactions, res.rounds)


def run_conventional_f(vm: ValidatedMarket, draw: ParticipationDraw,
                       outcome: FuturesOutcome | None = None) -> BaselineOutcome:
    """Settle standing contracts as they are; an over-budget task pays in worker-id order until it runs out."""
    outcome = outcome if outcome is not None else run_oia3m(vm)
    present = draw.present
    units = {}
    for i in range(vm.n_tasks):
        left = int(vm.budget[i])
        for j in sorted(outcome.contracts_by_task.get(i, ())):
            if j not in present:
                continue
            p = vm.units(outcome.locked_payments[i, j])
            if p > left:
                break
            units[i, j] = p
            left -= p
    return _outcome(vm, units, np.zeros((vm.n_tasks, vm.n_workers), dtype=np.int64), 0)


def _greedy(vm: ValidatedMarket, orders: list[list[int]]) -> BaselineOutcome:
    counts = np.zeros((vm.n_tasks, vm.n_workers), dtype=np.int64)
    units = {}
    for i, order in enumerate(orders):
        left = int(vm.budget[i])
        for j in order:
            counts[i, j] = 1
            p = int(vm.desire[i, j])
            if p <= left:
                units[i, j] = p
                left -= p
    return _outcome(vm, units, counts, 1 if any(orders) else 0)


def run_quality_p(vm: ValidatedMarket, draw: ParticipationDraw) -> BaselineOutcome:
    """Best quality first, ties by worker id, each at its desired payment."""
    present = sorted(draw.present)
    orders = [sorted(present, key=lambda j: (-int(vm.quality[i, j]), j)) for i in range(vm.n_tasks)]
    return _greedy(vm, orders)


def run_random_m(vm: ValidatedMarket, draw: ParticipationDraw, rng: np.random.Generator) -> BaselineOutcome:
    """Each task shuffles the present workers with its own child stream."""
    present = np.array(sorted(draw.present), dtype=np.int64)
    streams = rng.spawn(vm.n_tasks)
    orders = [[int(j) for j in s.permutation(present)] for s in streams]
    return _greedy(vm, orders)


def _negotiate_task(vm: ValidatedMarket, i: int, present: np.ndarray, counts: np.ndarray):
    if present.size == 0:
        return {}, 0
    cost, desire = vm.cost[i, present], vm.desire[i, present]
    quality = vm.quality[i, present]
    step = int(vm.step.min())
    price = int(desire.max())
    budget = int(vm.budget[i])
    previous = None
    rounds = 0
    while True:
        rounds += 1
        part = (cost <= price) & (price <= desire)
        idx = np.flatnonzero(part)
        counts[i, present[idx]] += 1
        chosen = np.zeros(present.size, dtype=bool)
        if idx.size:
            chosen[idx] = select(quality[idx], np.full(idx.size, price, dtype=np.int64), budget)
        chosen_set = frozenset(int(present[k]) for k in np.flatnonzero(chosen))
        # settled: every worker willing at this price takes part and none is turned away
        settled = idx.size > 0 and chosen[idx].all() and not ((cost <= price) & (desire < price)).any()
        if settled or chosen_set == previous or not (cost <= price - step).any():
            return {(i, j): price for j in chosen_set}, rounds
        previous = chosen_set
        price -= step


def run_negotiation(vm: ValidatedMarket, draw: ParticipationDraw) -> BaselineOutcome:
    """Per task, one uniform price descending from the highest desired payment.

    Workers take part while cost <= price <= desired payment; the task keeps
    the knapsack-best participants at that price.  Negotiation stops when
    every worker covering its cost at the price takes part and is accepted,
    when the selection is the same as in the previous round, or when no
    worker could take part below the current price.
    """
    counts = np.zeros((vm.n_tasks, vm.n_workers), dtype=np.int64)
    present = np.array(sorted(draw.present), dtype=np.int64)
    units, rounds = {}, 0
    for i in range(vm.n_tasks):
        u, r = _negotiate_task(vm, i, present, counts)
        units.update(u)
        rounds = max(rounds, r)
    return _outcome(vm, units, counts, rounds)

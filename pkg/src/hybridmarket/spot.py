"""Transaction time: realize show-ups, evict over-budget tasks, recruit with surplus budgets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .descent import payment_descent
from .futures import FuturesOutcome
from .model import PROB_SCALE, QUALITY_SCALE, ParticipationDraw, ValidatedMarket


class SettlementConflict(ValueError):
    pass


@dataclass(frozen=True)
class RealizedPartition:
    over_budget_tasks: frozenset[int]
    surplus_tasks: frozenset[int]
    present_long_term: dict[int, frozenset[int]]
    spot_pool: frozenset[int]
    remaining_budget: dict[int, float]
    # realized contract outlay and remaining budget, money units
    contract_outlay_units: dict[int, int] = field(default_factory=dict)
    remaining_units: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class OmomResult:
    task: int
    retained: frozenset[int]
    payment_units: dict[int, int]
    rounds: int
    interactions: dict[int, int]


@dataclass(frozen=True)
class O3mResult:
    recruited: dict[int, frozenset[int]]
    payment_units: dict[tuple[int, int], int]
    rounds: int
    interactions: np.ndarray


@dataclass
class TransactionResult:
    retained: dict[int, frozenset[int]]
    recruited: dict[int, frozenset[int]]
    spot_payments: dict[tuple[int, int], float]
    payments: dict[tuple[int, int], float]
    payment_units: dict[tuple[int, int], int]
    realized_quality: dict[int, float]
    worker_utilities: dict[int, float]
    task_outlay: dict[int, float]
    interaction_counts: np.ndarray
    omom_rounds: dict[int, int]
    o3m_rounds: int

    @property
    def served(self) -> dict[tuple[int, int], int]:
        return self.payment_units


def _locked_units(outcome: FuturesOutcome, vm: ValidatedMarket) -> dict[tuple[int, int], int]:
    return {k: vm.units(p) for k, p in outcome.locked_payments.items()}


def realize_transaction(outcome: FuturesOutcome, draw: ParticipationDraw,
                        vm: ValidatedMarket) -> RealizedPartition:
    if len(draw.alpha) != vm.n_workers:
        raise ValueError(f"draw has {len(draw.alpha)} entries for {vm.n_workers} workers")
    locked = _locked_units(outcome, vm)
    present = draw.present
    over, surplus = set(), set()
    present_lt, outlay, remaining = {}, {}, {}
    for i in range(vm.n_tasks):
        shown = frozenset(j for j in outcome.contracts_by_task.get(i, ()) if j in present)
        present_lt[i] = shown
        spend = sum(locked[i, j] for j in shown)
        outlay[i] = spend
        b = int(vm.budget[i])
        if spend > b:
            over.add(i)
        elif spend < b:
            surplus.add(i)
            remaining[i] = b - spend
    return RealizedPartition(
        over_budget_tasks=frozenset(over),
        surplus_tasks=frozenset(surplus),
        present_long_term=present_lt,
        spot_pool=frozenset(present),
        remaining_budget={i: vm.money(u) for i, u in remaining.items()},
        contract_outlay_units=outlay,
        remaining_units=remaining,
    )


def run_omom(task: int, present, vm: ValidatedMarket) -> OmomResult:
    """Many-to-one descent for one over-budget task over its present contract workers."""
    i = int(task)
    members = sorted(present)
    if not members:
        return OmomResult(i, frozenset(), {}, 0, {})
    cols = np.array(members)
    res = payment_descent(
        values=vm.quality[i:i + 1, cols],
        weight_scale=np.full(len(cols), PROB_SCALE, dtype=np.int64),
        capacity=vm.budget[i:i + 1],
        cost=vm.cost[i:i + 1, cols],
        desire=vm.desire[i:i + 1, cols],
        step=vm.step[cols],
        eligible=np.ones((1, len(cols)), dtype=bool),
        max_rounds=vm.config.max_rounds_cap,
    )
    kept = [members[k] for k in np.flatnonzero(res.accepted[0])]
    return OmomResult(
        task=i,
        retained=frozenset(kept),
        payment_units={j: int(res.prices[0, members.index(j)]) for j in kept},
        rounds=res.rounds,
        interactions={members[k]: int(n) for k, n in enumerate(res.interactions[0]) if n},
    )


def run_o3m(surplus_tasks, spot_pool, remaining_units: dict[int, int], outcome: FuturesOutcome,
            vm: ValidatedMarket) -> O3mResult:
    """Many-to-many descent recruiting present non-contract workers with leftover budgets."""
    n_t, n_w = vm.n_tasks, vm.n_workers
    eligible = np.zeros((n_t, n_w), dtype=bool)
    pool = sorted(spot_pool)
    for i in surplus_tasks:
        eligible[i, pool] = True
        contracted = list(outcome.contracts_by_task.get(i, ()))
        eligible[i, contracted] = False
    capacity = np.zeros(n_t, dtype=np.int64)
    for i, u in remaining_units.items():
        capacity[i] = u
    if not eligible.any():
        return O3mResult({i: frozenset() for i in surplus_tasks}, {}, 0, np.zeros((n_t, n_w), dtype=np.int64))
    res = payment_descent(
        values=vm.quality,
        weight_scale=np.full(n_w, PROB_SCALE, dtype=np.int64),
        capacity=capacity,
        cost=vm.cost,
        desire=vm.desire,
        step=vm.step,
        eligible=eligible,
        max_rounds=vm.config.max_rounds_cap,
    )
    recruited = {i: frozenset(int(j) for j in np.flatnonzero(res.accepted[i])) for i in surplus_tasks}
    units = {(i, j): int(res.prices[i, j]) for i in sorted(recruited) for j in sorted(recruited[i])}
    return O3mResult(recruited, units, res.rounds, res.interactions)


def settle(outcome: FuturesOutcome, partition: RealizedPartition, omom: dict[int, OmomResult],
           o3m: O3mResult, vm: ValidatedMarket) -> TransactionResult:
    locked = _locked_units(outcome, vm)
    units: dict[tuple[int, int], int] = {}
    spot_units: dict[tuple[int, int], int] = {}
    counts = np.zeros((vm.n_tasks, vm.n_workers), dtype=np.int64)

    for i in range(vm.n_tasks):
        if i in partition.over_budget_tasks:
            r = omom.get(i)
            if r is None:
                raise SettlementConflict(f"over-budget task {i} has no eviction result")
            if not r.retained <= partition.present_long_term[i]:
                raise SettlementConflict(f"task {i} retained workers outside its present contracts")
            for j in r.retained:
                spot_units[i, j] = r.payment_units[j]
            for j, n in r.interactions.items():
                counts[i, j] += n
        else:
            for j in partition.present_long_term[i]:
                units[i, j] = locked[i, j]

    for i, ws in o3m.recruited.items():
        if i not in partition.surplus_tasks and ws:
            raise SettlementConflict(f"task {i} recruited without surplus budget")
        if ws & outcome.contracts_by_task.get(i, frozenset()):
            raise SettlementConflict(f"task {i} recruited its own contract workers")
        if not ws <= partition.spot_pool:
            raise SettlementConflict(f"task {i} recruited absent workers")
    for key, u in o3m.payment_units.items():
        if key in units:
            raise SettlementConflict(f"pair {key} paid twice")
        spot_units[key] = u
    counts += o3m.interactions
    units.update(spot_units)

    outlay = {i: 0 for i in range(vm.n_tasks)}
    quality = {i: 0 for i in range(vm.n_tasks)}
    utility = {j: 0 for j in range(vm.n_workers)}
    for (i, j), u in units.items():
        outlay[i] += u
        quality[i] += int(vm.quality[i, j])
        utility[j] += u - int(vm.cost[i, j])

    return TransactionResult(
        retained={i: omom[i].retained for i in sorted(partition.over_budget_tasks)},
        recruited={i: o3m.recruited.get(i, frozenset()) for i in sorted(partition.surplus_tasks)},
        spot_payments={k: vm.money(u) for k, u in sorted(spot_units.items())},
        payments={k: vm.money(u) for k, u in sorted(units.items())},
        payment_units=dict(sorted(units.items())),
        realized_quality={i: q / QUALITY_SCALE for i, q in quality.items()},
        worker_utilities={j: vm.money(u) for j, u in utility.items()},
        task_outlay={i: vm.money(u) for i, u in outlay.items()},
        interaction_counts=counts,
        omom_rounds={i: r.rounds for i, r in omom.items()},
        o3m_rounds=o3m.rounds,
    )


def run_transaction(outcome: FuturesOutcome, draw: ParticipationDraw, vm: ValidatedMarket) -> TransactionResult:
    """Realize one draw and run eviction, recruitment and settlement."""
    part = realize_transaction(outcome, draw, vm)
    omom = {i: run_omom(i, part.present_long_term[i], vm) for i in sorted(part.over_budget_tasks)}
    o3m = run_o3m(part.surplus_tasks, part.spot_pool, part.remaining_units, outcome, vm)
    return settle(outcome, part, omom, o3m, vm)

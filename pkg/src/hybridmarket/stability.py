"""Exhaustive search for blocking deviations, plus individual-rationality checks.

A deviation pairs one outside worker with one task.  The worker side is
additive (taking on an extra task at a price above cost strictly raises its
utility), so a coalition over a task set blocks exactly when one of its
tasks blocks with the worker alone, and singleton task sets are a complete
search.  The deviating worker's payment ranges over the step grid
``{c, c + step, ...} <= desired payment``.  A task's value does not depend
on that payment and its budget use is nondecreasing in it, so only the
cheapest grid payment acceptable to the worker has to be tried.  Budgets are
checked with the same fixed-point rounding as the mechanisms.

Witnesses are re-checked by :func:`verify_witness` with exact rational
arithmetic that shares no code with the search.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .futures import FuturesOutcome, risk_surrogate, run_oia3m
from .model import PROB_SCALE, ValidatedMarket, exact, expected_weights
from .spot import RealizedPartition, TransactionResult, realize_transaction, run_transaction


class BoundsExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SearchBounds:
    max_tasks: int = 8
    max_workers: int = 10
    max_evict: int = 4


@dataclass(frozen=True)
class BlockingWitness:
    mechanism: str  # "futures" | "omom" | "o3m"
    kind: int  # 1: evict and replace, 2: pure addition
    worker: int
    tasks: tuple[int, ...]
    evicted: tuple[int, ...]
    payment: float

    def __str__(self) -> str:
        ev = f", evicting {list(self.evicted)}" if self.evicted else ""
        return (f"{self.mechanism} type-{self.kind}: worker {self.worker} with task(s) {list(self.tasks)}"
                f" at payment {self.payment:g}{ev}")


@dataclass
class StabilityReport:
    individually_rational: bool
    ir_violations: list[str] = field(default_factory=list)
    type1_blocking: BlockingWitness | None = None
    type2_blocking: BlockingWitness | None = None

    @property
    def certified_strongly_stable(self) -> bool:
        return self.individually_rational and self.type1_blocking is None and self.type2_blocking is None


def _check_bounds(vm: ValidatedMarket, bounds: SearchBounds) -> None:
    if vm.n_tasks > bounds.max_tasks or vm.n_workers > bounds.max_workers:
        raise BoundsExceeded(f"{vm.n_tasks} tasks x {vm.n_workers} workers exceeds search bounds "
                             f"{bounds.max_tasks} x {bounds.max_workers}")


def _cheapest_price(vm: ValidatedMarket, i: int, j: int, strict: bool) -> int | None:
    """Lowest grid payment the worker accepts: above cost if ``strict``, else cost itself."""
    p = int(vm.cost[i, j]) + (int(vm.step[j]) if strict else 0)
    return p if p <= int(vm.desire[i, j]) else None


def _search_task(current, weights, values, new_weight, new_value, capacity, kinds, max_evict):
    """First (kind, evicted) letting the newcomer in with strictly more value, or None."""
    members = sorted(current)
    used = sum(weights[k] for k in members)
    base = sum(values[k] for k in members)
    if 1 in kinds:
        for r in range(1, min(max_evict, len(members)) + 1):
            for ev in itertools.combinations(members, r):
                w = used - sum(weights[k] for k in ev) + new_weight
                v = base - sum(values[k] for k in ev) + new_value
                if w <= capacity and v > base:
                    return 1, ev
    if 2 in kinds and used + new_weight <= capacity and base + new_value > base:
        return 2, ()
    return None


def find_blocking_coalition_futures(outcome: FuturesOutcome, vm: ValidatedMarket, kind: int,
                                    bounds: SearchBounds = SearchBounds()) -> BlockingWitness | None:
    _check_bounds(vm, bounds)
    cap = vm.overbooked_capacity()
    for j in range(vm.n_workers):
        for i in range(vm.n_tasks):
            current = outcome.contracts_by_task.get(i, frozenset())
            # tasks that failed risk screening do not trade in this market
            if not outcome.risk_ok.get(i, True) or j in current:
                continue
            p = _cheapest_price(vm, i, j, strict=True)
            if p is None:
                continue
            weights = {k: int(expected_weights(vm.prob[k], vm.units(outcome.locked_payments[i, k])))
                       for k in current}
            values = {k: int(vm.prob[k]) * int(vm.quality[i, k]) for k in current}
            hit = _search_task(current, weights, values,
                               int(expected_weights(vm.prob[j], p)), int(vm.prob[j]) * int(vm.quality[i, j]),
                               int(cap[i]), (kind,), bounds.max_evict)
            if hit:
                return BlockingWitness("futures", hit[0], j, (i,), hit[1], vm.money(p))
    return None


def find_blocking_pair_omom(result: TransactionResult, partition: RealizedPartition, vm: ValidatedMarket,
                            bounds: SearchBounds = SearchBounds(), kinds=(1, 2)) -> BlockingWitness | None:
    _check_bounds(vm, bounds)
    for i in sorted(partition.over_budget_tasks):
        kept = result.retained.get(i, frozenset())
        for j in sorted(partition.present_long_term[i] - kept):
            # the task alone decides; the worker accepts anything down to its cost
            p = _cheapest_price(vm, i, j, strict=False)
            weights = {k: result.payment_units[i, k] for k in kept}
            values = {k: int(vm.quality[i, k]) for k in kept}
            hit = _search_task(kept, weights, values, p, int(vm.quality[i, j]),
                               int(vm.budget[i]), kinds, bounds.max_evict)
            if hit:
                return BlockingWitness("omom", hit[0], j, (i,), hit[1], vm.money(p))
    return None


def find_blocking_coalition_o3m(result: TransactionResult, partition: RealizedPartition,
                                outcome: FuturesOutcome, vm: ValidatedMarket,
                                bounds: SearchBounds = SearchBounds(), kinds=(1, 2)) -> BlockingWitness | None:
    _check_bounds(vm, bounds)
    for j in sorted(partition.spot_pool):
        for i in sorted(partition.surplus_tasks):
            hired = result.recruited.get(i, frozenset())
            if j in hired or j in outcome.contracts_by_task.get(i, frozenset()):
                continue
            p = _cheapest_price(vm, i, j, strict=True)
            if p is None:
                continue
            weights = {k: result.payment_units[i, k] for k in hired}
            values = {k: int(vm.quality[i, k]) for k in hired}
            hit = _search_task(hired, weights, values, p, int(vm.quality[i, j]),
                               int(partition.remaining_units[i]), kinds, bounds.max_evict)
            if hit:
                return BlockingWitness("o3m", hit[0], j, (i,), hit[1], vm.money(p))
    return None


def verify_witness(w: BlockingWitness, vm: ValidatedMarket, outcome: FuturesOutcome,
                   result: TransactionResult | None = None,
                   partition: RealizedPartition | None = None) -> bool:
    """Re-check a witness's inequalities in exact rationals."""
    (i,) = w.tasks
    j = w.worker
    pair = vm.market.pairs[i][j]
    price = exact(w.payment)
    a = {k: exact(wk.participation_prob) for k, wk in enumerate(vm.market.workers)}
    q = {k: exact(vm.market.pairs[i][k].quality) for k in range(vm.n_workers)}
    budget = exact(vm.market.tasks[i].budget)
    on_grid = (price - exact(pair.cost)) / exact(vm.step[j] / vm.money_scale)
    if price > exact(pair.desired_payment) or price < exact(pair.cost) or on_grid.denominator != 1:
        return False

    if w.mechanism == "futures":
        current = outcome.contracts_by_task[i]
        paid = {k: exact(outcome.locked_payments[i, k]) for k in current}
        worker_gain = a[j] * (price - exact(pair.cost)) > 0
        value = lambda s: sum(a[k] * q[k] for k in s)  # noqa: E731
        spend = lambda s: sum(a[k] * (price if k == j else paid[k]) for k in s)  # noqa: E731
        limit = (1 + exact(vm.config.overbooking_rate)) * budget
    elif w.mechanism == "omom":
        current = result.retained[i]
        paid = {k: exact(result.payments[i, k]) for k in current}
        worker_gain = j in partition.present_long_term[i]
        value = lambda s: sum(q[k] for k in s)  # noqa: E731
        spend = lambda s: sum(price if k == j else paid[k] for k in s)  # noqa: E731
        limit = budget
    else:
        current = result.recruited[i]
        paid = {k: exact(result.payments[i, k]) for k in current}
        worker_gain = price > exact(pair.cost) and j in partition.spot_pool
        value = lambda s: sum(q[k] for k in s)  # noqa: E731
        spend = lambda s: sum(price if k == j else paid[k] for k in s)  # noqa: E731
        limit = exact(partition.remaining_budget[i])

    if j in current or not worker_gain:
        return False
    evicted = set(w.evicted)
    if (w.kind == 1) != bool(evicted) or not evicted <= current:
        return False
    new = (current - evicted) | {j}
    return spend(new) <= limit and value(new) > value(current)


def check_ir_futures(outcome: FuturesOutcome, vm: ValidatedMarket) -> list[str]:
    """Violations of the overbooked budget, the risk screen, payment bounds and worker utility."""
    out = []
    factor = 1 + exact(vm.config.overbooking_rate)
    for i, ws in outcome.contracts_by_task.items():
        for j in ws:
            if i not in outcome.contracts_by_worker.get(j, ()):
                out.append(f"task {i} lists worker {j} but not vice versa")
        if not ws:
            continue
        spend = sum(Fraction(int(vm.prob[j]), PROB_SCALE) * vm.units(outcome.locked_payments[i, j]) for j in ws)
        if spend > factor * int(vm.budget[i]):
            out.append(f"task {i}: expected outlay {float(spend) / vm.money_scale:g} exceeds overbooked budget")
        if not risk_surrogate(i, ws, vm):
            out.append(f"task {i}: contracted set fails the risk screen")
    for j, ts in outcome.contracts_by_worker.items():
        gain = 0
        for i in ts:
            if j not in outcome.contracts_by_task.get(i, ()):
                out.append(f"worker {j} lists task {i} but not vice versa")
                continue
            p = vm.units(outcome.locked_payments[i, j])
            if not vm.cost[i, j] <= p <= vm.desire[i, j]:
                out.append(f"pair ({i}, {j}): payment {vm.money(p):g} outside [cost, desired]")
            gain += int(vm.prob[j]) * (p - int(vm.cost[i, j]))
        if gain < 0:
            out.append(f"worker {j}: negative expected utility")
    return out


def check_ir_settlement(result: TransactionResult, outcome: FuturesOutcome, vm: ValidatedMarket) -> list[str]:
    """Violations of the practical budget, payment bounds and recruitment eligibility."""
    out = []
    spend = np.zeros(vm.n_tasks, dtype=np.int64)
    for (i, j), p in result.payment_units.items():
        spend[i] += p
        if not vm.cost[i, j] <= p <= vm.desire[i, j]:
            out.append(f"pair ({i}, {j}): payment {vm.money(p):g} outside [cost, desired]")
    for i in np.flatnonzero(spend > vm.budget):
        out.append(f"task {i}: outlay {vm.money(int(spend[i])):g} exceeds budget")
    for i, ws in result.recruited.items():
        if ws & outcome.contracts_by_task.get(i, frozenset()):
            out.append(f"task {i}: recruited its own contract workers on the spot")
    return out


def certify_futures(outcome: FuturesOutcome, vm: ValidatedMarket,
                    bounds: SearchBounds = SearchBounds()) -> StabilityReport:
    ir = check_ir_futures(outcome, vm)
    return StabilityReport(not ir, ir, find_blocking_coalition_futures(outcome, vm, 1, bounds),
                           find_blocking_coalition_futures(outcome, vm, 2, bounds))


def certify_transaction(result: TransactionResult, partition: RealizedPartition, outcome: FuturesOutcome,
                        vm: ValidatedMarket, bounds: SearchBounds = SearchBounds()) -> dict[str, StabilityReport]:
    ir = check_ir_settlement(result, outcome, vm)
    reports = {}
    for name, search in (
        ("omom", lambda k: find_blocking_pair_omom(result, partition, vm, bounds, (k,))),
        ("o3m", lambda k: find_blocking_coalition_o3m(result, partition, outcome, vm, bounds, (k,))),
    ):
        reports[name] = StabilityReport(not ir, list(ir), search(1), search(2))
    return reports


@dataclass
class CertificationResult:
    instances: int
    transactions: int
    findings: list[str]

    @property
    def ok(self) -> bool:
        return not self.findings


def run_certification(n_instances: int, max_tasks: int = 6, max_workers: int = 10, seed: int = 0,
                      spec=None, bounds: SearchBounds | None = None) -> CertificationResult:
    """Random small markets through all three mechanisms and the searches above.

    Each instance is settled twice: once with everybody present (which
    exercises eviction) and once with a random draw.
    """
    from dataclasses import replace

    from .harness import ScenarioSpec, generate_market
    from .model import MarketConfig, draw_participation, full_participation, validate_market

    base = spec or ScenarioSpec(n_tasks=1, n_workers=1)
    bounds = bounds or SearchBounds(max_tasks=max(max_tasks, 1), max_workers=max(max_workers, 1))
    root = np.random.SeedSequence(seed)
    findings: list[str] = []
    transactions = 0
    for k, child in enumerate(root.spawn(n_instances)):
        rng = np.random.default_rng(child)
        sub = replace(base, n_tasks=int(rng.integers(1, max_tasks + 1)),
                      n_workers=int(rng.integers(1, max_workers + 1)))
        vm = validate_market(generate_market(sub, int(rng.integers(2**63))), MarketConfig(
            overbooking_rate=sub.overbooking_rate, payment_step=sub.payment_step,
            risk_tolerance=sub.risk_tolerance, money_scale=sub.money_scale))
        outcome = run_oia3m(vm)
        rep = certify_futures(outcome, vm, bounds)
        findings += [f"instance {k}: {v}" for v in rep.ir_violations]
        findings += [f"instance {k}: {w}" for w in (rep.type1_blocking, rep.type2_blocking) if w]
        for draw in (full_participation(vm), draw_participation(vm, rng)):
            part = realize_transaction(outcome, draw, vm)
            result = run_transaction(outcome, draw, vm)
            transactions += 1
            reports = certify_transaction(result, part, outcome, vm, bounds)
            findings += [f"instance {k} (settlement): {v}" for v in reports["omom"].ir_violations]
            for r in reports.values():
                findings += [f"instance {k}: {w}" for w in (r.type1_blocking, r.type2_blocking) if w]
    return CertificationResult(n_instances, transactions, findings)

"""Domain types, validation and the participation model.

Currency, probabilities and qualities are quantized once, at validation, into
integer units so every budget comparison and every knapsack tie is exact:

* money: ``config.money_scale`` units per currency unit (default 100);
* participation probability: ``PROB_SCALE`` units (4 decimal digits);
* quality: ``QUALITY_SCALE`` units.

The user-facing dataclasses keep plain floats; :class:`ValidatedMarket`
carries the integer arrays the mechanisms work on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

PROB_SCALE = 10_000
QUALITY_SCALE = 10_000


@dataclass(frozen=True)
class Task:
    id: int
    budget: float
    desired_quality: float
    risk_scale: float = 1.0
    tx_power: float = 10.0


@dataclass(frozen=True)
class Worker:
    id: int
    participation_prob: float
    tx_power: float = 0.3


@dataclass(frozen=True)
class PairData:
    quality: float
    cost: float
    desired_payment: float
    uplink_latency: float = 1.0
    downlink_latency: float = 1.0


@dataclass(frozen=True)
class Market:
    """A problem instance: tasks, workers and the dense task x worker pair matrix."""

    tasks: tuple[Task, ...]
    workers: tuple[Worker, ...]
    pairs: tuple[tuple[PairData, ...], ...]

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_workers(self) -> int:
        return len(self.workers)


@dataclass(frozen=True)
class MarketConfig:
    overbooking_rate: float = 0.2
    payment_step: float = 1.0
    risk_tolerance: float = 0.2
    money_scale: int = 100
    max_rounds_cap: int = 10_000
    # worker id -> payment step overriding ``payment_step``
    step_overrides: Mapping[int, float] = field(default_factory=dict)


class ViolationKind(str, enum.Enum):
    NON_POSITIVE_BUDGET = "NonPositiveBudget"
    PAYMENT_BELOW_COST = "PaymentBelowCost"
    DIMENSION_MISMATCH = "DimensionMismatch"
    BAD_PROBABILITY = "BadProbability"
    NON_POSITIVE_VALUE = "NonPositiveValue"
    BAD_RISK_SCALE = "BadRiskScale"
    BAD_CONFIG = "BadConfig"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    index: tuple
    message: str

    def __str__(self) -> str:
        return f"{self.kind.value} at {self.index}: {self.message}"


class InvalidMarket(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations[:20])
        more = len(self.violations) - 20
        if more > 0:
            lines += f"\n  ... {more} more"
        super().__init__(f"{len(self.violations)} market violation(s):\n{lines}")


class MissingPayment(KeyError):
    pass


class SetTooLarge(ValueError):
    pass


def exact(x: float) -> Fraction:
    """Decimal reading of a float, so 0.2 means 1/5 rather than its binary neighbour."""
    return Fraction(str(x))


def to_units(x: float, scale: int) -> int:
    return int(round(x * scale))


@dataclass(frozen=True, eq=False)
class ValidatedMarket:
    """A market that passed validation, plus its quantized array view.

    All arrays are read-only.  Money arrays are in ``money_scale`` units,
    ``prob`` in ``PROB_SCALE`` units and ``quality``/``desired_quality`` in
    ``QUALITY_SCALE`` units.
    """

    market: Market
    config: MarketConfig
    prob: np.ndarray
    quality: np.ndarray
    cost: np.ndarray
    desire: np.ndarray
    budget: np.ndarray
    desired_quality: np.ndarray
    risk_scale: np.ndarray
    step: np.ndarray
    uplink: np.ndarray
    downlink: np.ndarray
    task_power: np.ndarray
    worker_power: np.ndarray

    @property
    def n_tasks(self) -> int:
        return self.market.n_tasks

    @property
    def n_workers(self) -> int:
        return self.market.n_workers

    @property
    def money_scale(self) -> int:
        return self.config.money_scale

    def money(self, units) -> float:
        return units / self.config.money_scale

    def units(self, amount: float) -> int:
        return to_units(amount, self.config.money_scale)

    def overbooked_capacity(self) -> np.ndarray:
        """floor((1 + tau) * B_i) in money units, computed exactly."""
        factor = 1 + exact(self.config.overbooking_rate)
        return np.array([math.floor(factor * int(b)) for b in self.budget], dtype=np.int64)

    def expected_weight(self, worker: int, price_units: int) -> int:
        """Expected payment a_j * p in money units, rounded up so budgets are never exceeded."""
        return expected_weights(self.prob[worker], price_units)


def expected_weights(prob_units, price_units):
    """Ceil of prob * price / PROB_SCALE; works elementwise on arrays."""
    return (np.asarray(prob_units, dtype=np.int64) * price_units + PROB_SCALE - 1) // PROB_SCALE


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def market_violations(market: Market, config: MarketConfig) -> list[Violation]:
    out: list[Violation] = []

    def add(kind, index, msg):
        out.append(Violation(kind, index, msg))

    if config.money_scale < 1:
        add(ViolationKind.BAD_CONFIG, ("money_scale",), f"money_scale={config.money_scale} < 1")
    if config.max_rounds_cap < 1:
        add(ViolationKind.BAD_CONFIG, ("max_rounds_cap",), f"max_rounds_cap={config.max_rounds_cap} < 1")
    if not 0 < config.risk_tolerance <= 1:
        add(ViolationKind.BAD_CONFIG, ("risk_tolerance",), f"risk_tolerance={config.risk_tolerance} outside (0, 1]")
    if not config.overbooking_rate >= 0:
        add(ViolationKind.BAD_CONFIG, ("overbooking_rate",), f"overbooking_rate={config.overbooking_rate} < 0")
    steps = [("payment_step", config.payment_step)]
    steps += [(f"step_overrides[{j}]", s) for j, s in config.step_overrides.items()]
    for name, s in steps:
        if not s > 0 or (config.money_scale >= 1 and to_units(s, config.money_scale) < 1):
            add(ViolationKind.BAD_CONFIG, (name,), f"{name}={s} is not a positive amount of money units")

    if len(market.pairs) != market.n_tasks:
        add(ViolationKind.DIMENSION_MISMATCH, ("pairs",),
            f"{len(market.pairs)} pair rows for {market.n_tasks} tasks")
    for i, row in enumerate(market.pairs):
        if len(row) != market.n_workers:
            add(ViolationKind.DIMENSION_MISMATCH, ("pairs", i),
                f"row {i} has {len(row)} entries for {market.n_workers} workers")
    for i, t in enumerate(market.tasks):
        if t.id != i:
            add(ViolationKind.DIMENSION_MISMATCH, ("task", i), f"task at position {i} has id {t.id}")
        if not t.budget > 0:
            add(ViolationKind.NON_POSITIVE_BUDGET, ("task", i), f"budget={t.budget}")
        if not t.desired_quality > 0:
            add(ViolationKind.NON_POSITIVE_VALUE, ("task", i), f"desired_quality={t.desired_quality}")
        if not t.risk_scale >= 1:
            add(ViolationKind.BAD_RISK_SCALE, ("task", i), f"risk_scale={t.risk_scale} < 1")
        if not t.tx_power > 0:
            add(ViolationKind.NON_POSITIVE_VALUE, ("task", i), f"tx_power={t.tx_power}")
    for j, w in enumerate(market.workers):
        if w.id != j:
            add(ViolationKind.DIMENSION_MISMATCH, ("worker", j), f"worker at position {j} has id {w.id}")
        a = w.participation_prob
        if not 0 < a <= 1 or to_units(a, PROB_SCALE) < 1:
            add(ViolationKind.BAD_PROBABILITY, ("worker", j), f"participation_prob={a} outside (0, 1]")
        if not w.tx_power > 0:
            add(ViolationKind.NON_POSITIVE_VALUE, ("worker", j), f"tx_power={w.tx_power}")
    for i, row in enumerate(market.pairs):
        for j, p in enumerate(row):
            for name in ("quality", "cost", "uplink_latency", "downlink_latency"):
                v = getattr(p, name)
                if not (v > 0 and math.isfinite(v)):
                    add(ViolationKind.NON_POSITIVE_VALUE, (i, j), f"{name}={v}")
            if not p.desired_payment >= p.cost:
                add(ViolationKind.PAYMENT_BELOW_COST, (i, j),
                    f"desired_payment={p.desired_payment} < cost={p.cost}")
    return out


def validate_market(market: Market, config: MarketConfig | None = None) -> ValidatedMarket:
    """Check every invariant and quantize; raises :class:`InvalidMarket` listing all violations."""
    config = config or MarketConfig()
    violations = market_violations(market, config)
    if violations:
        raise InvalidMarket(violations)

    scale = config.money_scale
    n_t, n_w = market.n_tasks, market.n_workers

    def pair_array(fn, dtype):
        return np.array([[fn(p) for p in row] for row in market.pairs], dtype=dtype).reshape(n_t, n_w)

    step = np.full(n_w, to_units(config.payment_step, scale), dtype=np.int64)
    for j, s in config.step_overrides.items():
        if 0 <= j < n_w:
            step[j] = to_units(s, scale)

    return ValidatedMarket(
        market=market,
        config=config,
        prob=_readonly(np.array([to_units(w.participation_prob, PROB_SCALE) for w in market.workers],
                                dtype=np.int64)),
        quality=_readonly(pair_array(lambda p: to_units(p.quality, QUALITY_SCALE), np.int64)),
        cost=_readonly(pair_array(lambda p: to_units(p.cost, scale), np.int64)),
        desire=_readonly(pair_array(lambda p: to_units(p.desired_payment, scale), np.int64)),
        budget=_readonly(np.array([to_units(t.budget, scale) for t in market.tasks], dtype=np.int64)),
        desired_quality=_readonly(np.array([to_units(t.desired_quality, QUALITY_SCALE) for t in market.tasks],
                                           dtype=np.int64)),
        risk_scale=_readonly(np.array([t.risk_scale for t in market.tasks], dtype=float)),
        step=_readonly(step),
        uplink=_readonly(pair_array(lambda p: p.uplink_latency, float)),
        downlink=_readonly(pair_array(lambda p: p.downlink_latency, float)),
        task_power=_readonly(np.array([t.tx_power for t in market.tasks], dtype=float)),
        worker_power=_readonly(np.array([w.tx_power for w in market.workers], dtype=float)),
    )


@dataclass(frozen=True)
class ParticipationDraw:
    """Realized show-ups for one transaction: ``alpha[j] == 1`` iff worker j participates."""

    alpha: tuple[int, ...]

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.alpha, dtype=bool)

    @property
    def present(self) -> frozenset[int]:
        return frozenset(j for j, a in enumerate(self.alpha) if a)


def draw_participation(vm: ValidatedMarket, rng: np.random.Generator) -> ParticipationDraw:
    """One independent Bernoulli(a_j) sample per worker, in worker order."""
    u = rng.random(vm.n_workers)
    alpha = (u * PROB_SCALE) < vm.prob
    return ParticipationDraw(tuple(int(a) for a in alpha))


def full_participation(vm: ValidatedMarket) -> ParticipationDraw:
    return ParticipationDraw((1,) * vm.n_workers)


def _task_index(task) -> int:
    return task.id if isinstance(task, Task) else int(task)


def _worker_index(worker) -> int:
    return worker.id if isinstance(worker, Worker) else int(worker)


def expected_quality(task, worker_set: Iterable, vm: ValidatedMarket) -> float:
    """Sum of a_j * q_ij over the set."""
    i = _task_index(task)
    total = sum(int(vm.prob[j]) * int(vm.quality[i, j]) for j in map(_worker_index, worker_set))
    return total / (PROB_SCALE * QUALITY_SCALE)


def expected_worker_utility(worker, task_set: Iterable, payments: Mapping[int, float],
                            vm: ValidatedMarket) -> float:
    """Sum of a_j * (p_ij - c_ij) over the task set; ``payments`` maps task id to currency."""
    j = _worker_index(worker)
    a = int(vm.prob[j]) / PROB_SCALE
    total = 0.0
    for i in map(_task_index, task_set):
        if i not in payments:
            raise MissingPayment(f"no payment for task {i} of worker {j}")
        total += a * (payments[i] - vm.market.pairs[i][j].cost)
    return total

"""Scenario generation, trip ingestion and the Monte Carlo experiment driver.

Seeds: the market of a scenario comes from ``SeedSequence([master_seed, 0])``
and trial ``t`` draws from ``SeedSequence([master_seed, 1, t])`` (split into a
participation stream and a stream for the random baseline), so a trial's
randomness depends only on its index.  Every method sees the same draw.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baselines import (
    run_conventional_f,
    run_conventional_s,
    run_negotiation,
    run_quality_p,
    run_random_m,
)
from .futures import FuturesOutcome, run_oia3m
from .metrics import (
    MetricsReport,
    compute_dip_ecip,
    compute_quality_metrics,
    compute_rosq,
    compute_worker_utility,
    realized_qualities,
)
from .model import (
    Market,
    MarketConfig,
    PairData,
    Task,
    ValidatedMarket,
    Worker,
    draw_participation,
    validate_market,
)
from .spot import run_transaction
from .stability import check_ir_futures

METHODS = ("hybrid", "conventional_s", "conventional_f", "quality_p", "random_m", "negotiation")
# methods driven by the payment-descent loop, whose rounds the convergence bound covers
DESCENT_METHODS = ("hybrid", "conventional_s")
SWEEP_PARAMETERS = {
    "tau": "overbooking_rate",
    "overbooking_rate": "overbooking_rate",
    "lambda2": "risk_tolerance",
    "risk_tolerance": "risk_tolerance",
    "n_workers": "n_workers",
    "n_tasks": "n_tasks",
}
RESULT_COLUMNS = ("method", "trial", "service_quality", "rosq", "fodsq", "worker_utility", "ni", "dip", "ecip",
                  "ni_futures", "dip_futures", "ecip_futures", "rounds")
TRIP_HEADER = ("worker_id", "active_days", "trip_km", "pickup_km", "dropoff_km")
DISTANCE_EPS = 1e-6


class ScenarioError(ValueError):
    pass


class InfeasibleRanges(ScenarioError):
    pass


class EmptyInput(ValueError):
    pass


class NonFiniteDistance(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioSpec:
    n_tasks: int
    n_workers: int
    cost_range: tuple[float, float] = (3.0, 6.0)
    desire_range: tuple[float, float] = (6.0, 10.0)
    quality_range: tuple[float, float] = (1.0, 5.0)
    budget_range: tuple[float, float] = (30.0, 50.0)
    desired_quality_range: tuple[float, float] = (30.0, 35.0)
    prob_range: tuple[float, float] = (0.6452, 0.9677)
    risk_scale_range: tuple[float, float] = (1.0, 1.05)
    uplink_range: tuple[float, float] = (0.5, 11.0)
    downlink_range: tuple[float, float] = (0.5, 4.0)
    worker_power_range: tuple[float, float] = (0.2, 0.4)
    task_power_range: tuple[float, float] = (6.0, 20.0)
    risk_tolerance: float = 0.2
    overbooking_rate: float = 0.2
    payment_step: float = 1.0
    money_scale: int = 100
    trials: int = 200
    master_seed: int = 0
    methods: tuple[str, ...] = METHODS
    resample_market: bool = False

    def config(self) -> MarketConfig:
        return MarketConfig(overbooking_rate=self.overbooking_rate, payment_step=self.payment_step,
                            risk_tolerance=self.risk_tolerance, money_scale=self.money_scale)

    def problems(self) -> list[str]:
        out = []
        if self.n_tasks < 0 or self.n_workers < 0:
            out.append("n_tasks and n_workers must be nonnegative")
        if self.trials < 1:
            out.append(f"trials={self.trials} must be at least 1")
        for f in fields(self):
            if f.name.endswith("_range"):
                lo, hi = getattr(self, f.name)
                if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                    out.append(f"{f.name}=({lo}, {hi}) is not an ordered finite range")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            out.append(f"unknown methods {unknown}; choose from {list(METHODS)}")
        if not self.methods:
            out.append("methods is empty")
        if not 0 <= self.master_seed < 2**64:
            out.append("master_seed must fit in 64 bits")
        return out

    def validate(self) -> "ScenarioSpec":
        problems = self.problems()
        if problems:
            raise ScenarioError("; ".join(problems))
        return self


# -- scenario files ---------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioSpec)}
REQUIRED_KEYS = ("n_tasks", "n_workers")


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if name.endswith("_range"):
        parts = [p.strip() for p in raw.split(",")]
        if len(parts) != 2:
            raise ValueError("expected 'low, high'")
        return (float(parts[0]), float(parts[1]))
    if name == "methods":
        return tuple(m.strip() for m in raw.split(",") if m.strip())
    if kind == "bool":
        low = raw.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError("expected true or false")
        return low in ("true", "1", "yes")
    if kind == "int":
        return int(raw)
    return float(raw)


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioSpec:
    """Read ``key = value`` lines; ``#`` starts a comment, ranges are ``low, high``."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ScenarioError(f"{source}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ScenarioError(f"{source}:{lineno}: duplicate key '{key}'")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as e:
            raise ScenarioError(f"{source}:{lineno}: bad value for '{key}': {e}") from None
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ScenarioError(f"{source}: missing required key(s) {', '.join(missing)}")
    spec = ScenarioSpec(**values)
    problems = spec.problems()
    if problems:
        raise ScenarioError(f"{source}: " + "; ".join(problems))
    return spec


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"{path}: {e.strerror}") from None
    return parse_scenario(text, str(path))


def format_scenario(spec: ScenarioSpec) -> str:
    lines = []
    for f in fields(spec):
        v = getattr(spec, f.name)
        if isinstance(v, tuple):
            v = ", ".join(map(str, v))
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


# -- market generation ------------------------------------------------------

def _quantize(x, step_count):
    return np.round(np.asarray(x, dtype=float) * step_count) / step_count


def generate_market(spec: ScenarioSpec, seed) -> Market:
    """Uniform sampling within the scenario ranges, quantized to the engine's resolution.

    Money is rounded to the money unit, probabilities, qualities and risk
    scales to 4 decimals.  A desired payment drawn below its cost is raised to
    the cost.
    """
    if spec.desire_range[1] < spec.cost_range[0]:
        raise InfeasibleRanges(f"desired payments {spec.desire_range} can never cover costs {spec.cost_range}")
    spec.validate()
    rng = np.random.default_rng(seed)
    T, W = spec.n_tasks, spec.n_workers
    ms = spec.money_scale

    def u(rng_range, size):
        return rng.uniform(*rng_range, size=size)

    budget = _quantize(u(spec.budget_range, T), ms)
    desired_q = _quantize(u(spec.desired_quality_range, T), 10_000)
    risk_scale = _quantize(u(spec.risk_scale_range, T), 10_000)
    task_power = u(spec.task_power_range, T)
    prob = _quantize(u(spec.prob_range, W), 10_000)
    worker_power = u(spec.worker_power_range, W)
    cost = _quantize(u(spec.cost_range, (T, W)), ms)
    desire = np.maximum(_quantize(u(spec.desire_range, (T, W)), ms), cost)
    quality = _quantize(u(spec.quality_range, (T, W)), 10_000)
    uplink = u(spec.uplink_range, (T, W))
    downlink = u(spec.downlink_range, (T, W))
    return _assemble(budget, desired_q, risk_scale, task_power, prob, worker_power,
                     cost, desire, quality, uplink, downlink)


def _assemble(budget, desired_q, risk_scale, task_power, prob, worker_power, cost, desire, quality, uplink,
              downlink) -> Market:
    tasks = tuple(Task(i, float(budget[i]), float(desired_q[i]), float(risk_scale[i]), float(task_power[i]))
                  for i in range(len(budget)))
    workers = tuple(Worker(j, float(prob[j]), float(worker_power[j])) for j in range(len(prob)))
    pairs = tuple(
        tuple(PairData(float(quality[i, j]), float(cost[i, j]), float(desire[i, j]),
                       float(uplink[i, j]), float(downlink[i, j])) for j in range(len(prob)))
        for i in range(len(budget)))
    return Market(tasks, workers, pairs)


# -- trip records -----------------------------------------------------------

@dataclass(frozen=True)
class TripRecord:
    worker_id: str
    active_days: int
    trip_km: float
    pickup_km: float
    dropoff_km: float


def read_trips_csv(source) -> list[TripRecord]:
    """Parse the trip CSV (``worker_id,active_days,trip_km,pickup_km,dropoff_km``)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise EmptyInput("trip file is empty")
    if tuple(h.strip() for h in header) != TRIP_HEADER:
        raise ScenarioError(f"trip header must be {','.join(TRIP_HEADER)}")
    out = []
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(TRIP_HEADER):
            raise ScenarioError(f"trip line {lineno}: expected {len(TRIP_HEADER)} fields")
        try:
            rec = TripRecord(row[0].strip(), int(row[1]), float(row[2]), float(row[3]), float(row[4]))
        except ValueError as e:
            raise ScenarioError(f"trip line {lineno}: {e}") from None
        out.append(rec)
    return out


def _scale(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Min-max map onto [lo, hi]; a constant input maps to the midpoint."""
    span = x.max() - x.min()
    if span == 0:
        return np.full_like(x, (lo + hi) / 2)
    return lo + (x - x.min()) / span * (hi - lo)


def ingest_trips(records: Sequence[TripRecord], spec: ScenarioSpec, seed=None) -> Market:
    """Build a market from per-worker trip samples.

    Worker j's k-th record (in input order) describes its relation to task k;
    a worker with fewer records than tasks reuses them cyclically.  Task-side
    fields and powers, which trip data does not carry, are sampled from the
    scenario ranges.
    """
    if not records:
        raise EmptyInput("no trip records")
    for r in records:
        d = (r.trip_km, r.pickup_km, r.dropoff_km)
        if not all(math.isfinite(x) for x in d):
            raise NonFiniteDistance(f"worker {r.worker_id}: non-finite distance {d}")
        if min(d) < 0:
            raise ScenarioError(f"worker {r.worker_id}: negative distance {d}")
        if not 0 <= r.active_days <= 31:
            raise ScenarioError(f"worker {r.worker_id}: active_days={r.active_days} outside [0, 31]")
    by_worker: dict[str, list[TripRecord]] = {}
    for r in records:
        by_worker.setdefault(r.worker_id, []).append(r)
    ids = list(by_worker)
    T, W = spec.n_tasks, len(ids)
    rows = [[by_worker[w][k % len(by_worker[w])] for w in ids] for k in range(T)]

    def grid(fn):
        return np.array([[fn(r) for r in row] for row in rows], dtype=float).reshape(T, W)

    total = grid(lambda r: r.trip_km + r.pickup_km + r.dropoff_km)
    inverse = grid(lambda r: 1.0 / (r.pickup_km + r.dropoff_km + DISTANCE_EPS))
    pickup = grid(lambda r: r.pickup_km)
    ms = spec.money_scale
    if T and W:
        cost = _quantize(_scale(total, *spec.cost_range), ms)
        desire = np.maximum(_quantize(_scale(total, *spec.desire_range), ms), cost)
        quality = _quantize(_scale(inverse, *spec.quality_range), 10_000)
        uplink, downlink = _scale(pickup, *spec.uplink_range), _scale(pickup, *spec.downlink_range)
    else:
        cost = desire = quality = uplink = downlink = np.zeros((T, W))
    prob = _quantize([by_worker[w][0].active_days / 31 for w in ids], 10_000)

    rng = np.random.default_rng(spec.master_seed if seed is None else seed)
    budget = _quantize(rng.uniform(*spec.budget_range, T), ms)
    desired_q = _quantize(rng.uniform(*spec.desired_quality_range, T), 10_000)
    risk_scale = _quantize(rng.uniform(*spec.risk_scale_range, T), 10_000)
    task_power = rng.uniform(*spec.task_power_range, T)
    worker_power = rng.uniform(*spec.worker_power_range, W)
    return _assemble(budget, desired_q, risk_scale, task_power, prob, worker_power,
                     cost, desire, quality, uplink, downlink)


# -- market bundles ---------------------------------------------------------

def write_market_bundle(market: Market, out_dir) -> list[Path]:
    """tasks.csv, workers.csv and pairs.csv; floats written with repr so they round-trip."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {
        "tasks.csv": (("id", "budget", "desired_quality", "risk_scale", "tx_power"),
                      [(t.id, t.budget, t.desired_quality, t.risk_scale, t.tx_power) for t in market.tasks]),
        "workers.csv": (("id", "participation_prob", "tx_power"),
                        [(w.id, w.participation_prob, w.tx_power) for w in market.workers]),
        "pairs.csv": (("task", "worker", "quality", "cost", "desired_payment", "uplink_latency",
                       "downlink_latency"),
                      [(i, j, p.quality, p.cost, p.desired_payment, p.uplink_latency, p.downlink_latency)
                       for i, row in enumerate(market.pairs) for j, p in enumerate(row)]),
    }
    paths = []
    for name, (header, rows) in tables.items():
        path = out / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[repr(x) if isinstance(x, float) else x for x in r] for r in rows])
        paths.append(path)
    return paths


def read_market_bundle(in_dir) -> Market:
    d = Path(in_dir)

    def rows(name):
        with (d / name).open(newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))

    tasks = tuple(Task(int(r["id"]), float(r["budget"]), float(r["desired_quality"]), float(r["risk_scale"]),
                       float(r["tx_power"])) for r in rows("tasks.csv"))
    workers = tuple(Worker(int(r["id"]), float(r["participation_prob"]), float(r["tx_power"]))
                    for r in rows("workers.csv"))
    grid = [[None] * len(workers) for _ in tasks]
    for r in rows("pairs.csv"):
        grid[int(r["task"])][int(r["worker"])] = PairData(
            float(r["quality"]), float(r["cost"]), float(r["desired_payment"]),
            float(r["uplink_latency"]), float(r["downlink_latency"]))
    return Market(tasks, workers, tuple(tuple(row) for row in grid))


# -- experiments ------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    method: str
    trial: int
    metrics: MetricsReport
    ni_futures: int
    dip_futures: float
    ecip_futures: float
    rounds: int
    trades: int
    violations: tuple[str, ...]

    def row(self) -> tuple:
        m = self.metrics
        return (self.method, self.trial, m.service_quality, m.rosq, m.fodsq, m.worker_utility, m.ni, m.dip,
                m.ecip, self.ni_futures, self.dip_futures, self.ecip_futures, self.rounds)


@dataclass
class ExperimentResult:
    spec: ScenarioSpec
    records: dict[str, list[TrialRecord]]
    aggregates: dict[str, dict[str, dict[str, float]]]
    futures_rounds: list[int]
    round_bound: list[int]
    futures_violations: list[str]
    # wall-clock decision time per (method, trial), milliseconds; not part of equality
    timing: dict[str, list[float]] = field(default_factory=dict, compare=False, repr=False)

    def mean(self, method: str, metric: str) -> float:
        return self.aggregates[method][metric]["mean"]

    @property
    def trades(self) -> int:
        return sum(r.trades for recs in self.records.values() for r in recs)

    @property
    def violations(self) -> list[str]:
        out = list(self.futures_violations)
        for recs in self.records.values():
            for r in recs:
                out += [f"{r.method} trial {r.trial}: {v}" for v in r.violations]
        return out

    def max_rounds(self) -> int:
        descent = [r.rounds for m in DESCENT_METHODS for r in self.records.get(m, [])]
        return max(self.futures_rounds + descent, default=0)


def convergence_bound(vm: ValidatedMarket) -> int:
    """ceil(max (desired - cost) / step) + 2, over all pairs."""
    if vm.n_tasks == 0 or vm.n_workers == 0:
        return 2
    gap = vm.desire - vm.cost
    return int(np.max(-(-gap // vm.step[None, :]))) + 2


def _settlement_violations(served: dict, vm: ValidatedMarket) -> list[str]:
    out = []
    spend = np.zeros(vm.n_tasks, dtype=np.int64)
    for (i, j), p in served.items():
        spend[i] += p
        if not vm.cost[i, j] <= p <= vm.desire[i, j]:
            out.append(f"pair ({i}, {j}) paid {vm.money(p):g} outside [cost, desired]")
    for i in np.flatnonzero(spend > vm.budget):
        out.append(f"task {i} spent {vm.money(int(spend[i])):g} over its budget")
    return out


def _trial_streams(spec: ScenarioSpec, t: int):
    draw_seq, random_seq = np.random.SeedSequence([spec.master_seed, 1, t]).spawn(2)
    return np.random.default_rng(draw_seq), np.random.default_rng(random_seq)


def _market_for(spec: ScenarioSpec, t: int | None) -> tuple[ValidatedMarket, FuturesOutcome]:
    key = [spec.master_seed, 0] if t is None else [spec.master_seed, 2, t]
    vm = validate_market(generate_market(spec, np.random.SeedSequence(key)), spec.config())
    return vm, run_oia3m(vm)


def _run_trial(spec: ScenarioSpec, vm: ValidatedMarket, outcome: FuturesOutcome, t: int):
    draw_rng, random_rng = _trial_streams(spec, t)
    draw = draw_participation(vm, draw_rng)
    runners = {
        "hybrid": lambda: run_transaction(outcome, draw, vm),
        "conventional_s": lambda: run_conventional_s(vm, draw),
        "conventional_f": lambda: run_conventional_f(vm, draw, outcome),
        "quality_p": lambda: run_quality_p(vm, draw),
        "random_m": lambda: run_random_m(vm, draw, random_rng),
        "negotiation": lambda: run_negotiation(vm, draw),
    }
    wanted = [m for m in METHODS if m in spec.methods or m == "conventional_s"]
    raw, elapsed = {}, {}
    for m in wanted:
        t0 = time.perf_counter()
        raw[m] = runners[m]()
        elapsed[m] = (time.perf_counter() - t0) * 1e3

    reference = compute_quality_metrics(realized_qualities(raw["conventional_s"].served, vm), vm)[0]
    fut_ni = int(outcome.interaction_counts.sum())
    fut_dip, fut_ecip = compute_dip_ecip(outcome.interaction_counts, vm)
    records, timing = [], {}
    for m in wanted:
        if m not in spec.methods:
            continue
        res = raw[m]
        served = res.served
        quality, fodsq = compute_quality_metrics(realized_qualities(served, vm), vm)
        dip, ecip = compute_dip_ecip(res.interaction_counts, vm)
        rosq = compute_rosq(quality, reference) if reference > 0 else math.nan
        rounds = max([res.o3m_rounds, *res.omom_rounds.values()]) if m == "hybrid" else res.rounds
        uses_contracts = m in ("hybrid", "conventional_f")
        metrics = MetricsReport(quality, rosq, fodsq, compute_worker_utility(served, vm),
                                int(res.interaction_counts.sum()), dip, ecip, elapsed[m])
        records.append(TrialRecord(
            m, t, metrics,
            fut_ni if uses_contracts else 0,
            fut_dip if uses_contracts else 0.0,
            fut_ecip if uses_contracts else 0.0,
            rounds, len(served), tuple(_settlement_violations(served, vm))))
        timing[m] = elapsed[m]
    return records


def _run_chunk(spec: ScenarioSpec, trials: list[int], shared):
    out = []
    for t in trials:
        vm, outcome = shared if shared is not None else _market_for(spec, t)
        out.append((t, _run_trial(spec, vm, outcome, t), outcome.rounds_used, convergence_bound(vm),
                    check_ir_futures(outcome, vm) if shared is None else []))
    return out


def _aggregate(values: list[float]) -> dict[str, float]:
    arr = np.array(values, dtype=float)
    return {"mean": float(arr.mean()), "std": float(arr.std()), "count": int(arr.size)}


def run_experiment(spec: ScenarioSpec, jobs: int = 1) -> ExperimentResult:
    """Run ``spec.trials`` paired trials of every requested method.

    Without ``resample_market`` one market is generated and contracted once;
    only participation varies across trials.  ``jobs > 1`` spreads trials over
    processes; results do not depend on it.
    """
    spec.validate()
    shared = _market_for(spec, None) if not spec.resample_market else None
    trials = list(range(spec.trials))
    if jobs > 1 and spec.trials > 1:
        chunks = [trials[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [spec] * len(chunks), chunks, [shared] * len(chunks)))
        done = sorted((item for part in parts for item in part), key=lambda x: x[0])
    else:
        done = _run_chunk(spec, trials, shared)

    methods = [m for m in METHODS if m in spec.methods]
    records = {m: [] for m in methods}
    timing = {m: [] for m in methods}
    futures_rounds, bounds, fut_viol = [], [], []
    if shared is not None:
        futures_rounds.append(shared[1].rounds_used)
        bounds.append(convergence_bound(shared[0]))
        fut_viol += check_ir_futures(shared[1], shared[0])
    for t, recs, rounds, bound, viol in done:
        for r in recs:
            records[r.method].append(r)
            timing[r.method].append(r.metrics.running_time)
        if shared is None:
            futures_rounds.append(rounds)
            bounds.append(bound)
            fut_viol += [f"trial {t}: {v}" for v in viol]

    aggregates = {}
    for m in methods:
        agg = {}
        for name in ("service_quality", "rosq", "fodsq", "worker_utility", "ni", "dip", "ecip"):
            agg[name] = _aggregate([getattr(r.metrics, name) for r in records[m]])
        for name in ("ni_futures", "dip_futures", "ecip_futures", "rounds"):
            agg[name] = _aggregate([getattr(r, name) for r in records[m]])
        aggregates[m] = agg
    return ExperimentResult(spec, records, aggregates, futures_rounds, bounds, fut_viol, timing)


def sweep(spec: ScenarioSpec, parameter: str, grid: Iterable, jobs: int = 1) -> list[tuple[object, ExperimentResult]]:
    """One experiment per grid value, all under the same master seed."""
    if parameter not in SWEEP_PARAMETERS:
        raise ScenarioError(f"cannot sweep '{parameter}'; choose from {sorted(SWEEP_PARAMETERS)}")
    grid = list(grid)
    if not grid:
        raise ScenarioError("sweep grid is empty")
    name = SWEEP_PARAMETERS[parameter]
    cast = int if name in ("n_workers", "n_tasks") else float
    return [(v, run_experiment(replace(spec, **{name: cast(v)}), jobs)) for v in grid]


# -- result files -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_results(result: ExperimentResult, out_dir, fmt: str = "csv", extra: dict | None = None) -> list[Path]:
    """results.csv (or results.json) plus aggregate.json, both deterministic; timing.csv separately."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.row() for m in result.records for r in result.records[m]]
    paths = []
    if fmt == "csv":
        path = out / "results.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            w.writerows([[_fmt(x) for x in row] for row in rows])
    elif fmt == "json":
        path = out / "results.json"
        path.write_text(json.dumps([dict(zip(RESULT_COLUMNS, row)) for row in rows], indent=1) + "\n",
                        encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    paths.append(path)
    doc = {
        "spec": {f.name: getattr(result.spec, f.name) for f in fields(result.spec)},
        "aggregates": result.aggregates,
        "futures_rounds": result.futures_rounds,
        "convergence_bound": result.round_bound,
        "trades": result.trades,
        "violations": result.violations,
    }
    if extra:
        doc.update(extra)
    agg = out / "aggregate.json"
    agg.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    paths.append(agg)
    timing = out / "timing.csv"
    with timing.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("method", "trial", "running_time_ms"))
        for m, times in result.timing.items():
            w.writerows([(m, t, f"{x:.3f}") for t, x in enumerate(times)])
    paths.append(timing)
    return paths

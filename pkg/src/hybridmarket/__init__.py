"""Hybrid futures/spot matching for mobile crowdsensing markets."""
from .baselines import (
    BaselineOutcome,
    run_conventional_f,
    run_conventional_s,
    run_negotiation,
    run_quality_p,
    run_random_m,
)
from .futures import (
    FuturesOutcome,
    candidate_tasks,
    reduce_payment,
    risk_exact,
    risk_surrogate,
    run_oia3m,
    success_probability,
    task_select_round,
)
from .harness import ScenarioSpec, generate_market, ingest_trips, run_experiment, sweep
from .knapsack import KnapsackItem, KnapsackSolution, solve_knapsack
from .metrics import MetricsReport, compute_dip_ecip, compute_quality_metrics, compute_rosq, compute_worker_utility
from .model import (
    InvalidMarket,
    Market,
    MarketConfig,
    PairData,
    ParticipationDraw,
    Task,
    ValidatedMarket,
    Worker,
    draw_participation,
    expected_quality,
    expected_worker_utility,
    validate_market,
)
from .spot import RealizedPartition, TransactionResult, realize_transaction, run_o3m, run_omom, run_transaction, settle

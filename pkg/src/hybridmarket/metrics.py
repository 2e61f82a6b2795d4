"""Performance indicators of a settled transaction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from .model import QUALITY_SCALE, ValidatedMarket

METRIC_FIELDS = ("service_quality", "rosq", "fodsq", "worker_utility", "ni", "dip", "ecip", "running_time")


@dataclass(frozen=True)
class MetricsReport:
    service_quality: float
    rosq: float
    fodsq: float
    worker_utility: float
    ni: int
    dip: float  # ms
    ecip: float  # W * ms
    running_time: float = field(default=0.0, compare=False)  # ms, wall clock

    def as_dict(self) -> dict:
        return asdict(self)


def realized_qualities(served: Mapping[tuple[int, int], int], vm: ValidatedMarket) -> dict[int, float]:
    """Per-task sum of q_ij over the served pairs."""
    units = {i: 0 for i in range(vm.n_tasks)}
    for i, j in served:
        units[i] += int(vm.quality[i, j])
    return {i: u / QUALITY_SCALE for i, u in units.items()}


def compute_quality_metrics(qualities: Mapping[int, float], vm: ValidatedMarket) -> tuple[float, float]:
    """Total realized quality and the fraction of tasks reaching their desired quality."""
    if vm.n_tasks == 0:
        return 0.0, 0.0
    total = math.fsum(qualities.values())
    met = sum(1 for i, t in enumerate(vm.market.tasks) if qualities.get(i, 0) >= t.desired_quality)
    return total, met / vm.n_tasks


def compute_rosq(method_quality: float, reference_quality: float) -> float:
    if reference_quality == 0:
        raise ZeroDivisionError("reference mechanism served no quality")
    return method_quality / reference_quality


def compute_dip_ecip(counts: np.ndarray, vm: ValidatedMarket) -> tuple[float, float]:
    counts = np.asarray(counts, dtype=float)
    dip = float((counts * (vm.downlink + vm.uplink)).sum())
    energy = vm.task_power[:, None] * vm.downlink + vm.worker_power[None, :] * vm.uplink
    return dip, float((counts * energy).sum())


def compute_worker_utility(served: Mapping[tuple[int, int], int], vm: ValidatedMarket) -> float:
    """Sum of payment minus cost over served pairs; ``served`` maps pairs to money units."""
    return vm.money(sum(p - int(vm.cost[i, j]) for (i, j), p in served.items()))

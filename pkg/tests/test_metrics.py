import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_market, participation, small_markets
from hybridmarket.futures import run_oia3m
from hybridmarket.metrics import (
    compute_dip_ecip,
    compute_quality_metrics,
    compute_rosq,
    compute_worker_utility,
    realized_qualities,
)
from hybridmarket.model import Market, Task, Worker, PairData, validate_market
from hybridmarket.spot import run_transaction


def test_quality_metrics_example():
    vm = make_market([(30, 30), (30, 30), (30, 35)], [0.8], [[(3, 3, 6)]] * 3)
    total, fodsq = compute_quality_metrics({0: 31, 1: 29, 2: 40}, vm)
    assert total == 100 and fodsq == pytest.approx(2 / 3)


def test_quality_metrics_all_zero():
    vm = make_market([(30, 30), (30, 30)], [0.8], [[(3, 3, 6)]] * 2)
    assert compute_quality_metrics({0: 0, 1: 0}, vm) == (0, 0)


@given(small_markets(max_tasks=4, max_workers=6), st.data())
def test_quality_metrics_match_recount(vm, data):
    served = data.draw(st.sets(st.tuples(st.integers(0, vm.n_tasks - 1), st.integers(0, vm.n_workers - 1))))
    q = realized_qualities({k: 0 for k in served}, vm)
    per_task = [sum(vm.market.pairs[i][j].quality for (t, j) in served if t == i) for i in range(vm.n_tasks)]
    total, fodsq = compute_quality_metrics(q, vm)
    assert total == pytest.approx(sum(per_task))
    met = sum(per_task[i] >= vm.market.tasks[i].desired_quality - 1e-9 for i in range(vm.n_tasks))
    assert fodsq == met / vm.n_tasks


@pytest.mark.parametrize("m,ref,out", [(100, 100, 1.0), (80, 100, 0.8), (0, 7, 0.0)])
def test_rosq(m, ref, out):
    assert compute_rosq(m, ref) == out


def test_rosq_needs_positive_reference():
    with pytest.raises(ZeroDivisionError):
        compute_rosq(5, 0)


@given(st.floats(1e-6, 1e6))
def test_rosq_of_itself_is_one(x):
    assert compute_rosq(x, x) == 1.0


def dip_market(down=1.0, up=2.0, e_task=10.0, e_worker=0.3):
    m = Market((Task(0, 30, 10, 1.0, e_task),), (Worker(0, 0.8, e_worker),), ((PairData(3, 3, 6, up, down),),))
    return validate_market(m)


def test_dip_and_ecip_example():
    dip, ecip = compute_dip_ecip(np.array([[2]]), dip_market())
    assert dip == 6 and ecip == pytest.approx(21.2)


def test_dip_and_ecip_match_double_loop():
    rng = np.random.default_rng(3)
    n = 5
    up, down = rng.uniform(0.5, 11, (n, n)), rng.uniform(0.5, 4, (n, n))
    et, ew = rng.uniform(6, 20, n), rng.uniform(0.2, 0.4, n)
    m = Market(tuple(Task(i, 30, 10, 1.0, et[i]) for i in range(n)),
               tuple(Worker(j, 0.8, ew[j]) for j in range(n)),
               tuple(tuple(PairData(3, 3, 6, up[i, j], down[i, j]) for j in range(n)) for i in range(n)))
    vm = validate_market(m)
    counts = rng.integers(0, 20, (n, n))
    dip = ecip = 0.0
    for i in range(n):
        for j in range(n):
            dip += counts[i, j] * (down[i, j] + up[i, j])
            ecip += counts[i, j] * (et[i] * down[i, j] + ew[j] * up[i, j])
    got = compute_dip_ecip(counts, vm)
    assert got[0] == pytest.approx(dip, rel=1e-12) and got[1] == pytest.approx(ecip, rel=1e-12)
    doubled = compute_dip_ecip(2 * counts, vm)
    assert doubled[0] == pytest.approx(2 * got[0]) and doubled[1] == pytest.approx(2 * got[1])


def test_worker_utility_examples():
    vm = make_market([(30, 10)], [0.8], [[(3, 3, 6)]])
    assert compute_worker_utility({}, vm) == 0
    assert compute_worker_utility({(0, 0): 600}, vm) == 3


@given(small_markets(max_tasks=3, max_workers=6), st.data())
def test_worker_utility_is_outlay_minus_cost(vm, data):
    res = run_transaction(run_oia3m(vm), data.draw(participation(vm)), vm)
    outlay = math.fsum(res.task_outlay.values())
    cost = math.fsum(vm.market.pairs[i][j].cost for (i, j) in res.served)
    assert compute_worker_utility(res.served, vm) == pytest.approx(outlay - cost, abs=1e-9)

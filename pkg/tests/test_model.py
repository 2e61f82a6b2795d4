import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_market, small_markets
from hybridmarket.model import (
    InvalidMarket,
    Market,
    MarketConfig,
    MissingPayment,
    PairData,
    Task,
    ViolationKind,
    Worker,
    draw_participation,
    expected_quality,
    expected_worker_utility,
    market_violations,
    validate_market,
)


def test_reference_market_is_valid():
    vm = make_market([(30, 30, 1)], [0.8], [[(3, 3, 6)]])
    assert vm.budget[0] == 3000 and vm.cost[0, 0] == 300 and vm.desire[0, 0] == 600
    assert vm.prob[0] == 8000


def test_payment_below_cost_names_the_pair():
    with pytest.raises(InvalidMarket) as err:
        make_market([(30, 30)], [0.8], [[(3, 3, 2)]])
    (v,) = err.value.violations
    assert v.kind is ViolationKind.PAYMENT_BELOW_COST and v.index == (0, 0)


def test_empty_workers_with_pairs_is_dimension_mismatch():
    m = Market((Task(0, 30, 30),), (), ((PairData(3, 3, 6),),))
    kinds = {v.kind for v in market_violations(m, MarketConfig())}
    assert ViolationKind.DIMENSION_MISMATCH in kinds


@pytest.mark.parametrize("budget,prob,kind", [
    (0, 0.8, ViolationKind.NON_POSITIVE_BUDGET),
    (-5, 0.8, ViolationKind.NON_POSITIVE_BUDGET),
    (30, 1.2, ViolationKind.BAD_PROBABILITY),
    (30, 0.0, ViolationKind.BAD_PROBABILITY),
])
def test_field_violations(budget, prob, kind):
    m = Market((Task(0, budget, 30),), (Worker(0, prob),), ((PairData(3, 3, 6),),))
    assert kind in {v.kind for v in market_violations(m, MarketConfig())}


def test_all_violations_are_reported_together():
    m = Market((Task(0, 0, 30), Task(1, 30, 30)), (Worker(0, 1.5),),
               ((PairData(3, 3, 2),), (PairData(3, 3, 6),)))
    kinds = [v.kind for v in market_violations(m, MarketConfig())]
    assert {ViolationKind.NON_POSITIVE_BUDGET, ViolationKind.BAD_PROBABILITY,
            ViolationKind.PAYMENT_BELOW_COST} <= set(kinds)


def test_zero_worker_market_is_valid():
    vm = validate_market(Market((Task(0, 30, 30),), (), ((),)))
    assert vm.n_workers == 0 and vm.cost.shape == (1, 0)


def test_certain_worker_always_shows():
    vm = make_market([(30, 30)], [1.0, 1.0], [[(3, 3, 6), (3, 3, 6)]])
    rng = np.random.default_rng(1)
    assert all(draw_participation(vm, rng).alpha == (1, 1) for _ in range(200))


def test_participation_frequency_matches_probability():
    vm = make_market([(30, 30)], [0.5], [[(3, 3, 6)]])
    rng = np.random.default_rng(7)
    mean = np.mean([draw_participation(vm, rng).alpha[0] for _ in range(10_000)])
    assert abs(mean - 0.5) <= 0.02


@given(small_markets(), st.integers(0, 2**32 - 1))
def test_same_seed_same_draw(vm, seed):
    a = draw_participation(vm, np.random.default_rng(seed))
    b = draw_participation(vm, np.random.default_rng(seed))
    assert a == b


def test_expected_quality_examples():
    vm = make_market([(30, 30)], [0.8, 0.9], [[(20, 3, 6), (15, 3, 6)]])
    assert expected_quality(0, [], vm) == 0
    assert expected_quality(0, [0, 1], vm) == pytest.approx(29.5, abs=1e-12)


@given(small_markets(max_workers=6), st.data())
def test_expected_quality_matches_direct_sum_and_is_monotone(vm, data):
    ws = data.draw(st.sets(st.integers(0, vm.n_workers - 1)))
    direct = sum(vm.market.workers[j].participation_prob * vm.market.pairs[0][j].quality for j in ws)
    assert expected_quality(0, ws, vm) == pytest.approx(direct, abs=1e-9)
    for j in range(vm.n_workers):
        assert expected_quality(0, ws | {j}, vm) >= expected_quality(0, ws, vm)


def test_expected_worker_utility_examples():
    vm = make_market([(30, 30)] * 4, [0.8], [[(3, 3, 6)], [(3, 4, 9)], [(3, 5, 5)], [(2, 3, 7)]])
    assert expected_worker_utility(0, [], {}, vm) == 0
    assert expected_worker_utility(0, [0], {0: 6}, vm) == pytest.approx(2.4)
    pays = {0: 6, 1: 8, 2: 5, 3: 3}
    manual = 0.8 * ((6 - 3) + (8 - 4) + (5 - 5) + (3 - 3))
    assert expected_worker_utility(0, range(4), pays, vm) == pytest.approx(manual)
    with pytest.raises(MissingPayment):
        expected_worker_utility(0, [0, 1], {0: 6}, vm)


@given(small_markets(), st.data())
def test_utility_nonnegative_when_paid_at_least_cost(vm, data):
    j = data.draw(st.integers(0, vm.n_workers - 1))
    pays = {i: data.draw(st.floats(vm.market.pairs[i][j].cost, vm.market.pairs[i][j].desired_payment))
            for i in range(vm.n_tasks)}
    assert expected_worker_utility(j, range(vm.n_tasks), pays, vm) >= -1e-12


@given(small_markets())
def test_validated_costs_never_exceed_desire(vm):
    assert (vm.cost <= vm.desire).all()


def test_arrays_are_read_only():
    vm = make_market([(30, 30)], [0.8], [[(3, 3, 6)]])
    with pytest.raises(ValueError):
        vm.cost[0, 0] = 1

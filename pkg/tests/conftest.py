import os

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hybridmarket.model import Market, MarketConfig, PairData, Task, Worker, validate_market

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=600,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_market(tasks, workers, pairs, **config):
    """tasks: (B, Q[, lambda_1]); workers: a_j; pairs[i][j]: (q, c, p_desire)."""
    ts = tuple(Task(i, float(t[0]), float(t[1]), float(t[2]) if len(t) > 2 else 1.0)
               for i, t in enumerate(tasks))
    ws = tuple(Worker(j, float(a)) for j, a in enumerate(workers))
    ps = tuple(tuple(PairData(float(q), float(c), float(p)) for q, c, p in row) for row in pairs)
    cfg = MarketConfig(**config)
    return validate_market(Market(ts, ws, ps), cfg)


@st.composite
def small_markets(draw, max_tasks=3, max_workers=5, min_workers=1, budgets=(5, 40),
                  probs=(0.5, 1.0), tau=None, lam2=None):
    """Integer-valued prices and small quality grids so that ties are common."""
    n_t = draw(st.integers(1, max_tasks))
    n_w = draw(st.integers(min_workers, max_workers))
    tasks = [(draw(st.integers(*budgets)), draw(st.integers(1, 15)), draw(st.sampled_from([1.0, 1.2])))
             for _ in range(n_t)]
    choices = sorted({probs[0], (probs[0] + probs[1]) / 2, probs[1]} | ({0.8} if probs[0] <= 0.8 <= probs[1] else set()))
    workers = [draw(st.sampled_from(choices)) for _ in range(n_w)]
    pairs = []
    for _ in range(n_t):
        row = []
        for _ in range(n_w):
            c = draw(st.integers(3, 6))
            row.append((draw(st.integers(1, 5)), c, c + draw(st.integers(0, 7))))
        pairs.append(row)
    config = dict(
        overbooking_rate=draw(st.sampled_from([0.0, 0.2, 0.5])) if tau is None else tau,
        risk_tolerance=draw(st.sampled_from([0.05, 0.2, 0.5, 1.0])) if lam2 is None else lam2,
    )
    return make_market(tasks, workers, pairs, **config)


@st.composite
def participation(draw, vm):
    from hybridmarket.model import ParticipationDraw

    return ParticipationDraw(tuple(draw(st.lists(st.integers(0, 1), min_size=vm.n_workers,
                                                 max_size=vm.n_workers))))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

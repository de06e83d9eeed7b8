import math

import numpy as np
import pytest

from ratchet_levy import LevyModel, Strategy, laplace_ruin, value
from ratchet_levy import _mckernel as K
from ratchet_levy.errors import ConfigError, InvalidParameter
from ratchet_levy.montecarlo import (
    Controls,
    SimConfig,
    Target,
    default_workers,
    estimate,
    simulate,
    simulate_path,
)

D = 0.05


def _within(est, ref, k):
    assert abs(est.mean - ref) <= k * est.std_error, (est, ref, est.z_score(ref))


def test_same_seed_same_outcomes_any_worker_count(bm, base_strategy):
    cfg = SimConfig(n_paths=5000, seed=7)
    runs = [simulate(bm, base_strategy, D, 8.0, cfg, workers=w).outcomes for w in (1, 2, 4)]
    assert runs[0].tobytes() == runs[1].tobytes() == runs[2].tobytes()
    other = simulate(bm, base_strategy, D, 8.0, SimConfig(n_paths=5000, seed=8), workers=1).outcomes
    assert not np.array_equal(runs[0], other)


def test_paths_are_keyed_by_index(bm, base_strategy):
    cfg = SimConfig(n_paths=3000, seed=3)
    run = simulate(bm, base_strategy, D, 4.0, cfg, workers=1)
    for i in (0, 1, 2047, 2048, 2999):
        p = simulate_path(bm, base_strategy, D, 4.0, cfg, i)
        row = run.outcomes[i]
        assert p.disc_ratchet == row[K.COL_RATCHET]
        assert p.disc_periodic == row[K.COL_PERIODIC]
        assert p.disc_ruin_indicator == row[K.COL_RUIN_DISC]
    # a longer run extends a shorter one
    longer = simulate(bm, base_strategy, D, 4.0, SimConfig(n_paths=5000, seed=3), workers=1)
    assert np.array_equal(longer.outcomes[:3000], run.outcomes)


def test_zero_surplus_is_immediate_ruin(bm, base_strategy):
    p = simulate_path(bm, base_strategy, D, 0.0, SimConfig(), 0)
    assert p.ruined and p.tau == 0.0
    assert p.disc_ruin_indicator == 1.0 and p.disc_total == 0.0


@pytest.mark.parametrize("q", [0.05, 0.5])
def test_uncontrolled_passage_time_transform(q):
    # no dividends: tau is the first passage below 0 of x + m t + s B_t;
    # e^{-40} makes the horizon irrelevant
    m, s, x = 0.4, 1.0, 1.5
    model = LevyModel.brownian(m, s)
    ctl = Controls(a=1e9, b=1e9, c1=0.0, c2=0.0, gamma=0.0)
    est = estimate(model, ctl, q, x, SimConfig(n_paths=20000, seed=11, t_max=40.0 / q), Target.RUIN_LAPLACE, workers=1)
    exact = math.exp(-(m + math.sqrt(m * m + 2 * s * s * q)) * x / (s * s))
    _within(est, exact, 4.0)


def test_trace_invariants(bm):
    s = Strategy(1.0, 2.0, 0.2, 0.3, 2.0)
    cfg = SimConfig(seed=5)
    seen_ratchet = 0
    for i in range(200):
        out, tr = simulate_path(bm, s, D, 1.5, cfg, i, trace_capacity=200000)
        times = tr[:, 0]
        assert np.all(np.diff(times) >= 0)
        kinds = tr[:, 1].astype(int)
        dec = kinds == K.EV_DECISION
        assert np.all(tr[dec, 3] <= s.a + 1e-12)
        assert np.all(tr[dec, 3] <= tr[dec, 2] + 1e-12)
        assert np.sum(kinds == K.EV_RATCHET) <= 1
        seen_ratchet += int(np.any(kinds == K.EV_RATCHET))
        if out.ruined:
            assert kinds[-1] == K.EV_RUIN
            assert out.tau == times[-1]
        # the surplus never sits below zero before ruin
        assert np.all(tr[kinds == K.EV_STEP, 3] >= 0)
    assert seen_ratchet > 0


def test_dividend_bounds(bm, base_strategy):
    run = simulate(bm, base_strategy, D, 8.0, SimConfig(n_paths=4000, seed=2), workers=1)
    o = run.outcomes
    assert np.all(o[:, K.COL_RATCHET] <= (base_strategy.c1 + base_strategy.c2) / D + 1e-9)
    assert np.all(o[:, K.COL_RATCHET] >= 0) and np.all(o[:, K.COL_PERIODIC] >= 0)
    assert np.all((o[:, K.COL_RUIN_DISC] >= 0) & (o[:, K.COL_RUIN_DISC] <= 1))


def test_config_validation(bm, base_strategy):
    with pytest.raises(ConfigError, match=r"dt=0.2 too coarse for gamma=1"):
        simulate(bm, base_strategy, D, 8.0, SimConfig(dt=0.2, n_paths=10))
    with pytest.raises(ConfigError):
        SimConfig(n_paths=0)
    with pytest.raises(ConfigError):
        SimConfig(dt=-1.0)
    with pytest.raises(ConfigError):
        SimConfig(t_max=math.inf)
    with pytest.raises(ConfigError):
        SimConfig(seed=-1)
    with pytest.raises(ConfigError):
        simulate(bm, base_strategy, D, 8.0, SimConfig(n_paths=10), workers=0)
    with pytest.raises(InvalidParameter):
        Controls(1.0, 2.0, -0.1, 0.0, 1.0)
    with pytest.raises(InvalidParameter):
        simulate(bm, base_strategy, D, -1.0, SimConfig(n_paths=10))
    # the drift condition still applies to real strategies
    with pytest.raises(InvalidParameter):
        simulate(bm, Strategy(1.0, 2.0, 0.6, 0.5, 1.0), D, 1.0, SimConfig(n_paths=10))


def test_thread_environment(monkeypatch):
    monkeypatch.setenv("RATCHET_LEVY_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("RATCHET_LEVY_THREADS", "zero")
    with pytest.raises(ConfigError):
        default_workers()
    monkeypatch.setenv("RATCHET_LEVY_THREADS", "0")
    with pytest.raises(ConfigError):
        default_workers()


def test_single_path_has_no_standard_error(bm, base_strategy):
    est = estimate(bm, base_strategy, D, 8.0, SimConfig(n_paths=1))
    assert est.n == 1 and not est.se_defined
    assert math.isnan(est.z_score(1.0))


def test_antithetic_pairs(bm, base_strategy):
    cfg = SimConfig(n_paths=20000, seed=4, antithetic=True)
    run = simulate(bm, base_strategy, D, 8.0, cfg, workers=1)
    # the first Gaussian of each pair is mirrored, so the first pair members differ
    o = run.outcomes
    assert not np.array_equal(o[0::2], o[1::2])
    est = run.estimate(Target.DIVIDEND_NPV)
    _within(est, value(bm, base_strategy, D, 8.0).value, 4.0)


@pytest.mark.parametrize("y", [2.0, 4.0, 8.0])
def test_agreement_with_closed_form(bm, base_strategy, y):
    run = simulate(bm, base_strategy, D, y, SimConfig(n_paths=100_000, seed=2024))
    _within(run.estimate(Target.DIVIDEND_NPV), value(bm, base_strategy, D, y).value, 4.0)
    _within(run.estimate(Target.RUIN_LAPLACE), laplace_ruin(bm, base_strategy, D, y).value, 4.0)
    assert run.estimate(Target.DIVIDEND_NPV).censored_fraction == 0.0


def test_agreement_is_stable_under_dt_halving(bm, base_strategy):
    ref = value(bm, base_strategy, D, 5.0).value
    for dt in (1e-3, 5e-4):
        est = estimate(bm, base_strategy, D, 5.0, SimConfig(dt=dt, n_paths=50_000, seed=9))
        _within(est, ref, 4.0)


def test_small_discount_ruin_and_censoring(bm, base_strategy):
    run = simulate(bm, base_strategy, 1e-8, 8.0, SimConfig(n_paths=20_000, seed=1, t_max=5000.0))
    est = run.estimate(Target.RUIN_LAPLACE)
    assert est.censored_fraction < 1e-3
    assert est.mean > 0.999


def test_compound_poisson_agreement(cpe):
    s = Strategy(2.0, 4.0, 0.1, 0.2, 1.0)
    for y in (1.0, 5.0):
        run = simulate(cpe, s, D, y, SimConfig(n_paths=100_000, seed=31))
        _within(run.estimate(Target.DIVIDEND_NPV), value(cpe, s, D, y).value, 4.0)
        _within(run.estimate(Target.RUIN_LAPLACE), laplace_ruin(cpe, s, D, y).value, 4.0)


def test_pure_jump_agreement():
    # bounded variation: no immediate ruin at 0, ratchet crossing is exact
    cp = LevyModel.compound_poisson_exp(1.5, 0.0, 1.0, 2.0)
    s = Strategy(2.0, 4.0, 0.1, 0.2, 1.0)
    for y in (0.0, 3.0, 6.0):
        run = simulate(cp, s, D, y, SimConfig(n_paths=50_000, seed=13))
        _within(run.estimate(Target.DIVIDEND_NPV), value(cp, s, D, y).value, 4.0)
        _within(run.estimate(Target.RUIN_LAPLACE), laplace_ruin(cp, s, D, y).value, 4.0)

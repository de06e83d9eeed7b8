import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratchet_levy import (
    Backend,
    InvalidParameter,
    InvalidStrategy,
    LevyModel,
    Region,
    Strategy,
    laplace_ruin,
    laplace_ruin_ratchet_only,
)

from oracles import bm_ruin_probability, fd_at, fd_richardson, fd_ruin, fd_solve

D = 0.05

# base parameters, a=3, b=5; confirmed by the finite-difference solver and by
# 10^6-path simulation
BASE_L = {8.0: 0.635880717, 5.0: 0.640092203, 4.0: 0.644169631, 3.0: 0.661185154, 2.0: 0.708060788}


@pytest.mark.parametrize("y", sorted(BASE_L))
def test_base_values(bm, base_strategy, y):
    assert laplace_ruin(bm, base_strategy, D, y).value == pytest.approx(BASE_L[y], abs=1e-9)


@pytest.mark.parametrize(
    "case",
    [
        (1.0, 2.0, 3.0, 5.0, 0.0, 0.1, 1.0, 0.05),
        (1.0, 2.0, 1.0, 4.0, 0.2, 0.3, 0.5, 0.1),
        (2.0, 1.0, 2.0, 2.0, 0.5, 0.5, 2.0, 0.08),
        (0.6, 1.5, 0.5, 6.0, 0.1, 0.2, 4.0, 0.01),
    ],
)
def test_against_finite_differences(case):
    mu, sigma, a, b, c1, c2, g, d = case
    model, s = LevyModel.brownian(mu, sigma), Strategy(a, b, c1, c2, g)
    ref = fd_richardson(fd_ruin, 0.004, mu, sigma, a, b, c1, c2, g, d, xmax=80.0)
    for y in (0.3, a, 0.5 * (a + b), b, b + 2.0, b + 10.0):
        assert laplace_ruin(model, s, d, y).value == pytest.approx(ref(y), abs=2e-6)


def test_regions_and_range(bm, base_strategy):
    assert laplace_ruin(bm, base_strategy, D, 1.0).region is Region.LOWER
    assert laplace_ruin(bm, base_strategy, D, 3.0).region is Region.MIDDLE
    assert laplace_ruin(bm, base_strategy, D, 5.0).region is Region.UPPER


def test_zero_surplus_is_immediate_ruin(bm, base_strategy):
    assert laplace_ruin(bm, base_strategy, D, 0.0).value == pytest.approx(1.0, abs=1e-15)
    assert laplace_ruin_ratchet_only(bm, 5.0, 0.0, 0.1, D, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_errors(bm, base_strategy):
    with pytest.raises(InvalidStrategy):
        laplace_ruin(bm, Strategy(0.0, 5.0, 0.0, 0.1, 1.0), D, 1.0)
    with pytest.raises(InvalidParameter):
        laplace_ruin(bm, base_strategy, -0.01, 1.0)
    with pytest.raises(InvalidParameter):
        laplace_ruin(bm, base_strategy, D, -1.0)
    with pytest.raises(InvalidParameter):
        laplace_ruin_ratchet_only(bm, 0.0, 0.0, 0.1, D, 1.0)


@pytest.mark.parametrize("y", [2.0, 5.0, 8.0])
def test_vanishing_discount_gives_certain_ruin(bm, base_strategy, y):
    assert 1.0 - 1e-5 <= laplace_ruin(bm, base_strategy, 1e-8, y).value <= 1.0
    # periodic payments down to a make ruin certain
    assert laplace_ruin(bm, base_strategy, 0.0, y).value == pytest.approx(1.0, abs=1e-12)


def test_ratchet_only_zero_discount_is_ruin_probability(bm):
    # above b the surplus is Brownian with drift mu - c1 - c2 forever
    for y in (5.0, 8.0, 20.0):
        exact = bm_ruin_probability(0.9, 2.0, y)
        assert laplace_ruin_ratchet_only(bm, 5.0, 0.0, 0.1, 0.0, y) == pytest.approx(exact, rel=1e-10)
    # and the small-discount limit approaches it continuously
    small = laplace_ruin_ratchet_only(bm, 5.0, 0.0, 0.1, 1e-9, 8.0)
    assert small == pytest.approx(bm_ruin_probability(0.9, 2.0, 8.0), rel=1e-6)


def test_ratchet_only_against_finite_differences(bm):
    b, c1, c2 = 5.0, 0.1, 0.2
    xu, lu = fd_solve(1.0 - c1 - c2, 2.0, D, 0.0, 0.0, 0.0, 0.0, 1.0, 80.0, 0.002, slope_inf=0.0)
    top = float(np.interp(b, xu, lu))
    xl, ll = fd_solve(1.0 - c1, 2.0, D, 0.0, 0.0, 0.0, 0.0, 1.0, b, 0.002, top=top)
    sol = ((xl, ll), (xu, lu))
    for y in (1.0, 3.0, 5.0, 9.0):
        assert laplace_ruin_ratchet_only(bm, b, c1, c2, D, y) == pytest.approx(fd_at(sol, y), abs=1e-5)


def test_small_gamma_limit(bm):
    for y in (2.0, 5.0, 8.0):
        full = laplace_ruin(bm, Strategy(3.0, 5.0, 0.0, 0.1, 1e-5), D, y).value
        assert full == pytest.approx(laplace_ruin_ratchet_only(bm, 5.0, 0.0, 0.1, D, y), abs=1e-4)


def test_monotone_trends_base(bm):
    ys = np.linspace(0.0, 20.0, 101)
    ly = [laplace_ruin(bm, Strategy(3.0, 5.0, 0.0, 0.1, 1.0), D, y).value for y in ys]
    assert np.all(np.diff(ly) < 0)
    for y in (2.0, 8.0):
        lg = [laplace_ruin(bm, Strategy(3.0, 5.0, 0.0, 0.1, g), D, y).value for g in (0.25, 0.5, 1.0, 2.0, 4.0)]
        assert np.all(np.diff(lg) > 0)
        la = [laplace_ruin(bm, Strategy(a, 5.0, 0.0, 0.1, 1.0), D, y).value for a in np.linspace(0.25, 5.0, 20)]
        assert np.all(np.diff(la) <= 1e-12)
        # higher continuous rates lower the drift, so ruin comes sooner
        l1 = [laplace_ruin(bm, Strategy(3.0, 5.0, c1, 0.1, 1.0), D, y).value for c1 in np.linspace(0, 0.5, 11)]
        l2 = [laplace_ruin(bm, Strategy(3.0, 5.0, 0.0, c2, 1.0), D, y).value for c2 in np.linspace(0.02, 0.5, 11)]
        assert np.all(np.diff(l1) > 0)
        assert np.all(np.diff(l2) > 0)
    lb = [laplace_ruin(bm, Strategy(3.0, b, 0.0, 0.1, 1.0), D, 10.0).value for b in np.linspace(3.0, 40.0, 38)]
    assert np.all(np.diff(lb) <= 1e-12)


admissible = st.tuples(
    st.floats(0.3, 3.0),
    st.floats(0.3, 3.0),
    st.floats(0.1, 6.0),
    st.floats(0.0, 6.0),
    st.floats(0.0, 0.4),
    st.floats(0.01, 0.5),
    st.floats(0.05, 5.0),
    st.floats(0.0, 0.2),
)


@settings(max_examples=40, deadline=None)
@given(admissible)
def test_range_and_continuity(t):
    mu, sigma, a, gap, f1, f2, g, d = t
    model, s = LevyModel.brownian(mu, sigma), Strategy(a, a + gap, f1 * mu, f2 * mu, g)
    for y in np.linspace(0.0, s.b + 30.0, 40):
        assert 0.0 <= laplace_ruin(model, s, d, float(y)).value <= 1.0
    for edge in (s.a, s.b):
        l0 = laplace_ruin(model, s, d, edge).value
        assert abs(laplace_ruin(model, s, d, edge - 1e-6).value - l0) <= 1e-4


def test_rates_raise_ruin_transform_against_finite_differences():
    lo = fd_richardson(fd_ruin, 0.004, 1.0, 2.0, 3.0, 4.0, 0.0, 0.1, 1.0, D, xmax=80.0)(5.0)
    hi = fd_richardson(fd_ruin, 0.004, 1.0, 2.0, 3.0, 4.0, 0.2, 0.3, 1.0, D, xmax=80.0)(5.0)
    assert hi > lo + 0.05
    bm = LevyModel.brownian(1.0, 2.0)
    assert laplace_ruin(bm, Strategy(3.0, 4.0, 0.0, 0.1, 1.0), D, 5.0).value == pytest.approx(lo, abs=2e-6)
    assert laplace_ruin(bm, Strategy(3.0, 4.0, 0.2, 0.3, 1.0), D, 5.0).value == pytest.approx(hi, abs=2e-6)


def test_compound_poisson_backends_agree(cpe):
    s = Strategy(2.0, 4.0, 0.1, 0.2, 1.0)
    for y in (0.5, 3.0, 6.0):
        cf = laplace_ruin(cpe, s, D, y).value
        iv = laplace_ruin(cpe, s, D, y, backend=Backend.INVERSION).value
        assert cf == pytest.approx(iv, abs=1e-8)


def test_compound_poisson_zero_surplus_not_certain():
    cp = LevyModel.compound_poisson_exp(1.5, 0.0, 1.0, 2.0)
    l0 = laplace_ruin(cp, Strategy(2.0, 4.0, 0.1, 0.2, 1.0), D, 0.0).value
    assert 0.0 < l0 < 1.0


def test_large_surplus_converges(bm, base_strategy):
    far = [laplace_ruin(bm, base_strategy, D, y).value for y in (60.0, 200.0, 1000.0)]
    assert far[0] == pytest.approx(far[2], rel=1e-12)
    assert math.isfinite(far[1])

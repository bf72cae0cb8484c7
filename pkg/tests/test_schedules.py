import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slideopt.schedules import (big_p, ceil_count, default_d_tilde, p, schedule_compact_set,
                                schedule_custom, schedule_fixed_horizon, theta)

pos = st.floats(1e-3, 1e3)


def test_fixed_horizon_examples():
    s = schedule_fixed_horizon(1.0, 1.0, 1.0, 10, 1.0)
    assert s.big_t(2) == 40
    assert s.gamma(1) == 1.0
    assert s.big_gamma(3) == pytest.approx(1 / 6, abs=1e-16)
    assert s.beta(4) == pytest.approx(0.5)


def test_compact_set_examples():
    s = schedule_compact_set(1.0, 1.0, 1.0, 1.0)
    assert s.gamma(1) == 1.0
    assert s.big_t(1) == 8
    assert s.big_gamma(4) == pytest.approx(0.05, abs=1e-16)
    assert s.beta(1) == pytest.approx(9 * (1 - big_p(8)) / 4)


def test_inner_products_match_recursions():
    P, worst_p, worst_theta = 1.0, 0.0, 0.0
    for t in range(1, 2001):
        prev = P
        P = prev * p(t) / (1 + p(t))
        worst_p = max(worst_p, abs(P - big_p(t)) / big_p(t))
        th = (prev - P) / ((1 - P) * prev)
        worst_theta = max(worst_theta, abs(th - theta(t)))
    assert worst_p <= 1e-12 and worst_theta <= 1e-12
    assert theta(1) == 1.0


@pytest.mark.parametrize("make", [
    lambda: schedule_fixed_horizon(2.0, 1.0, 1.0, 50, 3.0),
    lambda: schedule_compact_set(2.0, 1.0, 1.0, 3.0),
])
def test_big_gamma_matches_product(make):
    s = make()
    g = 1.0
    for k in range(2, 200):
        g *= 1 - s.gamma(k)
        assert s.big_gamma(k) == pytest.approx(g, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(L=pos, M=st.floats(0, 1e3), nu=st.floats(0.1, 10), D=pos, N=st.integers(1, 60))
def test_policies_pass_their_checks(L, M, nu, D, N):
    for s in (schedule_fixed_horizon(L, M, nu, N, D), schedule_compact_set(L, M, nu, D)):
        s.check(L, nu, N)
        assert all(s.big_t(k) >= 1 for k in range(1, N + 1))


@settings(max_examples=60, deadline=None)
@given(L=pos, M=st.floats(0.01, 100), D=pos, N=st.integers(2, 40))
def test_ratio_monotonicity_selects_bound(L, M, D, N):
    # fixed horizon: ratio nonincreasing (part a); compact set: nondecreasing (part b)
    assert schedule_fixed_horizon(L, M, 1.0, N, D).ratio_nonincreasing(N)
    assert schedule_compact_set(L, M, 1.0, D).ratio_nondecreasing(N)


def test_check_rejects_bad_custom_schedule():
    bad = schedule_custom(1.0, 1.0, 1.0, [1.0, 0.1], [1.0, 0.5], [1, 1])
    with pytest.raises(ValueError, match="k=2"):
        bad.check()
    with pytest.raises(ValueError, match="gamma_1"):
        schedule_custom(1.0, 1.0, 1.0, [2.0], [0.5], [1]).check()
    with pytest.raises(ValueError):
        schedule_custom(1.0, 1.0, 1.0, [1.0], [1.0], [0])
    with pytest.raises(ValueError):
        schedule_fixed_horizon(1.0, 1.0, 1.0, 0, 1.0)
    with pytest.raises(ValueError):
        schedule_fixed_horizon(-1.0, 1.0, 1.0, 3, 1.0)


def test_custom_big_gamma_is_product():
    s = schedule_custom(1.0, 0.0, 1.0, [1, 1, 1], [1.0, 0.5, 0.25], [1, 2, 3])
    assert s.big_gamma(3) == pytest.approx(0.5 * 0.75)
    assert s.total_periods() == 6


def test_ceil_count_forgives_float_noise():
    assert ceil_count(40.000000000001) == 40
    assert ceil_count(40.2) == 41
    assert ceil_count(1e-9) == 1
    assert ceil_count(0.3 * 3 / 0.9) == 1


def test_default_d_tilde():
    assert default_d_tilde("fixed_horizon", 4.0, 1.0) == 6.0
    assert default_d_tilde("fixed_horizon", 4.0, 1.0, stochastic=True) == 3.0
    assert default_d_tilde("compact_set", 16.0, 1.0) == 81.0
    with pytest.raises(ValueError):
        default_d_tilde("custom", 1.0, 1.0)


def test_zero_m_gives_single_inner_step():
    s = schedule_fixed_horizon(1.0, 0.0, 1.0, 20, 1.0)
    assert s.total_periods() == 20


def test_describe_echoes_constants():
    d = schedule_fixed_horizon(1.5, 2.0, 1.0, 7, 3.0, sigma=0.5).describe()
    assert d["L"] == 1.5 and d["N"] == 7 and math.isclose(d["sigma2"], 0.25)

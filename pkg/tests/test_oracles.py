import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slideopt.oracles import (AbsLossNonsmooth, AdditiveNoise, L1Nonsmooth, QuadraticSmooth,
                              RowSampling, counters)
from slideopt.reference import CertificationError, _conic, _fista, reference_optimum
from slideopt.schedules import schedule_fixed_horizon
from slideopt.sliding import gs_run
from slideopt.smoothing import power_norm
from slideopt.zoo import DESK, ProblemSpec, desk_problem, make_problem

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def _rel_fd_error(f, grad, x, h=1e-5):
    g = grad(x)
    fd = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])
    return np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)


@pytest.mark.parametrize("family,params", [
    ("quad_l1", {"n": 10, "m": 15}),
    ("strong_quad_l1", {"n": 10, "m": 15, "mu": 0.5}),
    ("chain_quad", {"n": 12}),
    ("spectral_quad", {"n": 12}),
    ("saddle_linf", {"n": 10, "m": 6, "eta": 0.5}),
])
def test_gradient_matches_finite_differences(family, params):
    prob = make_problem(ProblemSpec(family, params, seed=2))
    rng = np.random.default_rng(0)
    worst = max(_rel_fd_error(prob.smooth.value, prob.smooth._gradient, rng.uniform(-1, 1, prob.dimension))
                for _ in range(100))
    assert worst <= 1e-5


@settings(max_examples=50, deadline=None)
@given(x=arrays(np.float64, 8, elements=finite), y=arrays(np.float64, 8, elements=finite),
       a=st.floats(0, 1))
def test_nonsmooth_terms_are_convex(x, y, a):
    rng = np.random.default_rng(1)
    terms = [L1Nonsmooth(8, 0.3), L1Nonsmooth(8, 0.3, B=rng.standard_normal((5, 8))),
             AbsLossNonsmooth(rng.standard_normal((20, 8)), rng.standard_normal(20), 0.7)]
    for h in terms:
        mid = h.value(a * x + (1 - a) * y)
        assert mid <= a * h.value(x) + (1 - a) * h.value(y) + 1e-10


@settings(max_examples=50, deadline=None)
@given(x=arrays(np.float64, 8, elements=finite), y=arrays(np.float64, 8, elements=finite))
def test_nonsmoothness_bound(x, y):
    # h(x) - h(y) - <h'(y), x - y> <= M ||x - y||
    rng = np.random.default_rng(2)
    for h in (L1Nonsmooth(8, 0.3), L1Nonsmooth(8, 0.3, B=rng.standard_normal((5, 8))),
              AbsLossNonsmooth(rng.standard_normal((20, 8)), rng.standard_normal(20), 0.7)):
        lhs = h.value(x) - h.value(y) - float(h._subgradient(y) @ (x - y))
        assert lhs <= h.bound * np.linalg.norm(x - y) + 1e-10
        assert np.linalg.norm(h._subgradient(x) - h._subgradient(y)) <= h.bound + 1e-12


def test_l1_bound_constant():
    assert L1Nonsmooth(50, 0.1).bound == pytest.approx(2 * 0.1 * np.sqrt(50), rel=1e-15)


def test_stochastic_sigma_zero_is_exact():
    h = L1Nonsmooth(6, 0.4)
    noise = AdditiveNoise(h, 0.0, 6)
    x = np.linspace(-1, 1, 6)
    stream = noise.stream(3, 0, 1, 4)
    for _ in range(4):
        np.testing.assert_array_equal(stream(x), h._subgradient(x))
    assert noise.calls == 4 and h.calls == 0


def test_additive_noise_moments():
    h = L1Nonsmooth(5, 0.2)
    sigma = 0.7
    noise = AdditiveNoise(h, sigma, 5)
    x = np.array([0.3, -0.1, 0.0, 2.0, -4.0])
    block = noise._draw(np.random.default_rng(0), 200000)
    norms = np.linalg.norm(block, axis=1)
    assert norms.max() <= sigma + 1e-12
    se = block.std(axis=0) / np.sqrt(len(block))
    assert np.all(np.abs(block.mean(axis=0)) <= 4 * se)
    assert np.mean(norms ** 2) == pytest.approx(sigma ** 2 / 3, rel=0.01)
    assert np.all(noise._sample(x, block, 7) == h._subgradient(x) + block[7])


def test_linf_noise_stays_in_dual_ball():
    noise = AdditiveNoise(L1Nonsmooth(4, 1.0), 0.5, 4, dual_norm="linf")
    block = noise._draw(np.random.default_rng(1), 1000)
    assert np.abs(block).max() <= 0.5 + 1e-15


def test_row_sampling_is_unbiased_and_bounded():
    rng = np.random.default_rng(5)
    h = AbsLossNonsmooth(rng.standard_normal((30, 4)), rng.standard_normal(30), 0.5)
    samp = RowSampling(h)
    x = rng.standard_normal(4)
    block = samp._draw(np.random.default_rng(9), 60000)
    draws = np.array([samp._sample(x, block, t) for t in range(len(block))])
    exact = h._subgradient(x)
    se = draws.std(axis=0) / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - exact) <= 4 * se)
    assert np.linalg.norm(draws - exact, axis=1).max() <= samp.sigma + 1e-12


def test_streams_are_keyed_and_reproducible():
    noise = AdditiveNoise(L1Nonsmooth(3, 1.0), 1.0, 3)
    x = np.zeros(3)
    a = [noise.stream(1, 2, 3, 5)(x) for _ in range(2)]
    np.testing.assert_array_equal(a[0], a[1])
    b = noise.stream(1, 2, 4, 5)(x)
    assert not np.array_equal(a[0], b)


def test_counters_are_exact():
    prob = make_problem(ProblemSpec("quad_l1", {"n": 5, "m": 7, "sigma": 0.1}, seed=1))
    assert counters(prob) == (0, 0, 0)
    x = np.zeros(5)
    prob.smooth.gradient(x)
    assert counters(prob) == (1, 0, 0)
    prob.nonsmooth.subgradient(x)
    assert counters(prob) == (1, 1, 0)
    prob.stochastic.stream(0, 0, 1, 2)(x)
    assert counters(prob) == (1, 1, 1)
    prob.psi(x), prob.smooth.value(x), prob.nonsmooth.value(x)
    assert counters(prob) == (1, 1, 1)
    fresh = prob.fresh()
    assert counters(fresh) == (0, 0, 0) and counters(prob) == (1, 1, 1)
    assert fresh.stochastic.nonsmooth is fresh.nonsmooth


def test_counters_after_gs_run(desk):
    prob = desk.fresh()
    sched = schedule_fixed_horizon(prob.L, prob.M, prob.nu, 5, 10.0)
    gs_run(prob, sched, 5)
    assert counters(prob) == (5, sched.total_periods(5), 0)
    assert sched.total_periods(5) == sum(sched.big_t(k) for k in range(1, 6))


# -- zoo ---------------------------------------------------------------------------

def test_quad_l1_lipschitz_by_power_iteration():
    prob = make_problem(ProblemSpec("quad_l1", {"n": 50, "m": 80, "lam": 0.1}, seed=7))
    top = np.linalg.eigvalsh(prob.smooth.Q)[-1]
    assert top <= prob.L <= top * (1 + 1e-10)


def test_power_norm_matches_svd():
    A = np.random.default_rng(4).standard_normal((30, 20))
    exact = np.linalg.norm(A, 2)
    assert exact <= power_norm(A) <= exact * (1 + 1e-10)


def test_zero_problem():
    prob = make_problem(ProblemSpec("quad_l1", {"A": np.eye(3), "b": np.zeros(3), "lam": 0.0,
                                                "set": "whole_space"}))
    x, val = reference_optimum(prob)
    np.testing.assert_array_equal(x, np.zeros(3))
    assert val == 0.0


def test_strong_quad_is_strongly_convex():
    prob = make_problem(ProblemSpec("strong_quad_l1", {"n": 8, "m": 4, "mu": 1.0}, seed=3))
    assert prob.mu == 1.0
    rng = np.random.default_rng(0)
    f = prob.smooth
    for _ in range(100):
        x, y = rng.standard_normal(8), rng.standard_normal(8)
        lower = f.value(x) + f._gradient(x) @ (y - x) + 0.5 * np.sum((y - x) ** 2)
        assert f.value(y) >= lower - 1e-10


def test_family_errors():
    with pytest.raises(ValueError, match="family"):
        make_problem(ProblemSpec("nope"))
    with pytest.raises(ValueError, match="mu"):
        make_problem(ProblemSpec("strong_quad_l1", {"n": 3, "m": 3}))
    with pytest.raises(ValueError, match="n"):
        make_problem(ProblemSpec("quad_l1", {"n": -1}))
    with pytest.raises(ValueError):
        desk_problem("missing")


def test_desk_instances_build():
    for name in DESK:
        prob = desk_problem(name)
        assert prob.geometry.contains(prob.x0)
        assert prob.L > 0


# -- reference optima ------------------------------------------------------------------

def test_reference_small_example():
    prob = make_problem(ProblemSpec("quad_l1", {"A": np.eye(2), "b": [2.0, 0.0], "lam": 1.0,
                                                "set": "whole_space"}))
    x, val = reference_optimum(prob, tol=1e-12)
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-10)
    assert val == pytest.approx(1.5, abs=1e-12)
    assert val <= 1.5


def test_reference_two_solvers_agree():
    prob = make_problem(ProblemSpec("quad_l1", {"n": 50, "m": 80, "lam": 0.1}, seed=7))
    _, up1, low1, _ = _fista(prob, 1e-10, 200000)
    _, up2, low2, _ = _conic(prob, 1e-10)
    assert up1 - low1 <= 1e-10 and up2 - low2 <= 1e-10
    assert abs(up1 - up2) <= 1e-9
    # each certified lower bound sits below the other solver's objective
    assert low1 <= up2 + 1e-12 and low2 <= up1 + 1e-12


def test_reference_rejects_tiny_tol(desk):
    with pytest.raises(ValueError):
        reference_optimum(desk, tol=1e-13)


def test_reference_certification_failure_is_reported():
    prob = make_problem(ProblemSpec("quad_l1", {"n": 30, "m": 40, "lam": 0.1}, seed=1))
    with pytest.raises(CertificationError):
        reference_optimum(prob, tol=1e-12, max_iter=5)


def test_desk_reference_certified(desk):
    assert desk.reference.certified_gap <= 1e-10
    assert desk.psi(desk.reference.x) - desk.reference.value <= 1e-10

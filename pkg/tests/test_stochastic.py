import math

import numpy as np
import pytest

from helpers import phi, phi_minimizer
from slideopt.oracles import CompositeProblem, counters
from slideopt.prox import ProxGeometry, bregman
from slideopt.reference import reference_optimum
from slideopt.schedules import big_p, default_d_tilde, schedule_compact_set, schedule_fixed_horizon
from slideopt.sliding import gs_run, prox_sliding
from slideopt.stochastic import (MsgsConfig, bound_bd_stochastic, bound_bp, msgs_run,
                                 sgs_compact_set_bound, sgs_fixed_horizon_bound, sgs_run,
                                 sprox_sliding)
from slideopt.zoo import ProblemSpec, make_problem


def _small(sigma=0.5, seed=0, **kw):
    params = {"n": 6, "m": 9, "lam": 0.3, "set": "box", "radius": 1.0, "sigma": sigma}
    params.update(kw)
    return make_problem(ProblemSpec("quad_l1", params, seed=seed))


def _schedule(prob, N, policy="fixed_horizon"):
    d = default_d_tilde(policy, prob.geometry.diameter(), prob.nu)
    if policy == "fixed_horizon":
        return schedule_fixed_horizon(prob.L, prob.M, prob.nu, N, d, prob.sigma)
    return schedule_compact_set(prob.L, prob.M, prob.nu, d, prob.sigma)


def test_noise_free_inner_loop_is_deterministic_loop():
    prob = _small(sigma=0.0)
    c, x = np.linspace(-1, 1, 6), np.zeros(6)
    stream = prob.stochastic.stream(0, 0, 1, 9)
    a = sprox_sliding(prob, c, x, 1.3, 9, stream=stream)
    b = prox_sliding(prob, c, x, 1.3, 9)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_sprox_counts_and_errors():
    prob = _small()
    sprox_sliding(prob, np.zeros(6), np.zeros(6), 1.0, 7, stream=prob.stochastic.stream(1, 0, 1, 7))
    assert counters(prob)[2] == 7
    with pytest.raises(ValueError):
        sprox_sliding(prob, np.zeros(6), np.zeros(6), 1.0, 7)
    with pytest.raises(ValueError):
        sprox_sliding(_deterministic(), np.zeros(6), np.zeros(6), 1.0, 3, stream=lambda u: u)
    with pytest.raises(RuntimeError):
        sprox_sliding(prob, np.zeros(6), np.zeros(6), 1.0, 8, stream=prob.stochastic.stream(1, 0, 1, 7))


def _deterministic():
    params = {"n": 6, "m": 9, "lam": 0.3, "set": "box", "radius": 1.0}
    return make_problem(ProblemSpec("quad_l1", params, seed=0))


def test_pathwise_inner_bound_and_its_mean():
    prob = _small(sigma=2.0, seed=2)
    rng = np.random.default_rng(0)
    n, T = prob.dimension, 20
    x = prob.geometry.project(rng.uniform(-1, 1, n), 1.0, prob.simple)
    c = rng.standard_normal(n)
    beta, M, nu, geom = 0.8, prob.M, prob.nu, prob.geometry
    u = phi_minimizer(prob, c, x, beta)
    lhs_all, rhs_all = [], []
    for seed in range(500):
        trace = []
        sprox_sliding(prob, c, x, beta, T, stream=prob.stochastic.stream(seed, 0, 1, T), trace=trace)
        acc = 0.0
        for t, (u_prev, H, u_t, ut) in enumerate(trace, start=1):
            pt, Pprev, Pt = 0.5 * t, big_p(t - 1), big_p(t)
            delta = H - prob.nonsmooth._subgradient(u_prev)
            acc += ((M + np.linalg.norm(delta)) ** 2 / (2 * nu * beta * pt)
                    + float(delta @ (u - u_prev))) / (pt * Pprev)
            lhs = beta / (1 - Pt) * bregman(geom, u_t, u) + phi(prob, c, x, beta, ut) \
                - phi(prob, c, x, beta, u)
            rhs = Pt / (1 - Pt) * (beta * bregman(geom, x, u) + acc)
            assert lhs <= rhs + 1e-9
        lhs_all.append(lhs)
        rhs_all.append(rhs)
    diff = np.array(lhs_all) - np.array(rhs_all)
    assert diff.mean() <= 2 * diff.std(ddof=1) / math.sqrt(diff.size)


def test_sgs_without_noise_matches_gs_bitwise(desk):
    prob = desk.with_sigma(0.0)
    sched = _schedule(prob, 15)
    a = sgs_run(prob, sched, 15, seed=3)
    b = gs_run(desk.fresh(), sched, 15)
    for u, v in zip(a.iterates, b.iterates):
        assert np.array_equal(u, v)


def test_sgs_is_reproducible(desk_noisy):
    sched = _schedule(desk_noisy, 8)
    a = sgs_run(desk_noisy.fresh(), sched, 8, seed=11)
    b = sgs_run(desk_noisy.fresh(), sched, 8, seed=11)
    c = sgs_run(desk_noisy.fresh(), sched, 8, seed=12)
    assert np.array_equal(a.x_final, b.x_final)
    assert not np.array_equal(a.x_final, c.x_final)


def test_sgs_counters(desk_noisy):
    prob = desk_noisy.fresh()
    sched = _schedule(prob, 6)
    rec = sgs_run(prob, sched, 6, seed=0)
    assert rec.grad_calls[-1] == 6
    assert rec.stoch_calls[-1] == sum(sched.big_t(k) for k in range(1, 7))
    assert counters(prob) == (6, 0, rec.stoch_calls[-1])
    assert prob.geometry.contains(rec.x_final)


def test_noise_is_unbiased_and_bounded():
    prob = _small(sigma=1.0)
    w = np.linspace(-1.0, 2.0, 6)
    x = np.full(6, 0.3)
    h = prob.nonsmooth._subgradient(x)
    vals = []
    for seed in range(300):
        for k in (1, 2):
            s = prob.stochastic.stream(seed, 0, k, 4)
            for _ in range(4):
                d = s(x) - h
                assert np.linalg.norm(d) <= prob.sigma * (1 + 1e-12)
                vals.append(float(d @ w))
    v = np.array(vals)
    assert abs(v.mean()) <= 4 * v.std(ddof=1) / math.sqrt(v.size)


def test_noise_trace_records_sample_norms(desk_noisy):
    sched = _schedule(desk_noisy, 3)
    rec = sgs_run(desk_noisy.fresh(), sched, 3, seed=1, noise_trace=True)
    norms = rec.extra["noise_norms"]
    assert norms.size == rec.stoch_calls[-1]
    assert norms.max() <= desk_noisy.sigma * (1 + 1e-12)


def test_expectation_bound_in_small_sample(desk_noisy):
    V0 = bregman(desk_noisy.geometry, desk_noisy.x0, desk_noisy.reference.x)
    N = 10
    sched = _schedule(desk_noisy, N)
    gaps = np.array([sgs_run(desk_noisy.fresh(), sched, N, seed=s, checkpoints="final").gaps[-1]
                     for s in range(30)])
    se = gaps.std(ddof=1) / math.sqrt(gaps.size)
    d = sched.d_tilde
    assert gaps.mean() <= bound_bd_stochastic(sched, V0, N) + 2 * se
    assert bound_bd_stochastic(sched, V0, N) <= sgs_fixed_horizon_bound(desk_noisy.L, desk_noisy.nu,
                                                                         V0, d, N) * (1 + 1e-12)
    vbar = desk_noisy.geometry.max_bregman(desk_noisy.reference.x)
    cs = _schedule(desk_noisy, N, "compact_set")
    assert bound_bd_stochastic(cs, vbar, N, part="b") <= sgs_compact_set_bound(
        desk_noisy.L, desk_noisy.nu, vbar, cs.d_tilde, N) * (1 + 1e-12)


def test_bound_bp_vanishes_without_noise():
    sched = schedule_fixed_horizon(1.0, 1.0, 1.0, 5, 1.0, 0.0)
    assert bound_bp(sched, 3.0, 5) == 0.0


def test_bound_bp_hand_value():
    # N = 1, T_1 = 1: alpha = 1, S = 2/beta, beta = 2 -> sigma sqrt(2 Vbar) + sigma^2
    sched = schedule_fixed_horizon(1.0, 0.0, 1.0, 1, 1.0, 1.0)
    assert sched.big_t(1) == 1
    assert bound_bp(sched, 2.0, 1) == pytest.approx(2.0 + 1.0, rel=1e-14)


def test_msgs_counts_and_phase_bounds(desk_strong):
    prob = desk_strong.fresh()
    cfg = MsgsConfig.for_problem(prob, prob.gap(prob.x0), 6)
    rec = msgs_run(prob, cfg, seed=0)
    assert cfg.N0 == math.ceil(4 * math.sqrt(2 * prob.L / (prob.nu * prob.mu)) - 1e-12)
    assert rec.grad_calls == [s * cfg.N0 for s in range(1, 7)]
    assert len(rec.gaps) == 6 and rec.targets[-1] == pytest.approx(cfg.delta0 / 64)
    slope = np.polyfit(np.log([2.0 ** s for s in range(1, 7)]), np.log(rec.stoch_calls), 1)[0]
    assert 0.8 <= slope <= 1.2


def test_msgs_noise_free_quadratic_halves():
    prob = make_problem(ProblemSpec("strong_quad_l1", {"n": 10, "m": 12, "lam": 0.0, "mu": 0.05,
                                                       "set": "whole_space", "sigma": 0.0}, seed=3))
    reference_optimum(prob, tol=1e-12)
    cfg = MsgsConfig.for_problem(prob, prob.gap(prob.x0), 6)
    rec = msgs_run(prob, cfg)
    for s, gap in enumerate(rec.gaps, start=1):
        assert gap <= cfg.delta0 / 2.0 ** s
    prev = cfg.delta0
    for gap in rec.gaps:
        assert gap <= 1.05 * prev / 2
        prev = gap if gap > 0 else prev


def test_msgs_rejections(desk_noisy):
    with pytest.raises(ValueError, match="mu"):
        MsgsConfig.for_problem(desk_noisy, 1.0, 3)
    src = make_problem(ProblemSpec("strong_quad_l1", {"n": 6, "m": 9, "lam": 0.3, "mu": 0.1,
                                                      "sigma": 0.1}, seed=0))
    ent = CompositeProblem(ProxGeometry.entropy_simplex(6), src.smooth, src.nonsmooth,
                           stochastic=src.stochastic)
    with pytest.raises(ValueError, match="euclidean"):
        msgs_run(ent, MsgsConfig(1.0, 2, ent.L, ent.nu, 0.1, ent.M, ent.sigma))

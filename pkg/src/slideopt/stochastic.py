"""Stochastic gradient sliding (SGS), its multi-phase restart (M-SGS) and bounds.

The inner loop is the deterministic one with h'(u) replaced by a sample
H(u, xi).  With a noiseless oracle the code path is identical, so SGS with
sigma = 0 reproduces GS bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .oracles import CompositeProblem
from .schedules import SlidingSchedule, big_p, schedule_fixed_horizon
from .sliding import Recorder, RunRecord, _linear_part, bound_bd, slide


def _require_stochastic(problem: CompositeProblem):
    if problem.stochastic is None:
        raise ValueError("problem has no stochastic oracle")


class _NoiseTap:
    """Wraps a sample stream and records ||H - h'(u)||_* (uncounted diagnostics)."""

    def __init__(self, stream, problem: CompositeProblem, sink: list):
        self.stream, self.problem, self.sink = stream, problem, sink

    def __call__(self, u):
        H = self.stream(u)
        delta = H - self.problem.nonsmooth._subgradient(u)
        self.sink.append(self.problem.geometry.dual_norm(delta))
        return H


def sprox_sliding(problem: CompositeProblem, g, x, beta: float, T: int,
                  schedule: SlidingSchedule | None = None, stream=None,
                  trace: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Stochastic prox-sliding: the deterministic recursion fed by ``stream`` samples.

    ``stream`` is a :class:`~slideopt.oracles.SampleStream` (or any callable
    returning H(u, xi)); it must provide at least ``T`` samples.
    """
    _require_stochastic(problem)
    if not beta > 0:
        raise ValueError("beta must be positive")
    if int(T) != T or T < 1:
        raise ValueError("T must be an integer >= 1")
    if stream is None:
        raise ValueError("a sample stream is required")
    x = np.asarray(x, dtype=float)
    if not problem.geometry.contains(x):
        raise ValueError("x is not feasible")
    return slide(problem, _linear_part(g), x, float(beta), int(T), stream, trace)


def sgs_run(problem: CompositeProblem, schedule: SlidingSchedule, N: int | None = None,
            seed: int = 0, phase: int = 0, x0=None,
            checkpoints: Iterable[int] | str | None = None, keep_iterates: bool = True,
            noise_trace: bool = False) -> RunRecord:
    """SGS: N gradients of f and sum_k T_k stochastic subgradient samples."""
    _require_stochastic(problem)
    N = schedule._n(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    schedule.check(problem.L, problem.nu, N)
    x = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    if not problem.geometry.contains(x):
        raise ValueError("x0 is not feasible")
    record = RunRecord("sgs", x, schedule=schedule.describe(), seed=seed)
    rec = Recorder(problem, record, N, checkpoints, keep_iterates)
    norms: list | None = [] if noise_trace else None
    xbar = x
    oracle = problem.stochastic
    for k in range(1, N + 1):
        gam = schedule.gamma(k)
        T = schedule.big_t(k)
        xl = (1.0 - gam) * xbar + gam * x
        c = problem.smooth.gradient(xl)
        sampler = oracle.stream(seed, phase, k, T)
        if norms is not None:
            sampler = _NoiseTap(sampler, problem, norms)
        x, xt = slide(problem, c, x, schedule.beta(k), T, sampler)
        xbar = (1.0 - gam) * xbar + gam * xt
        rec(k, xbar)
    record.x_final = xbar
    if norms is not None:
        record.extra["noise_norms"] = np.asarray(norms)
    return record


def sgs_fixed_horizon_bound(L: float, nu: float, V0: float, d_tilde: float, N: int) -> float:
    """Closed-form expectation guarantee of SGS under the fixed-horizon policy."""
    return 2.0 * L / (N * (N + 1)) * (3.0 * V0 / nu + 4.0 * d_tilde)


def sgs_compact_set_bound(L: float, nu: float, vbar: float, d_tilde: float, N: int) -> float:
    """Closed-form expectation guarantee of SGS under the compact-set policy."""
    return L / ((N + 1) * (N + 2)) * (27.0 * vbar / (2.0 * nu) + 16.0 * d_tilde / 3.0)


def bound_bd_stochastic(schedule: SlidingSchedule, V0: float, N: int | None = None,
                        part: str = "a") -> float:
    """Expectation bound of SGS summed term by term (uses M^2 + sigma^2 from the schedule)."""
    return bound_bd(schedule, V0, N, part=part, stochastic=True)


def bound_bp(schedule: SlidingSchedule, vbar: float, N: int | None = None,
             sigma: float | None = None) -> float:
    """Deviation scale of the SGS tail bound.

    sigma Gamma_N sqrt(2 Vbar / nu * sum alpha_{k,i}^2) + Gamma_N / nu * sum sigma^2 S_{k,i}
    with alpha_{k,i} = gamma_k P_{T_k} / (Gamma_k (1 - P_{T_k}) p_i P_{i-1}) and
    S_{k,i} = alpha_{k,i} / (beta_k p_i).
    """
    N = schedule._n(N)
    s = math.sqrt(schedule.noise) if sigma is None else float(sigma)
    if s == 0.0:
        return 0.0
    nu = schedule.nu
    sq, lin = [], []
    for k in range(1, N + 1):
        T = schedule.big_t(k)
        PT = big_p(T)
        i = np.arange(1, T + 1, dtype=float)
        p_i = i / 2.0
        p_prev = 2.0 / (i * (i + 1.0))
        alpha = schedule.gamma(k) * PT / (schedule.big_gamma(k) * (1.0 - PT) * p_i * p_prev)
        sq.append(float(np.sum(alpha ** 2)))
        lin.append(float(np.sum(alpha / (schedule.beta(k) * p_i))))
    GN = schedule.big_gamma(N)
    return s * GN * math.sqrt(2.0 * vbar / nu * math.fsum(sq)) + GN / nu * s * s * math.fsum(lin)


# -- multi-phase restarts ------------------------------------------------------

@dataclass
class MsgsConfig:
    """Constants of the multi-phase scheme; N0 defaults to ceil(4 sqrt(2L/(nu mu)))."""

    delta0: float
    phases: int
    L: float
    nu: float
    mu: float
    M: float
    sigma: float
    N0: int | None = None

    def __post_init__(self):
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if int(self.phases) != self.phases or self.phases < 1:
            raise ValueError("phases must be an integer >= 1")
        if not self.mu > 0:
            raise ValueError("the multi-phase scheme needs mu > 0")
        if self.N0 is None:
            self.N0 = math.ceil(4.0 * math.sqrt(2.0 * self.L / (self.nu * self.mu)) - 1e-12)
        if self.N0 < 1:
            raise ValueError("N0 must be >= 1")

    @classmethod
    def for_problem(cls, problem: CompositeProblem, delta0: float, phases: int,
                    N0: int | None = None) -> "MsgsConfig":
        return cls(delta0, phases, problem.L, problem.nu, problem.mu, problem.M,
                   problem.sigma, N0)

    def d_tilde(self, s: int) -> float:
        return self.delta0 / (self.nu * self.mu * 2.0 ** s)

    def schedule(self, s: int) -> SlidingSchedule:
        return schedule_fixed_horizon(self.L, self.M, self.nu, self.N0, self.d_tilde(s), self.sigma)


@dataclass
class MsgsRecord:
    ys: list = field(default_factory=list)
    psi: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    grad_calls: list = field(default_factory=list)
    stoch_calls: list = field(default_factory=list)
    config: MsgsConfig | None = None
    seed: int | None = None

    @property
    def targets(self) -> list:
        return [self.config.delta0 / 2.0 ** s for s in range(1, len(self.ys) + 1)]


def msgs_run(problem: CompositeProblem, config: MsgsConfig, seed: int = 0,
             x0=None) -> MsgsRecord:
    """Restart SGS S times, halving the target gap per phase."""
    _require_stochastic(problem)
    if config.mu <= 0 or problem.mu <= 0:
        raise ValueError("the multi-phase scheme needs a strongly convex f (mu > 0)")
    if not problem.geometry.quadratic_growth:
        raise ValueError("the multi-phase scheme needs V(x, z) <= ||x - z||^2 / 2 (euclidean geometry)")
    y = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    out = MsgsRecord(config=config, seed=seed)
    for s in range(1, config.phases + 1):
        run = sgs_run(problem, config.schedule(s), config.N0, seed=seed, phase=s, x0=y,
                      checkpoints="final", keep_iterates=False)
        y = run.x_final
        out.ys.append(y)
        out.psi.append(run.psi[-1])
        if problem.reference is not None:
            out.gaps.append(run.gaps[-1])
        g, _, q = problem.counters()
        out.grad_calls.append(g)
        out.stoch_calls.append(q)
    return out

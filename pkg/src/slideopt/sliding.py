"""Deterministic gradient sliding (GS) and its inner prox-sliding procedure.

One outer iteration evaluates grad f once at the extrapolated point, freezes the
linearization and then spends T_k cheap subgradient steps on h inside
:func:`prox_sliding`.  The outer loop is an accelerated scheme driven by a
:class:`~slideopt.schedules.SlidingSchedule`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .oracles import CompositeProblem
from .schedules import SlidingSchedule, big_p, theta


@dataclass
class RunRecord:
    """Trace of one run.  Lists are aligned with ``ks`` (recorded outer iterations)."""

    algorithm: str
    x_final: np.ndarray
    ks: list = field(default_factory=list)
    psi: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    grad_calls: list = field(default_factory=list)
    subgrad_calls: list = field(default_factory=list)
    stoch_calls: list = field(default_factory=list)
    elapsed: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    schedule: dict = field(default_factory=dict)
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def final_gap(self) -> float | None:
        return self.gaps[-1] if self.gaps else None

    @property
    def totals(self) -> tuple[int, int, int]:
        return (self.grad_calls[-1], self.subgrad_calls[-1], self.stoch_calls[-1])


class Recorder:
    """Fills a :class:`RunRecord` at the requested outer iterations."""

    def __init__(self, problem: CompositeProblem, record: RunRecord, N: int,
                 checkpoints=None, keep_iterates: bool = True):
        self.problem = problem
        self.record = record
        if checkpoints is None:
            self.when = None
        elif checkpoints == "final":
            self.when = {N}
        else:
            self.when = set(int(k) for k in checkpoints) | {N}
        self.keep = keep_iterates
        self.t0 = time.perf_counter()

    def __call__(self, k: int, xbar: np.ndarray):
        if self.when is not None and k not in self.when:
            return
        rec, prob = self.record, self.problem
        g, s, q = prob.counters()
        rec.ks.append(k)
        val = prob.psi(xbar)
        rec.psi.append(val)
        if prob.reference is not None:
            rec.gaps.append(val - prob.reference.value)
        rec.grad_calls.append(g)
        rec.subgrad_calls.append(s)
        rec.stoch_calls.append(q)
        rec.elapsed.append(time.perf_counter() - self.t0)
        if self.keep:
            rec.iterates.append(xbar.copy())


def _linear_part(g) -> np.ndarray:
    """Accept either the slope vector or a (constant, slope) pair."""
    if isinstance(g, tuple):
        return np.asarray(g[1], dtype=float)
    return np.asarray(g, dtype=float)


def slide(problem: CompositeProblem, c: np.ndarray, x: np.ndarray, beta: float, T: int,
          subgrad: Callable[[np.ndarray], np.ndarray],
          trace: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shared inner loop; ``subgrad`` is either the exact or a sampled oracle."""
    geom, simple = problem.geometry, problem.simple
    euclid = geom.kind == "euclidean"
    base = beta * geom.mirror(x)
    shift = x - c / beta  # euclidean: u_t = P((shift + p_t u_{t-1} - s/beta) / (1 + p_t))
    u = x
    ut = x
    for t in range(1, T + 1):
        pt = 0.5 * t
        s = subgrad(u)
        if euclid:
            W = beta * (1.0 + pt)
            u_new = geom.project((shift + pt * u - s / beta) / (1.0 + pt), W, simple)
        else:
            u_new = geom.solve(base + (beta * pt) * geom.mirror(u), beta * (1.0 + pt), c + s, simple)
        th = theta(t)
        ut = u_new if t == 1 else (1.0 - th) * ut + th * u_new
        if trace is not None:
            trace.append((u, s, u_new, ut))
        u = u_new
    return u, ut


def prox_sliding(problem: CompositeProblem, g, x, beta: float, T: int,
                 schedule: SlidingSchedule | None = None,
                 trace: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Run T inner steps against the frozen linearization ``g`` of f.

    Each step solves
        u_t = argmin <c + h'(u_{t-1}), u> + beta V(x, u) + beta p_t V(u_{t-1}, u) + chi(u)
    and averages u~_t = (1 - theta_t) u~_{t-1} + theta_t u_t.  Returns (u_T, u~_T).
    ``schedule`` is accepted for symmetry with the outer loop; the inner constants
    p_t and theta_t are the same for every built-in policy.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if int(T) != T or T < 1:
        raise ValueError("T must be an integer >= 1")
    x = np.asarray(x, dtype=float)
    if not problem.geometry.contains(x):
        raise ValueError("x is not feasible")
    if not problem.geometry.supports(problem.simple):
        raise ValueError("simple term is not supported by the geometry")
    return slide(problem, _linear_part(g), x, float(beta), int(T),
                 problem.nonsmooth.subgradient, trace)


def gs_run(problem: CompositeProblem, schedule: SlidingSchedule, N: int | None = None,
           x0=None, checkpoints: Iterable[int] | str | None = None,
           keep_iterates: bool = True) -> RunRecord:
    """Gradient sliding: N gradient evaluations and sum_k T_k subgradient evaluations."""
    N = schedule._n(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    schedule.check(problem.L, problem.nu, N)
    x = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    if not problem.geometry.contains(x):
        raise ValueError("x0 is not feasible")
    record = RunRecord("gs", x, schedule=schedule.describe())
    rec = Recorder(problem, record, N, checkpoints, keep_iterates)
    xbar = x
    sub = problem.nonsmooth.subgradient
    for k in range(1, N + 1):
        gam = schedule.gamma(k)
        xl = (1.0 - gam) * xbar + gam * x
        c = problem.smooth.gradient(xl)
        x, xt = slide(problem, c, x, schedule.beta(k), schedule.big_t(k), sub)
        xbar = (1.0 - gam) * xbar + gam * xt
        rec(k, xbar)
    record.x_final = xbar
    return record


def inner_weights(T: int) -> np.ndarray:
    """Coefficients of u~_T as a combination of u_1..u_T."""
    w = np.zeros(T)
    for t in range(1, T + 1):
        th = theta(t)
        w[: t - 1] *= 1.0 - th
        w[t - 1] = th
    return w


def _inner_sum(T: int) -> float:
    """sum_{i<=T} 1 / (p_i^2 P_{i-1}) by direct summation."""
    i = np.arange(1, T + 1, dtype=float)
    p_i = i / 2.0
    p_prev = 2.0 / (i * (i + 1.0))
    return float(np.sum(1.0 / (p_i ** 2 * p_prev)))


def bound_bd(schedule: SlidingSchedule, V0: float, N: int | None = None,
             constants: dict | None = None, part: str = "a",
             stochastic: bool = False) -> float:
    """Guaranteed bound on Psi(x_N) - Psi*, summed term by term.

    ``part='a'``: V0 = V(x0, x*), first term Gamma_N beta_1 V0 / (1 - P_{T_1}).
    ``part='b'``: V0 = max_x V(x, x*), first term gamma_N beta_N V0 / (1 - P_{T_N}).
    The deterministic sum carries M^2 / (2 nu); the stochastic one (M^2 + sigma^2) / nu.
    """
    N = schedule._n(N)
    c = constants or {}
    nu = c.get("nu", schedule.nu)
    M = c.get("M", schedule.M)
    sigma2 = c.get("sigma", 0.0) ** 2 if "sigma" in c else schedule.noise
    GN = schedule.big_gamma(N)
    if part == "a":
        first = GN * schedule.beta(1) * V0 / (1.0 - big_p(schedule.big_t(1)))
    elif part == "b":
        first = schedule.gamma(N) * schedule.beta(N) * V0 / (1.0 - big_p(schedule.big_t(N)))
    else:
        raise ValueError("part must be 'a' or 'b'")
    terms = []
    for k in range(1, N + 1):
        T = schedule.big_t(k)
        PT = big_p(T)
        coef = schedule.gamma(k) * PT / (schedule.big_gamma(k) * schedule.beta(k) * (1.0 - PT))
        terms.append(coef * _inner_sum(T))
    total = float(np.sum(terms))
    if stochastic:
        return first + (M ** 2 + sigma2) * GN / nu * total
    return first + M ** 2 * GN / (2.0 * nu) * total


def fixed_horizon_bound(L: float, nu: float, V0: float, d_tilde: float, N: int) -> float:
    """Closed-form GS guarantee for the fixed-horizon policy."""
    return 2.0 * L / (N * (N + 1)) * (3.0 * V0 / nu + 2.0 * d_tilde)


def compact_set_bound(L: float, nu: float, vbar: float, d_tilde: float, N: int) -> float:
    """Closed-form GS guarantee for the compact-set policy."""
    return L / ((N + 1) * (N + 2)) * (27.0 * vbar / (2.0 * nu) + 8.0 * d_tilde / 3.0)


def fixed_horizon_n_for(L: float, nu: float, V0: float, d_tilde: float, eps: float) -> int:
    """Smallest N with :func:`fixed_horizon_bound` <= eps."""
    a = 2.0 * L * (3.0 * V0 / nu + 2.0 * d_tilde) / eps
    N = max(1, int(np.floor(np.sqrt(a))) - 1)
    while N * (N + 1) < a:
        N += 1
    return N

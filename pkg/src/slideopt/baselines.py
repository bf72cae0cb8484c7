"""Comparator first-order methods.

* proximal gradient, with h folded into the prox step,
* accelerated proximal gradient with exact h (h folded into the prox step),
* accelerated gradient with h replaced by its linearization at the extrapolated
  point, which costs one grad f and one subgradient per iteration.

The last one is the natural competitor of gradient sliding: it reaches the same
optimal subgradient complexity but evaluates grad f at every subgradient step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .oracles import CompositeProblem
from .prox import SimpleTerm
from .sliding import Recorder, RunRecord

BASELINE_KINDS = ("prox_gradient", "accel_prox_exact_h", "accel_linearized_h")


def _sequence(value, N: int, name: str) -> np.ndarray:
    if callable(value):
        seq = np.array([float(value(k)) for k in range(1, N + 1)])
    elif np.ndim(value) == 0:
        seq = np.full(N, float(value))
    else:
        seq = np.asarray(value, dtype=float)
        if seq.shape != (N,):
            raise ValueError(f"{name} needs {N} entries, got {seq.shape}")
    if not np.all(np.isfinite(seq)):
        raise ValueError(f"{name} has non-finite entries")
    return seq


def folded_simple_term(problem: CompositeProblem) -> SimpleTerm:
    """chi + h as one prox-friendly term, or ValueError when h does not fold."""
    h_term = problem.nonsmooth.as_simple_term()
    if h_term is None:
        raise ValueError(
            f"h ({type(problem.nonsmooth).__name__}) is not representable in the prox step")
    folded = problem.simple + h_term
    if not problem.geometry.supports(folded):
        raise ValueError("h folded into the prox step is not supported by the geometry")
    return folded


@dataclass
class BaselineConfig:
    """Stepsizes for the accelerated baselines (callables of k or sequences)."""

    kind: str
    betas: Sequence[float] | Callable | None = None
    gammas: Sequence[float] | Callable | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline {self.kind!r}")


def accel_exact_config(L: float, nu: float) -> BaselineConfig:
    """beta_k = 2L/(nu k), gamma_k = 2/(k+2)."""
    return BaselineConfig("accel_prox_exact_h", lambda k: 2.0 * L / (nu * k),
                          lambda k: 2.0 / (k + 2))


def accel_linearized_config(L: float, M: float, nu: float, N: int, D: float) -> BaselineConfig:
    """gamma_k = 2/(k+1), beta_k = 2L/(nu k) + c with c = (M/2) sqrt((N+1)/(nu D)).

    The extra constant c pays for linearizing h; ``D`` must dominate V(x_k, x*)
    along the run (a prox-diameter of X works).
    """
    c = 0.5 * M * math.sqrt((N + 1) / (nu * D)) if M > 0 else 0.0
    return BaselineConfig("accel_linearized_h", lambda k: 2.0 * L / (nu * k) + c,
                          lambda k: 2.0 / (k + 1), meta={"c": c, "D": D})


def prox_grad_run(problem: CompositeProblem, N: int, beta, x0=None,
                  checkpoints: Iterable[int] | str | None = None,
                  keep_iterates: bool = True) -> RunRecord:
    """x_k = argmin <grad f(x_{k-1}), u> + h(u) + chi(u) + beta_k V(x_{k-1}, u)."""
    if int(N) != N or N < 1:
        raise ValueError("N must be an integer >= 1")
    simple = folded_simple_term(problem)
    betas = _sequence(beta, N, "beta")
    if np.any(betas <= 0):
        raise ValueError("beta_k must be positive")
    geom = problem.geometry
    x = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    record = RunRecord("prox_grad", x, schedule={"policy": "prox_gradient"})
    rec = Recorder(problem, record, N, checkpoints, keep_iterates)
    for k in range(1, N + 1):
        b = betas[k - 1]
        g = problem.smooth.gradient(x)
        x = geom.solve(b * geom.mirror(x), b, g, simple)
        rec(k, x)
    record.x_final = x
    return record


def accel_prox_run(problem: CompositeProblem, N: int, config: BaselineConfig, x0=None,
                   checkpoints: Iterable[int] | str | None = None,
                   keep_iterates: bool = True) -> RunRecord:
    """Accelerated scheme: x_ = (1-g) xbar + g x; prox step; xbar = (1-g) xbar + g x."""
    if int(N) != N or N < 1:
        raise ValueError("N must be an integer >= 1")
    if config.kind == "prox_gradient":
        raise ValueError("use prox_grad_run for the plain proximal gradient method")
    linearized = config.kind == "accel_linearized_h"
    simple = problem.simple if linearized else folded_simple_term(problem)
    betas = _sequence(config.betas, N, "beta")
    gammas = _sequence(config.gammas, N, "gamma")
    if np.any(betas <= 0):
        raise ValueError("beta_k must be positive")
    if np.any((gammas < 0) | (gammas > 1)):
        raise ValueError("gamma_k must lie in [0, 1]")
    geom = problem.geometry
    x = problem.x0 if x0 is None else np.asarray(x0, dtype=float)
    xbar = x
    name = "accel_linearized" if linearized else "accel_prox"
    record = RunRecord(name, x, schedule={"policy": config.kind, **config.meta})
    rec = Recorder(problem, record, N, checkpoints, keep_iterates)
    for k in range(1, N + 1):
        b, gam = betas[k - 1], gammas[k - 1]
        xl = (1.0 - gam) * xbar + gam * x
        g = problem.smooth.gradient(xl)
        if linearized:
            g = g + problem.nonsmooth.subgradient(xl)
        x = geom.solve(b * geom.mirror(x), b, g, simple)
        xbar = (1.0 - gam) * xbar + gam * x
        rec(k, xbar)
    record.x_final = xbar
    return record


def prox_grad_bound(beta: float, V0: float, N: int) -> float:
    """Guarantee of the constant-step method when nu * beta >= L."""
    return beta * V0 / N


def accel_exact_bound(L: float, nu: float, V0: float, gap0: float, N: int) -> float:
    """Guarantee of :func:`accel_exact_config`: 2/((N+1)(N+2)) (gap0 + 4 L V0 / nu)."""
    return 2.0 / ((N + 1) * (N + 2)) * (gap0 + 4.0 * L * V0 / nu)


def accel_linearized_bound(L: float, M: float, nu: float, V0: float, D: float, N: int) -> float:
    """Guarantee of :func:`accel_linearized_config` with the same N and D."""
    c = 0.5 * M * math.sqrt((N + 1) / (nu * D)) if M > 0 else 0.0
    head = 2.0 / (N * (N + 1)) * ((2.0 * L / nu + c) * V0 + c * (N - 1) * D)
    return head + (M * M / (2.0 * nu * c) if c > 0 else 0.0)

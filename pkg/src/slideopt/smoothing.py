"""Smoothing of bilinear max-type functions and the smoothed SGS driver.

A nonsmooth f(x) = max_{y in Y} <Ax, y> - J(y) is replaced by

    f_eta(x) = max_{y in Y} <Ax, y> - J(y) - eta d(y),

where d is a prox-function of Y centred at its minimizer.  f_eta has an
||A||^2 / (eta nu')-Lipschitz gradient A' y(x) and satisfies
f - eta D_Y <= f_eta <= f.  Two dual sets are supported, each with a closed-form
inner maximization:

* ``ball``: Y = {||y||_2 <= r}, d(y) = ||y||^2 / 2, D_Y = r^2 / 2, nu' = 1;
* ``simplex``: Y = unit simplex in R^m, d(y) = sum y log y + log m, D_Y = log m,
  nu' = 1 with respect to ||.||_1.

J is zero or linear, J(y) = <b, y>.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .oracles import CompositeProblem, SmoothOracle
from .schedules import default_d_tilde, schedule_fixed_horizon
from .sliding import RunRecord


def power_norm(A: np.ndarray, tol: float = 1e-10, max_iter: int = 100000,
               seed: int = 0) -> float:
    """Spectral norm of A by power iteration on A'A, rounded up.

    Iterates until the Rayleigh quotient moves by less than tol/1000 (relative)
    and inflates the result by tol/10, so the value is an upper bound within
    ``tol`` of ||A||_2 whenever the iteration has converged.
    """
    A = np.asarray(A, dtype=float)
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        done = abs(lam_new - lam) <= 1e-3 * tol * max(lam_new, 1e-300)
        lam = lam_new
        if done:
            break
    return math.sqrt(lam * (1.0 + 0.1 * tol))


class SaddleSmoother:
    """Bilinear f(x) = max_y <Ax, y> - <b, y> over a ball or simplex Y."""

    def __init__(self, A, dual: str = "simplex", radius: float = 1.0, b=None,
                 primal_norm: str = "l2"):
        self.A = np.asarray(A, dtype=float)
        m, n = self.A.shape
        if dual not in ("ball", "simplex"):
            raise ValueError(f"unsupported dual set {dual!r}")
        if dual == "ball" and not radius > 0:
            raise ValueError("ball radius must be positive")
        self.dual, self.radius = dual, float(radius)
        self.b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
        self.dual_modulus = 1.0
        if dual == "ball":
            self.center = np.zeros(m)
            self.d_y = 0.5 * self.radius ** 2
        else:
            self.center = np.full(m, 1.0 / m)
            self.d_y = math.log(m)
        self.primal_norm = primal_norm
        self.A_norm = self._operator_norm(primal_norm)
        self.dimension = n

    def _operator_norm(self, primal: str) -> float:
        """Induced norm from the primal norm to the dual of Y's norm."""
        A = self.A
        if primal == "l2":
            if self.dual == "ball":
                return power_norm(A)
            return float(np.linalg.norm(A, axis=1).max())  # l2 -> l_inf
        if primal == "l1":
            if self.dual == "ball":
                return float(np.linalg.norm(A, axis=0).max())  # l1 -> l2
            return float(np.abs(A).max())  # l1 -> l_inf
        raise ValueError(f"unknown primal norm {primal!r}")

    def describe(self) -> dict:
        return {"dual": self.dual, "A_norm": self.A_norm, "D_Y": self.d_y,
                "nu_dual": self.dual_modulus, "norm_pair": f"{self.primal_norm}->dual({self.dual})"}

    def prox_d(self, y) -> float:
        """d(y), the dual prox-function centred at argmin of v."""
        y = np.asarray(y, dtype=float)
        if self.dual == "ball":
            return 0.5 * float(y @ y)
        return float(np.sum(np.where(y > 0, y * np.log(np.where(y > 0, y, 1.0)), 0.0))
                     + math.log(y.size))

    def exact_value(self, x) -> float:
        z = self.A @ x - self.b
        if self.dual == "ball":
            return self.radius * float(np.linalg.norm(z))
        return float(z.max())

    def value_grad(self, x, eta: float):
        """(f_eta(x), grad f_eta(x), y(x))."""
        if not eta > 0:
            raise ValueError("eta must be positive")
        z = self.A @ x - self.b
        if self.dual == "ball":
            y = z / eta
            ny = float(np.linalg.norm(y))
            if ny > self.radius:
                y *= self.radius / ny
            val = float(z @ y) - 0.5 * eta * float(y @ y)
        else:
            w = z / eta
            lse = logsumexp(w)
            y = np.exp(w - lse)
            val = eta * (lse - math.log(z.size))
        return val, self.A.T @ y, y

    def smooth_oracle(self, eta: float) -> "SmoothedSaddle":
        return SmoothedSaddle(self, eta)


class SmoothedSaddle(SmoothOracle):
    """f_eta as a counted smooth oracle; each gradient applies A and A' once."""

    def __init__(self, smoother: SaddleSmoother, eta: float):
        if not eta > 0:
            raise ValueError("eta must be positive")
        self.smoother, self.eta = smoother, float(eta)
        self.dimension = smoother.dimension
        L = smoother.A_norm ** 2 / (self.eta * smoother.dual_modulus)
        super().__init__(L, 0.0)

    @property
    def operator_applications(self) -> int:
        return 2 * self.calls

    def _value(self, x):
        return self.smoother.value_grad(x, self.eta)[0]

    def _gradient(self, x):
        return self.smoother.value_grad(x, self.eta)[1]


def smoothed_value_grad(smoother: SaddleSmoother, x, eta: float | None = None):
    """Closed-form maximizer of the smoothed inner problem: (value, gradient, y)."""
    if eta is None:
        raise ValueError("eta is required")
    return smoother.value_grad(np.asarray(x, dtype=float), eta)


def choose_eta(A_norm: float, N: int, D_X: float, D_Y: float, nu: float, nu_dual: float) -> float:
    """eta = (2 ||A|| / N) sqrt(3 D_X / (nu nu' D_Y))."""
    for name, v in (("A_norm", A_norm), ("N", N), ("D_X", D_X), ("D_Y", D_Y),
                    ("nu", nu), ("nu_dual", nu_dual)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return 2.0 * A_norm / N * math.sqrt(3.0 * D_X / (nu * nu_dual * D_Y))


def ssgs_bound(A_norm: float, D_X: float, D_Y: float, nu: float, nu_dual: float, N: int) -> float:
    """Expected-gap guarantee of the smoothed SGS run with :func:`choose_eta`."""
    return 4.0 * math.sqrt(3.0) * A_norm * math.sqrt(D_X * D_Y) / (math.sqrt(nu * nu_dual) * N)


def smoothed_problem(problem: CompositeProblem, eta: float) -> CompositeProblem:
    """Copy of a saddle problem whose smooth oracle is f_eta (fresh counters)."""
    if problem.saddle is None:
        raise ValueError("problem has no saddle-structured f")
    fresh = problem.fresh()
    fresh.smooth = problem.saddle.smooth_oracle(eta)
    return fresh


def ssgs_run(problem: CompositeProblem, N: int, d_tilde: float | None = None,
             seed: int = 0, D_X: float | None = None, checkpoints=None,
             keep_iterates: bool = False) -> RunRecord:
    """SGS on f_eta + h + chi with eta from :func:`choose_eta`; gaps use the exact f."""
    from .stochastic import sgs_run

    if problem.saddle is None:
        raise ValueError("problem has no saddle-structured f")
    geom = problem.geometry
    if not geom.feasible_set.bounded:
        raise ValueError("smoothed SGS needs a bounded feasible set")
    if problem.stochastic is None:
        problem = problem.with_sigma(0.0)
    sm = problem.saddle
    D_X = geom.diameter() if D_X is None else D_X
    eta = choose_eta(sm.A_norm, N, D_X, sm.d_y, geom.modulus, sm.dual_modulus)
    run_problem = problem.fresh()
    run_problem.smooth = sm.smooth_oracle(eta)
    L_eta = run_problem.smooth.lipschitz
    if d_tilde is None:
        d_tilde = default_d_tilde("fixed_horizon", D_X, geom.modulus, stochastic=True)
    sched = schedule_fixed_horizon(L_eta, problem.M, geom.modulus, N, d_tilde, problem.sigma)
    rec = sgs_run(run_problem, sched, N, seed=seed, checkpoints=checkpoints,
                  keep_iterates=keep_iterates)
    rec.algorithm = "ssgs"
    rec.extra.update(eta=eta, L_eta=L_eta, D_X=D_X,
                     operator_applications=run_problem.smooth.operator_applications,
                     bound=ssgs_bound(sm.A_norm, D_X, sm.d_y, geom.modulus, sm.dual_modulus, N),
                     **sm.describe())
    return rec

"""Seeded desk-scale problem families.

``quad_l1``         f = s/2 ||Ax - b||^2, h = s lam ||Bx||_1
``strong_quad_l1``  quad_l1 plus mu/2 ||x||^2 inside f
``stoch_abs``       f = s/2 ||Ax - b||^2, h = s lam mean_j |<a_j, x> - c_j|, sampled by rows
``saddle_linf``     f = s ||Ax - b||_inf (smoothed on demand), h = s lam ||x||_1
``chain_quad``      worst-case tridiagonal quadratic, optionally plus lam ||x||_1
``spectral_quad``   diagonal quadratic with log-spaced curvatures and equal mass per mode

Every family takes a ``scale`` s multiplying the whole objective, so absolute
accuracies can be matched to a laptop budget without changing the geometry.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .oracles import (AbsLossNonsmooth, AdditiveNoise, CompositeProblem, L1Nonsmooth,
                      LeastSquaresFactor, QuadraticSmooth, Reference, RowSampling,
                      ZeroNonsmooth)
from .prox import FeasibleSet, ProxGeometry, SimpleTerm
from .smoothing import SaddleSmoother, power_norm

FAMILIES = ("quad_l1", "strong_quad_l1", "stoch_abs", "saddle_linf", "chain_quad",
            "spectral_quad")


@dataclass
class ProblemSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def describe(self) -> dict:
        out = {"family": self.family, "seed": self.seed}
        for k, v in self.params.items():
            out[k] = np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
        return out


def _feasible(params: dict, n: int) -> FeasibleSet:
    kind = params.get("set", "box")
    R = float(params.get("radius", 1.0))
    if kind == "box":
        return FeasibleSet.box(-R, R)
    if kind == "ball":
        return FeasibleSet.ball(np.zeros(n), R)
    if kind == "whole_space":
        return FeasibleSet.whole_space()
    raise ValueError(f"unknown feasible set {kind!r}")


def _positive(params: dict, name: str, default):
    v = params.get(name, default)
    if v is None or not v > 0:
        raise ValueError(f"parameter {name!r} must be positive, got {v}")
    return v


def _regression_data(rng, n, m, sparsity, noise):
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x_true = np.zeros(n)
    k = max(1, int(round(sparsity * n)))
    idx = rng.choice(n, k, replace=False)
    x_true[idx] = rng.uniform(0.3, 1.0, k) * rng.choice([-1.0, 1.0], k)
    b = A @ x_true + noise * rng.standard_normal(m)
    return A, b


def _quad_l1(spec: ProblemSpec, strong: bool) -> CompositeProblem:
    p, rng = spec.params, np.random.default_rng(spec.seed)
    scale = float(_positive(p, "scale", 1.0))
    lam = float(p.get("lam", 0.1))
    if lam < 0 or not np.isfinite(lam):
        raise ValueError("parameter 'lam' must be finite and nonnegative")
    if "A" in p:
        A = np.atleast_2d(np.asarray(p["A"], dtype=float))
        m, n = A.shape
        b = np.asarray(p.get("b", np.zeros(m)), dtype=float)
        if b.shape != (m,):
            raise ValueError("parameter 'b' has the wrong length")
    else:
        n, m = int(_positive(p, "n", 50)), int(_positive(p, "m", 80))
        A, b = _regression_data(rng, n, m, float(p.get("sparsity", 0.2)),
                                float(p.get("noise", 0.1)))
    mu = float(p.get("mu", 0.0))
    if strong and not mu > 0:
        raise ValueError("parameter 'mu' must be positive for strong_quad_l1")
    if mu < 0:
        raise ValueError("parameter 'mu' must be nonnegative")
    B = None
    if p.get("B", "identity") == "random":
        rows = int(p.get("p", n))
        B = rng.standard_normal((rows, n)) / np.sqrt(rows)
    L = scale * power_norm(A) ** 2 + mu
    smooth = QuadraticSmooth.least_squares(A, b, mu=mu, scale=scale, lipschitz=L)
    if not strong and mu == 0:
        smooth.strong_convexity = 0.0
    geom = ProxGeometry.euclidean(n, _feasible(p, n))
    h = L1Nonsmooth(n, scale * lam, B) if lam > 0 else ZeroNonsmooth(n)
    sigma = float(p.get("sigma", 0.0))
    stoch = AdditiveNoise(h, scale * sigma, n) if "sigma" in p else None
    prob = CompositeProblem(geom, smooth, h, SimpleTerm.zero(), stoch,
                            name=spec.family, info={"spec": spec.describe()})
    if lam == 0 and not np.any(b) and mu == 0:
        prob.reference = Reference(np.zeros(n), 0.0, 0.0, "zero problem")
    return prob


def _stoch_abs(spec: ProblemSpec) -> CompositeProblem:
    p, rng = spec.params, np.random.default_rng(spec.seed)
    n, m = int(_positive(p, "n", 30)), int(_positive(p, "m", 40))
    K = int(_positive(p, "samples", 200))
    scale = float(_positive(p, "scale", 1.0))
    lam = float(_positive(p, "lam", 0.1))
    A, b = _regression_data(rng, n, m, float(p.get("sparsity", 0.2)), float(p.get("noise", 0.1)))
    rows = rng.standard_normal((K, n)) / np.sqrt(n)
    targets = rows @ rng.standard_normal(n) * 0.5 + 0.1 * rng.standard_normal(K)
    smooth = QuadraticSmooth.least_squares(A, b, scale=scale, lipschitz=scale * power_norm(A) ** 2)
    smooth.strong_convexity = 0.0
    h = AbsLossNonsmooth(rows, targets, weight=scale * lam)
    geom = ProxGeometry.euclidean(n, _feasible(p, n))
    return CompositeProblem(geom, smooth, h, SimpleTerm.zero(), RowSampling(h),
                            name=spec.family, info={"spec": spec.describe()})


def _saddle_linf(spec: ProblemSpec) -> CompositeProblem:
    p, rng = spec.params, np.random.default_rng(spec.seed)
    n, m = int(_positive(p, "n", 30)), int(_positive(p, "m", 20))
    scale = float(_positive(p, "scale", 1.0))
    lam = float(p.get("lam", 0.05))
    A, b = _regression_data(rng, n, m, float(p.get("sparsity", 0.2)), float(p.get("noise", 0.1)))
    # ||Ax - b||_inf = max over the simplex in R^{2m} of <[A; -A] x - [b; -b], y>
    smoother = SaddleSmoother(scale * np.vstack([A, -A]), "simplex", b=scale * np.concatenate([b, -b]))
    eta = float(p.get("eta", 1.0))
    smooth = smoother.smooth_oracle(eta)
    geom = ProxGeometry.euclidean(n, _feasible(p, n))
    h = L1Nonsmooth(n, scale * lam) if lam > 0 else ZeroNonsmooth(n)
    sigma = float(p.get("sigma", 0.0))
    stoch = AdditiveNoise(h, scale * sigma, n)
    return CompositeProblem(geom, smooth, h, SimpleTerm.zero(), stoch, name=spec.family,
                            info={"spec": spec.describe()}, saddle=smoother)


def _chain_quad(spec: ProblemSpec) -> CompositeProblem:
    """f(x) = (L/4) (x_1^2/2 + sum (x_i - x_{i+1})^2/2 + x_n^2/2 - x_1)."""
    p = spec.params
    n = int(_positive(p, "n", 201))
    L = float(_positive(p, "L", 1.0))
    lam = float(p.get("lam", 0.0))
    D = np.zeros((n + 1, n))
    idx = np.arange(n)
    D[idx, idx] = 1.0
    D[idx + 1, idx] = -1.0
    Q = 0.25 * L * (D.T @ D)
    c = np.zeros(n)
    c[0] = 0.25 * L
    # eigenvalues of the (2, -1) tridiagonal matrix lie below 4, so L bounds the Hessian
    smooth = QuadraticSmooth(Q, c, lipschitz=L, strong_convexity=0.0)
    smooth.factor = LeastSquaresFactor(np.sqrt(0.25 * L) * D, np.zeros(n + 1), 0.0, c)
    geom = ProxGeometry.euclidean(n, _feasible({"set": p.get("set", "whole_space"),
                                                "radius": p.get("radius", 1.0)}, n))
    h = L1Nonsmooth(n, lam) if lam > 0 else ZeroNonsmooth(n)
    prob = CompositeProblem(geom, smooth, h, SimpleTerm.zero(), None, name=spec.family,
                            info={"spec": spec.describe()})
    if lam == 0 and geom.feasible_set.kind == "whole_space":
        xs = 1.0 - np.arange(1, n + 1) / (n + 1.0)
        fstar = L / 8.0 * (-1.0 + 1.0 / (n + 1.0))
        prob.reference = Reference(xs, fstar, 0.0, "closed form")
    return prob


def _spectral_quad(spec: ProblemSpec) -> CompositeProblem:
    """f(x) = (L/2) sum_j lam_j (x_j - 1)^2 with lam_j log-spaced in [lo, 1].

    Equal residual per mode on a logarithmic spectrum makes plain gradient steps
    decay like 1/N and accelerated ones like 1/N^2 over a wide range of N.
    """
    p = spec.params
    n = int(_positive(p, "n", 60))
    L = float(_positive(p, "L", 1.0))
    lo = float(_positive(p, "lo", 1e-8))
    lam = float(p.get("lam", 0.0))
    curv = L * np.logspace(np.log10(lo), 0.0, n)
    root = np.sqrt(curv)
    smooth = QuadraticSmooth(np.diag(curv), curv.copy(), 0.5 * float(curv.sum()),
                             lipschitz=L, strong_convexity=0.0)
    smooth.factor = LeastSquaresFactor(np.diag(root), root.copy(), 0.0, np.zeros(n))
    geom = ProxGeometry.euclidean(n, _feasible({"set": p.get("set", "whole_space"),
                                                "radius": p.get("radius", 1.0)}, n))
    h = L1Nonsmooth(n, lam) if lam > 0 else ZeroNonsmooth(n)
    prob = CompositeProblem(geom, smooth, h, SimpleTerm.zero(), None, name=spec.family,
                            info={"spec": spec.describe()})
    if lam == 0 and geom.feasible_set.kind == "whole_space":
        prob.reference = Reference(np.ones(n), 0.0, 0.0, "closed form")
    return prob


def make_problem(spec: ProblemSpec) -> CompositeProblem:
    """Build a problem with certified constants L, M (and mu, sigma) from ``spec``."""
    if spec.family in ("quad_l1", "strong_quad_l1"):
        return _quad_l1(spec, spec.family == "strong_quad_l1")
    if spec.family == "stoch_abs":
        return _stoch_abs(spec)
    if spec.family == "saddle_linf":
        return _saddle_linf(spec)
    if spec.family == "chain_quad":
        return _chain_quad(spec)
    if spec.family == "spectral_quad":
        return _spectral_quad(spec)
    raise ValueError(f"unknown problem family {spec.family!r}; known: {', '.join(FAMILIES)}")


# Desk instances used by the acceptance suite and the CLI defaults.  The ball
# radius keeps max_x V(x, x*) comparable to V(x0, x*); scale sets the accuracy range.
_DESK_LASSO = {"n": 50, "m": 80, "lam": 0.05, "scale": 0.02, "set": "ball", "radius": 4.0}

DESK = {
    "desk_quad_l1": ProblemSpec("quad_l1", dict(_DESK_LASSO), seed=7),
    "desk_quad_l1_noisy": ProblemSpec("quad_l1", dict(_DESK_LASSO, sigma=1.0), seed=7),
    "desk_strong_quad_l1": ProblemSpec("strong_quad_l1", dict(_DESK_LASSO, mu=0.03, sigma=0.5),
                                       seed=7),
    "desk_saddle_linf": ProblemSpec("saddle_linf", {"n": 50, "m": 20, "lam": 0.05, "scale": 1.0,
                                                    "set": "box", "radius": 1.0, "sigma": 0.05},
                                    seed=11),
    "desk_spectral_quad": ProblemSpec("spectral_quad", {"n": 60, "L": 1.0, "lo": 1e-8}),
    "desk_chain_quad": ProblemSpec("chain_quad", {"n": 201, "L": 1.0}),
}


def desk_problem(name: str) -> CompositeProblem:
    if name not in DESK:
        raise ValueError(f"unknown desk instance {name!r}; known: {', '.join(DESK)}")
    return make_problem(DESK[name])

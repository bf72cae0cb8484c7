"""Certified reference optima.

Two routes:

* separable quadratic problems (least-squares f, h = lam ||x||_1, box or whole
  space): accelerated proximal gradient with adaptive restart, certified by an
  explicit Fenchel dual point, so the returned value is a true lower bound;
* everything else: a conic reformulation solved by Clarabel through cvxpy,
  with the solver's primal-dual gap as the certificate.
"""
from __future__ import annotations

import logging

import numpy as np

from .oracles import (AbsLossNonsmooth, CompositeProblem, L1Nonsmooth, QuadraticSmooth,
                      Reference, ZeroNonsmooth)
from .prox import SimpleTerm

log = logging.getLogger(__name__)


class CertificationError(RuntimeError):
    pass


def _separable_terms(problem: CompositeProblem):
    """(lam, mu, c, lo, hi) of phi(x) = lam|x| + mu x^2/2 - c x + box, or None."""
    f, h, geom = problem.smooth, problem.nonsmooth, problem.geometry
    if problem.saddle is not None or geom.kind != "euclidean":
        return None
    if not isinstance(f, QuadraticSmooth) or f.factor is None:
        return None
    if geom.feasible_set.kind not in ("whole_space", "box"):
        return None
    if isinstance(h, ZeroNonsmooth):
        lam = 0.0
    elif isinstance(h, L1Nonsmooth) and h.B is None:
        lam = h.lam
    else:
        return None
    lam += 0.0 if problem.simple.is_zero else problem.simple.weight
    n = problem.dimension
    if geom.feasible_set.kind == "box":
        lo, hi = geom.lo, geom.hi
    else:
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
    return lam, f.factor.mu, f.factor.c, lo, hi


def _phi_conj(s, lam, mu, c, lo, hi):
    """sum_i sup_{x in [lo, hi]} (s_i + c_i) x - lam |x| - mu x^2 / 2."""
    t = s + c
    if mu > 0:
        x = np.clip(np.sign(t) * np.maximum(np.abs(t) - lam, 0.0) / mu, lo, hi)
        return float(np.sum(t * x - lam * np.abs(x) - 0.5 * mu * x * x))
    if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
        cands = [lo, hi, np.clip(0.0, lo, hi)]
        vals = np.max([t * z - lam * np.abs(z) for z in cands], axis=0)
        return float(np.sum(vals))
    if np.all(np.abs(t) <= lam * (1 + 1e-15)):
        return 0.0
    return np.inf


def dual_lower_bound(problem: CompositeProblem, x: np.ndarray) -> float:
    """Fenchel dual value at the dual point generated by ``x`` (a lower bound on Psi*)."""
    lam, mu, c, lo, hi = _separable_terms(problem)
    fac = problem.smooth.factor
    A, b = fac.A, fac.b
    theta = A @ x - b
    s = -(A.T @ theta)
    whole = not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))
    if whole and mu == 0:
        # shrink theta until the conjugate is finite
        t = s + c
        excess = np.abs(t).max()
        if excess > lam and np.abs(s).max() > 0:
            if np.any(c):
                return -np.inf
            theta = theta * (lam / excess)
            s = -(A.T @ theta)
    return -float(theta @ b) - 0.5 * float(theta @ theta) - _phi_conj(s, lam, mu, c, lo, hi)


def _fista(problem: CompositeProblem, tol: float, max_iter: int):
    lam, mu, c, lo, hi = _separable_terms(problem)
    geom = problem.geometry
    simple = SimpleTerm.l1(lam) if lam > 0 else SimpleTerm.zero()
    f = problem.smooth
    L = f.lipschitz
    x = problem.x0.copy()
    y, t = x.copy(), 1.0
    best = (np.inf, x, -np.inf)
    for it in range(1, max_iter + 1):
        g = f._gradient(y)
        x_new = geom.solve(L * y, L, g, simple)
        # gradient-based adaptive restart
        if float((y - x_new) @ (x_new - x)) > 0:
            t = 1.0
            y = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x = x_new
        if it % 50 == 0 or it == max_iter:
            up = problem.psi(x)
            low = dual_lower_bound(problem, x)
            if up - low < best[0] - best[2] or not np.isfinite(best[0]):
                best = (up, x.copy(), low)
            if up - low <= tol:
                return x, up, low, it
    return best[1], best[0], best[2], max_iter


def _cvx_objective(problem: CompositeProblem, x):
    import cvxpy as cp

    f, h = problem.smooth, problem.nonsmooth
    terms = []
    if problem.saddle is not None:
        sm = problem.saddle
        z = sm.A @ x - sm.b
        terms.append(sm.radius * cp.norm(z, 2) if sm.dual == "ball" else cp.max(z))
    elif isinstance(f, QuadraticSmooth) and f.factor is not None:
        fac = f.factor
        terms.append(0.5 * cp.sum_squares(fac.A @ x - fac.b))
        if fac.mu > 0:
            terms.append(0.5 * fac.mu * cp.sum_squares(x))
        if np.any(fac.c):
            terms.append(-fac.c @ x)
    elif isinstance(f, QuadraticSmooth):
        terms.append(0.5 * cp.quad_form(x, cp.psd_wrap(f.Q)) - f.c @ x + f.const)
    else:
        raise CertificationError(f"no conic model for {type(f).__name__}")
    if isinstance(h, L1Nonsmooth):
        terms.append(h.lam * cp.norm1(x if h.B is None else h.B @ x))
    elif isinstance(h, AbsLossNonsmooth):
        terms.append(h.weight * cp.sum(cp.abs(h.rows @ x - h.targets)) / h.rows.shape[0])
    elif not isinstance(h, ZeroNonsmooth):
        raise CertificationError(f"no conic model for {type(h).__name__}")
    if not problem.simple.is_zero:
        terms.append(problem.simple.weight * cp.norm1(x))
    return cp.Minimize(sum(terms))


def _cvx_constraints(problem: CompositeProblem, x):
    import cvxpy as cp

    geom = problem.geometry
    fs = geom.feasible_set
    if fs.kind == "box":
        return [x >= geom.lo, x <= geom.hi]
    if fs.kind == "ball":
        return [cp.norm(x - geom._center, 2) <= fs.radius]
    if fs.kind == "simplex":
        return [x >= 0, cp.sum(x) == fs.scale]
    return []


def _project(problem: CompositeProblem, x):
    geom = problem.geometry
    return geom.solve(geom.mirror(np.maximum(x, 1e-300) if geom.kind != "euclidean" else x),
                      1.0, np.zeros(problem.dimension), SimpleTerm.zero())


def _conic(problem: CompositeProblem, tol: float):
    import cvxpy as cp

    x = cp.Variable(problem.dimension)
    prob = cp.Problem(_cvx_objective(problem, x), _cvx_constraints(problem, x))
    settings = dict(tol_gap_abs=0.25 * tol, tol_gap_rel=1e-13, tol_feas=1e-12,
                    tol_ktratio=1e-10, max_iter=500)
    try:
        prob.solve(solver=cp.CLARABEL, **settings)
    except cp.SolverError as exc:
        raise CertificationError(f"conic solver failed: {exc}") from exc
    if prob.status != "optimal" or x.value is None:
        raise CertificationError(f"conic solver status {prob.status}")
    xs = _project(problem, np.asarray(x.value, dtype=float))
    up = problem.psi(xs)
    # Clarabel stops once |primal - dual| <= tol_gap_abs + tol_gap_rel * |objective|
    slack = settings["tol_gap_abs"] + settings["tol_gap_rel"] * abs(float(prob.value))
    low = min(float(prob.value), up) - slack
    return xs, up, low, prob.status


def reference_optimum(problem: CompositeProblem, tol: float = 1e-10,
                      max_iter: int = 200000, force: bool = False):
    """Return (x*, Psi*) with Psi(x*) - Psi* <= tol; Psi* is a lower bound when certified.

    The result is cached on ``problem.reference``.
    """
    if not tol >= 1e-12:
        raise ValueError("tol must be at least 1e-12")
    ref = problem.reference
    if ref is not None and not force and ref.certified_gap <= tol:
        return ref.x, ref.value
    if _separable_terms(problem) is not None:
        x, up, low, iters = _fista(problem, tol, max_iter)
        if not up - low <= tol:
            raise CertificationError(
                f"dual certificate {up - low:.3e} above tol {tol:.1e} after {iters} iterations")
        problem.reference = Reference(x, low, up - low, f"restarted FISTA + dual ({iters} it)")
    else:
        x, up, low, status = _conic(problem, tol)
        gap = up - low
        if gap > tol:
            log.info("conic reference gap %.3e exceeds tol %.1e", gap, tol)
            raise CertificationError(f"conic reference gap {gap:.3e} above tol {tol:.1e}")
        problem.reference = Reference(x, low, gap, f"clarabel ({status})")
    return problem.reference.x, problem.reference.value

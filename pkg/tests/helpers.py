"""Independent oracles shared by several test modules."""
import cvxpy as cp
import numpy as np

from slideopt.oracles import L1Nonsmooth, ZeroNonsmooth


def phi_minimizer(problem, c, x, beta):
    """argmin_u <c, u> + h(u) + beta/2 ||u - x||^2 over X, by a conic solve (euclidean only)."""
    n = problem.dimension
    u = cp.Variable(n)
    h = problem.nonsmooth
    obj = c @ u + 0.5 * beta * cp.sum_squares(u - x)
    if isinstance(h, L1Nonsmooth):
        obj = obj + h.lam * cp.norm1(u if h.B is None else h.B @ u)
    elif not isinstance(h, ZeroNonsmooth):
        raise TypeError("unsupported h")
    fs, geom = problem.geometry.feasible_set, problem.geometry
    cons = []
    if fs.kind == "box":
        cons = [u >= geom.lo, u <= geom.hi]
    elif fs.kind == "ball":
        cons = [cp.norm(u - geom._center, 2) <= fs.radius]
    cp.Problem(cp.Minimize(obj), cons).solve(solver=cp.CLARABEL, tol_gap_abs=1e-12,
                                             tol_gap_rel=1e-12, tol_feas=1e-12)
    return geom.project(np.asarray(u.value), 1.0, problem.simple)


def phi(problem, c, x, beta, u):
    return float(c @ u) + problem.nonsmooth.value(u) + beta * problem.geometry.bregman(x, u)

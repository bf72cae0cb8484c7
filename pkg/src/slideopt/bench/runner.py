"""Run experiments and complexity sweeps described by an :class:`ExperimentConfig`."""
from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..baselines import (accel_exact_bound, accel_exact_config, accel_linearized_bound,
                         accel_linearized_config, accel_prox_run, prox_grad_bound, prox_grad_run)
from ..oracles import CompositeProblem
from ..prox import bregman
from ..reference import reference_optimum
from ..schedules import default_d_tilde, schedule_compact_set, schedule_fixed_horizon
from ..sliding import compact_set_bound, fixed_horizon_bound, gs_run
from ..smoothing import choose_eta, ssgs_bound, ssgs_run
from ..stochastic import (MsgsConfig, msgs_run, sgs_compact_set_bound, sgs_fixed_horizon_bound,
                          sgs_run)
from ..zoo import make_problem
from .config import ConfigError, ExperimentConfig
from .report import COLUMNS, aggregate, bounds_hold  # noqa: F401

log = logging.getLogger("slideopt.bench")


# tolerance for deterministic bound checks (matches the certified reference accuracy)
BOUND_TOL = 1e-8


@dataclass
class Report:
    config: dict
    constants: dict
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    plan: list = field(default_factory=list)

    @property
    def all_bounds_hold(self) -> bool:
        return bounds_hold(self.rows, self.aggregates, BOUND_TOL)

    def summary(self) -> dict:
        return {"config": self.config, "constants": self.constants,
                "aggregates": self.aggregates, "slopes": self.slopes, "plan": self.plan,
                "all_bounds_hold": self.all_bounds_hold}


def problem_constants(problem: CompositeProblem) -> dict:
    """Certified constants of a problem whose reference optimum is attached."""
    geom, ref = problem.geometry, problem.reference
    bounded = geom.feasible_set.bounded
    out = {"dimension": problem.dimension, "L": problem.L, "M": problem.M, "mu": problem.mu,
           "sigma": problem.sigma, "nu": geom.modulus,
           "D_X": geom.diameter() if bounded else None,
           "geometry": geom.describe()}
    if ref is not None:
        out.update(psi_star=ref.value, certified_gap=ref.certified_gap,
                   reference_method=ref.method,
                   V0=bregman(geom, problem.x0, ref.x),
                   Vbar=geom.max_bregman(ref.x) if bounded else None,
                   gap0=problem.psi(problem.x0) - ref.value)
    if problem.saddle is not None:
        out.update(A_norm=problem.saddle.A_norm, D_Y=problem.saddle.d_y)
    return out


def _smallest_n(bound, eps: float, limit: int = 1 << 40) -> int:
    """Smallest N >= 1 with bound(N) <= eps, for bounds decreasing in N."""
    hi = 1
    while bound(hi) > eps:
        hi *= 2
        if hi > limit:
            raise ValueError(f"accuracy {eps} is out of reach")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def gs_plan(L: float, M: float, nu: float, V0: float, eps: float, sigma: float = 0.0,
            d_tilde: float | None = None, stochastic: bool = False) -> dict:
    """Fixed-horizon N reaching ``eps`` by the guarantee, and the resulting sum of T_k.

    Without ``d_tilde`` the free constant is picked from the grid V0 * 2^(j/4),
    j = -16..32, minimizing the guaranteed number of subgradient calls.
    """
    closed = sgs_fixed_horizon_bound if stochastic else fixed_horizon_bound

    def one(d):
        N = _smallest_n(lambda n: closed(L, nu, V0, d, n), eps)
        total = schedule_fixed_horizon(L, M, nu, N, d, sigma).total_periods(N)
        return {"N": N, "d_tilde": d, "subgrad_total": total,
                "bound": closed(L, nu, V0, d, N)}

    if d_tilde is not None:
        return one(float(d_tilde))
    base = V0 if V0 > 0 else 1.0
    best = None
    for j in range(-16, 33):
        cand = one(base * 2.0 ** (j / 4.0))
        if best is None or (cand["subgrad_total"], cand["N"]) < (best["subgrad_total"], best["N"]):
            best = cand
    return best


def _d_tilde(cfg: ExperimentConfig, const: dict) -> float:
    if isinstance(cfg.d_tilde, (int, float)):
        return float(cfg.d_tilde)
    if const["D_X"] is None:
        raise ConfigError("d_tilde", "required when the feasible set is unbounded")
    return default_d_tilde(cfg.policy, const["D_X"], const["nu"], cfg.stochastic)


def _delta0(cfg: ExperimentConfig, const: dict) -> float:
    return cfg.delta0 if cfg.delta0 is not None else const["gap0"]


def _row(seed, algorithm, policy, k_or_eps, gap, bound, calls, elapsed, timing):
    g, s, q = calls
    return {"trial_seed": seed, "algorithm": algorithm, "policy": policy,
            "k_or_epsilon": k_or_eps, "gap": float(gap), "bound": float(bound),
            "grad_calls": int(g), "subgrad_calls": int(s), "stoch_calls": int(q),
            "elapsed_ms": 1000.0 * elapsed if timing else None}


def _ensure_sigma(problem: CompositeProblem) -> CompositeProblem:
    return problem.with_sigma(0.0) if problem.stochastic is None else problem


def _horizon_rows(problem, cfg, const, seed, Ns) -> list:
    """One row per horizon (or checkpoint) for the iteration-count mode."""
    alg, timing = cfg.algorithm, cfg.record_timing
    L, M, nu, sigma = const["L"], const["M"], const["nu"], const["sigma"]
    rows = []

    def clock():
        return time.perf_counter()

    if alg in ("gs", "sgs"):
        stoch = alg == "sgs"
        if stoch:
            problem = _ensure_sigma(problem)
        d = _d_tilde(cfg, const)
        noise = sigma if stoch else 0.0
        if cfg.policy == "fixed_horizon":
            closed = sgs_fixed_horizon_bound if stoch else fixed_horizon_bound
            for N in Ns:
                prob, t0 = problem.fresh(), clock()
                sched = schedule_fixed_horizon(L, M, nu, N, d, noise)
                rec = (sgs_run(prob, sched, N, seed=seed, checkpoints="final", keep_iterates=False)
                       if stoch else gs_run(prob, sched, N, checkpoints="final", keep_iterates=False))
                rows.append(_row(seed, alg, cfg.policy, N, rec.gaps[-1],
                                 closed(L, nu, const["V0"], d, N), rec.totals, clock() - t0, timing))
        else:
            if const["Vbar"] is None:
                raise ConfigError("policy", "compact_set needs a bounded feasible set")
            closed = sgs_compact_set_bound if stoch else compact_set_bound
            prob, t0 = problem.fresh(), clock()
            sched = schedule_compact_set(L, M, nu, d, noise)
            N = max(Ns)
            rec = (sgs_run(prob, sched, N, seed=seed, checkpoints=Ns, keep_iterates=False)
                   if stoch else gs_run(prob, sched, N, checkpoints=Ns, keep_iterates=False))
            for i, k in enumerate(rec.ks):
                rows.append(_row(seed, alg, cfg.policy, k, rec.gaps[i],
                                 closed(L, nu, const["Vbar"], d, k),
                                 (rec.grad_calls[i], rec.subgrad_calls[i], rec.stoch_calls[i]),
                                 rec.elapsed[i], timing))
    elif alg == "ssgs":
        for N in Ns:
            t0 = clock()
            d = cfg.d_tilde if isinstance(cfg.d_tilde, (int, float)) else None
            rec = ssgs_run(problem, N, d_tilde=d, seed=seed, checkpoints="final")
            rows.append(_row(seed, alg, "fixed_horizon", N, rec.gaps[-1], rec.extra["bound"],
                             rec.totals, clock() - t0, timing))
    elif alg == "msgs":
        problem = _ensure_sigma(problem)
        delta0 = _delta0(cfg, const)
        mcfg = MsgsConfig.for_problem(problem, delta0, cfg.phases)
        prob, t0 = problem.fresh(), clock()
        rec = msgs_run(prob, mcfg, seed=seed)
        for s in range(1, len(rec.ys) + 1):
            rows.append(_row(seed, alg, "multi_phase", s, rec.gaps[s - 1], delta0 / 2.0 ** s,
                             (rec.grad_calls[s - 1], 0, rec.stoch_calls[s - 1]),
                             clock() - t0, timing))
    elif alg in ("prox_grad", "accel_prox"):
        prob, t0 = problem.fresh(), clock()
        N = max(Ns)
        if alg == "prox_grad":
            beta = L / nu
            rec = prox_grad_run(prob, N, beta, checkpoints=Ns, keep_iterates=False)
            bound = lambda k: prox_grad_bound(beta, const["V0"], k)  # noqa: E731
        else:
            rec = accel_prox_run(prob, N, accel_exact_config(L, nu), checkpoints=Ns,
                                 keep_iterates=False)
            bound = lambda k: accel_exact_bound(L, nu, const["V0"], const["gap0"], k)  # noqa: E731
        for i, k in enumerate(rec.ks):
            rows.append(_row(seed, alg, rec.schedule["policy"], k, rec.gaps[i], bound(k),
                             (rec.grad_calls[i], rec.subgrad_calls[i], rec.stoch_calls[i]),
                             rec.elapsed[i], timing))
    elif alg == "accel_linearized":
        D = const["Vbar"]
        if D is None:
            raise ConfigError("algorithm", "accel_linearized needs a bounded feasible set")
        for N in Ns:
            prob, t0 = problem.fresh(), clock()
            rec = accel_prox_run(prob, N, accel_linearized_config(L, M, nu, N, D),
                                 checkpoints="final", keep_iterates=False)
            rows.append(_row(seed, alg, "accel_linearized_h", N, rec.gaps[-1],
                             accel_linearized_bound(L, M, nu, const["V0"], D, N), rec.totals,
                             clock() - t0, timing))
    return rows


def plan_for(cfg: ExperimentConfig, const: dict, eps: float) -> dict:
    """Outer-iteration count (or phase count) whose guarantee reaches ``eps``."""
    alg = cfg.algorithm
    L, M, nu, V0 = const["L"], const["M"], const["nu"], const["V0"]
    if alg in ("gs", "sgs"):
        stoch = alg == "sgs"
        sigma = const["sigma"] if stoch else 0.0
        if cfg.policy == "fixed_horizon":
            d = None if cfg.d_tilde == "optimal" else _d_tilde(cfg, const)
            return gs_plan(L, M, nu, V0, eps, sigma, d, stoch)
        d = _d_tilde(cfg, const)
        closed = sgs_compact_set_bound if stoch else compact_set_bound
        N = _smallest_n(lambda n: closed(L, nu, const["Vbar"], d, n), eps)
        return {"N": N, "d_tilde": d, "bound": closed(L, nu, const["Vbar"], d, N)}
    if alg == "prox_grad":
        N = _smallest_n(lambda n: prox_grad_bound(L / nu, V0, n), eps)
        return {"N": N, "bound": prox_grad_bound(L / nu, V0, N)}
    if alg == "accel_prox":
        f = lambda n: accel_exact_bound(L, nu, V0, const["gap0"], n)  # noqa: E731
        N = _smallest_n(f, eps)
        return {"N": N, "bound": f(N)}
    if alg == "accel_linearized":
        f = lambda n: accel_linearized_bound(L, M, nu, V0, const["Vbar"], n)  # noqa: E731
        N = _smallest_n(f, eps)
        return {"N": N, "bound": f(N)}
    if alg == "ssgs":
        f = lambda n: ssgs_bound(const["A_norm"], const["D_X"], const["D_Y"], nu, 1.0, n)  # noqa: E731
        N = _smallest_n(f, eps)
        return {"N": N, "bound": f(N),
                "eta": choose_eta(const["A_norm"], N, const["D_X"], const["D_Y"], nu, 1.0)}
    delta0 = _delta0(cfg, const)
    S = max(1, math.ceil(math.log2(delta0 / eps) - 1e-12))
    return {"phases": S, "bound": delta0 / 2.0 ** S}


def _sweep_rows(problem, cfg, const, seed, plans) -> list:
    alg, timing = cfg.algorithm, cfg.record_timing
    L, M, nu, sigma = const["L"], const["M"], const["nu"], const["sigma"]
    rows = []
    for eps, plan in zip(cfg.accuracies, plans):
        prob, t0 = problem.fresh(), time.perf_counter()
        if alg in ("gs", "sgs"):
            stoch = alg == "sgs"
            if stoch:
                prob = _ensure_sigma(prob)
            noise = sigma if stoch else 0.0
            if cfg.policy == "fixed_horizon":
                sched = schedule_fixed_horizon(L, M, nu, plan["N"], plan["d_tilde"], noise)
            else:
                sched = schedule_compact_set(L, M, nu, plan["d_tilde"], noise)
            rec = (sgs_run(prob, sched, plan["N"], seed=seed, checkpoints="final",
                           keep_iterates=False) if stoch else
                   gs_run(prob, sched, plan["N"], checkpoints="final", keep_iterates=False))
            gap, calls, policy = rec.gaps[-1], rec.totals, cfg.policy
        elif alg == "prox_grad":
            rec = prox_grad_run(prob, plan["N"], L / nu, checkpoints="final", keep_iterates=False)
            gap, calls, policy = rec.gaps[-1], rec.totals, "prox_gradient"
        elif alg == "accel_prox":
            rec = accel_prox_run(prob, plan["N"], accel_exact_config(L, nu), checkpoints="final",
                                 keep_iterates=False)
            gap, calls, policy = rec.gaps[-1], rec.totals, "accel_prox_exact_h"
        elif alg == "accel_linearized":
            conf = accel_linearized_config(L, M, nu, plan["N"], const["Vbar"])
            rec = accel_prox_run(prob, plan["N"], conf, checkpoints="final", keep_iterates=False)
            gap, calls, policy = rec.gaps[-1], rec.totals, "accel_linearized_h"
        elif alg == "ssgs":
            d = cfg.d_tilde if isinstance(cfg.d_tilde, (int, float)) else None
            rec = ssgs_run(prob, plan["N"], d_tilde=d, seed=seed, checkpoints="final")
            gap, calls, policy = rec.gaps[-1], rec.totals, "fixed_horizon"
        else:
            prob = _ensure_sigma(prob)
            mcfg = MsgsConfig.for_problem(prob, _delta0(cfg, const), plan["phases"])
            rec = msgs_run(prob, mcfg, seed=seed)
            gap, calls, policy = rec.gaps[-1], (rec.grad_calls[-1], 0, rec.stoch_calls[-1]), "multi_phase"
        rows.append(_row(seed, alg, policy, eps, gap, plan["bound"], calls,
                         time.perf_counter() - t0, timing))
    return rows


def _trial(job):
    spec, reference, cfg, const, seed, plans = job
    problem = make_problem(spec)
    problem.reference = reference
    if plans is None:
        return _horizon_rows(problem, cfg, const, seed, cfg.N)
    return _sweep_rows(problem, cfg, const, seed, plans)


def _prepare(cfg: ExperimentConfig):
    problem = make_problem(cfg.problem)
    reference_optimum(problem, tol=cfg.ref_tol)
    const = problem_constants(problem)
    if cfg.stochastic and problem.stochastic is None:
        const["sigma"] = 0.0
    if cfg.algorithm in ("gs", "sgs") and not cfg.d_tilde == "optimal":
        try:
            const["d_tilde"] = _d_tilde(cfg, const)
        except ConfigError:
            if cfg.policy != "fixed_horizon" or not cfg.accuracies:
                raise
    if cfg.algorithm == "msgs":
        const["delta0"] = _delta0(cfg, const)
        const["N0"] = MsgsConfig.for_problem(problem, const["delta0"], cfg.phases).N0
    if cfg.algorithm == "ssgs" and cfg.N:
        const["eta"] = {N: choose_eta(const["A_norm"], N, const["D_X"], const["D_Y"],
                                      const["nu"], 1.0) for N in cfg.N}
    return problem, const


def _execute(cfg: ExperimentConfig, problem, const, plans, jobs: int | None) -> list:
    jobs = jobs or os.cpu_count() or 1
    work = [(cfg.problem, problem.reference, cfg, const, seed, plans) for seed in cfg.seeds]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_trial, work))
    else:
        parts = [_trial(w) for w in work]
    return [row for part in parts for row in part]


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> Report:
    """Execute every trial at the configured horizons; returns the in-memory report."""
    problem, const = _prepare(cfg)
    log.info("running %s on %s (%d trials)", cfg.algorithm, cfg.problem.family, cfg.trials)
    rows = _execute(cfg, problem, const, None, jobs)
    return Report(cfg.echo(), const, rows, aggregate(rows))


def _slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, dtype=float), np.asarray(y, dtype=float), 1)[0])


def complexity_sweep(cfg: ExperimentConfig, accuracies=None, jobs: int | None = None) -> Report:
    """Pick the horizon for each accuracy from the guarantee, run it, and fit call slopes."""
    if accuracies is not None:
        cfg.accuracies = list(accuracies)
        cfg.validate()
    if not cfg.accuracies:
        raise ConfigError("accuracies", "a sweep needs at least one accuracy")
    problem, const = _prepare(cfg)
    plans = [plan_for(cfg, const, eps) for eps in cfg.accuracies]
    rows = _execute(cfg, problem, const, plans, jobs)
    report = Report(cfg.echo(), const, rows, aggregate(rows),
                    plan=[dict(epsilon=e, **p) for e, p in zip(cfg.accuracies, plans)])
    if len(cfg.accuracies) >= 2:
        agg = report.aggregates
        inv = [math.log(1.0 / a["k_or_epsilon"]) for a in agg]
        report.slopes["grad_calls"] = _slope(inv, [math.log(a["grad_calls"]) for a in agg])
        sub = [a["subgrad_calls"] + a["stoch_calls"] for a in agg]
        if all(v > 0 for v in sub):
            report.slopes["subgrad_calls"] = _slope(inv, [math.log(v) for v in sub])
        if cfg.algorithm == "msgs":
            x = [math.log2(const["delta0"] / a["k_or_epsilon"]) for a in agg]
            report.slopes["grad_calls_vs_log2"] = _slope(x, [a["grad_calls"] for a in agg])
    return report

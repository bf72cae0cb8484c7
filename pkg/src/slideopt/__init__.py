"""Gradient sliding for composite convex problems f + h + chi.

f is smooth and costly, h is nonsmooth and cheap; the sliding methods call
grad f O(1/sqrt(eps)) times while keeping O(1/eps^2) subgradient calls of h.
"""
from .baselines import (accel_exact_config, accel_linearized_config, accel_prox_run,
                        prox_grad_run)
from .oracles import CompositeProblem, Reference
from .prox import FeasibleSet, ProxGeometry, SimpleTerm, bregman, composite_prox, max_bregman
from .reference import CertificationError, reference_optimum
from .schedules import (SlidingSchedule, schedule_compact_set, schedule_custom,
                        schedule_fixed_horizon)
from .sliding import RunRecord, bound_bd, gs_run, prox_sliding
from .smoothing import SaddleSmoother, choose_eta, smoothed_value_grad, ssgs_run
from .stochastic import MsgsConfig, bound_bp, msgs_run, sgs_run, sprox_sliding
from .zoo import DESK, ProblemSpec, desk_problem, make_problem

__all__ = [
    "accel_exact_config", "accel_linearized_config", "accel_prox_run", "prox_grad_run",
    "CompositeProblem", "Reference", "FeasibleSet", "ProxGeometry", "SimpleTerm", "bregman",
    "composite_prox", "max_bregman", "CertificationError", "reference_optimum",
    "SlidingSchedule", "schedule_compact_set", "schedule_custom", "schedule_fixed_horizon",
    "RunRecord", "bound_bd", "gs_run", "prox_sliding", "SaddleSmoother", "choose_eta",
    "smoothed_value_grad", "ssgs_run", "MsgsConfig", "bound_bp", "msgs_run", "sgs_run",
    "sprox_sliding", "DESK", "ProblemSpec", "desk_problem", "make_problem",
]

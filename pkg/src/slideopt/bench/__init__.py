"""Configuration-driven experiment runner and reports."""
from .config import ConfigError, ExperimentConfig, load_config
from .runner import Report, complexity_sweep, gs_plan, problem_constants, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "Report", "complexity_sweep",
           "gs_plan", "problem_constants", "run_experiment"]

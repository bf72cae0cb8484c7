"""Experiment configuration: a flat TOML file with [problem], [run] and [output].

Example::

    [problem]
    desk = "desk_quad_l1"          # or family = "quad_l1" plus a [problem.params] table

    [run]
    algorithm = "gs"
    policy = "fixed_horizon"
    N = [5, 10, 20, 50]
    trials = 1

    [output]
    dir = "out"
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..zoo import DESK, FAMILIES, ProblemSpec

ALGORITHMS = ("gs", "sgs", "msgs", "ssgs", "prox_grad", "accel_prox", "accel_linearized")
POLICIES = ("fixed_horizon", "compact_set")
STOCHASTIC = ("sgs", "msgs", "ssgs")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    problem: ProblemSpec
    algorithm: str = "gs"
    policy: str = "fixed_horizon"
    N: list = field(default_factory=lambda: [10])
    d_tilde: float | str | None = None
    delta0: float | None = None
    phases: int = 6
    trials: int = 1
    seed_start: int = 0
    accuracies: list = field(default_factory=list)
    out: str = "out"
    record_timing: bool = False
    ref_tol: float = 1e-10
    desk: str | None = None

    def __post_init__(self):
        self.validate()

    @property
    def seeds(self) -> list[int]:
        return list(range(self.seed_start, self.seed_start + self.trials))

    @property
    def stochastic(self) -> bool:
        return self.algorithm in STOCHASTIC

    def validate(self):
        if self.problem.family not in FAMILIES:
            raise ConfigError("problem.family", f"unknown family {self.problem.family!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError("algorithm", f"expected one of {', '.join(ALGORITHMS)}")
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"expected one of {', '.join(POLICIES)}")
        Ns = self.N if isinstance(self.N, (list, tuple)) else [self.N]
        for v in Ns:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < 1:
                raise ConfigError("N", f"every N must be an integer >= 1, got {v!r}")
        self.N = sorted({int(v) for v in Ns})
        if not self.N and not self.accuracies:
            raise ConfigError("N", "at least one horizon is required")
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials", f"must be an integer >= 1, got {self.trials!r}")
        self.trials = int(self.trials)
        if int(self.seed_start) != self.seed_start or self.seed_start < 0:
            raise ConfigError("seed_start", "must be a nonnegative integer")
        if int(self.phases) != self.phases or self.phases < 1:
            raise ConfigError("phases", "must be an integer >= 1")
        acc = [float(a) for a in self.accuracies]
        if any(not (a > 0 and math.isfinite(a)) for a in acc):
            raise ConfigError("accuracies", "must be positive")
        if any(b >= a for a, b in zip(acc, acc[1:])):
            raise ConfigError("accuracies", "must be strictly decreasing")
        self.accuracies = acc
        if isinstance(self.d_tilde, str):
            if self.d_tilde != "optimal":
                raise ConfigError("d_tilde", "must be a positive number or 'optimal'")
        elif self.d_tilde is not None and not self.d_tilde > 0:
            raise ConfigError("d_tilde", "must be positive")
        if self.delta0 is not None and not self.delta0 > 0:
            raise ConfigError("delta0", "must be positive")
        if not self.ref_tol >= 1e-12:
            raise ConfigError("ref_tol", "must be at least 1e-12")

    def echo(self) -> dict:
        return {"problem": self.problem.describe(), "desk": self.desk,
                "algorithm": self.algorithm, "policy": self.policy, "N": list(self.N),
                "d_tilde": self.d_tilde, "delta0": self.delta0, "phases": self.phases,
                "trials": self.trials, "seed_start": self.seed_start,
                "accuracies": list(self.accuracies), "ref_tol": self.ref_tol}


_RUN_KEYS = {"algorithm", "policy", "N", "d_tilde", "delta0", "phases", "trials",
             "seed_start", "accuracies", "ref_tol"}


def config_from_dict(data: dict) -> ExperimentConfig:
    prob = data.get("problem")
    if not isinstance(prob, dict):
        raise ConfigError("problem", "missing [problem] section")
    desk = prob.get("desk")
    if desk is not None:
        if desk not in DESK:
            raise ConfigError("problem.desk", f"unknown desk instance {desk!r}")
        base = DESK[desk]
        params = dict(base.params)
        params.update(prob.get("params", {}))
        spec = ProblemSpec(base.family, params, int(prob.get("seed", base.seed)))
    else:
        if "family" not in prob:
            raise ConfigError("problem.family", "give a family or a desk instance")
        spec = ProblemSpec(prob["family"], dict(prob.get("params", {})), int(prob.get("seed", 0)))
    run = data.get("run", {})
    unknown = set(run) - _RUN_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown [run] key")
    out = data.get("output", {})
    kwargs = {k: run[k] for k in _RUN_KEYS if k in run}
    return ExperimentConfig(spec, out=str(out.get("dir", "out")),
                            record_timing=bool(out.get("record_timing", False)),
                            desk=desk, **kwargs)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"not valid TOML: {exc}") from exc
    return config_from_dict(data)

"""Command-line entry point: ``slideopt {run,sweep,verify-bounds,list-problems}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..reference import CertificationError
from ..zoo import DESK, FAMILIES
from .config import ConfigError, ExperimentConfig, load_config
from .report import emit
from .runner import complexity_sweep, run_experiment

log = logging.getLogger("slideopt.bench")


def _setup_logging():
    level = os.environ.get("SLIDE_OPT_LOG", "error").lower()
    if level not in ("error", "info", "debug"):
        level = "error"
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


def _seed_range(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        a, b = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    if a < 0 or b < a:
        raise argparse.ArgumentTypeError(f"empty or negative seed range {text!r}")
    return a, b


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slideopt", description="Gradient sliding experiments.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default: cores)")
        p.add_argument("--seed-range", type=_seed_range, help="inclusive trial seeds A..B")
        p.add_argument("--format", action="append", choices=("csv", "json", "svg"),
                       help="report formats (repeatable; default csv and json)")

    common(sub.add_parser("run", help="run the configured horizons"))
    common(sub.add_parser("sweep", help="pick N per accuracy and fit call slopes"))
    vb = sub.add_parser("verify-bounds", help="check the guarantees on a desk instance")
    vb.add_argument("name", help="desk instance (see list-problems)")
    common(vb, config=False)
    sub.add_parser("list-problems", help="list problem families and desk instances")
    return ap


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.out:
        cfg.out = args.out
    if args.seed_range:
        a, b = args.seed_range
        cfg.seed_start, cfg.trials = a, b - a + 1
    cfg.validate()
    return cfg


def _print_report(report, label: str):
    for a in report.aggregates:
        ok = "ok  " if (a["gap_mean"] <= a["bound"] + 2.0 * a["gap_se"] + 1e-8) else "FAIL"
        print(f"{ok} {label} {a['algorithm']:<16} {a['policy']:<20} k/eps={a['k_or_epsilon']!s:<10} "
              f"gap={a['gap_mean']:.3e} (se {a['gap_se']:.1e}) bound={a['bound']:.3e} "
              f"grad={a['grad_calls']:.0f} sub={a['subgrad_calls']:.0f} stoch={a['stoch_calls']:.0f}")
    for k, v in report.slopes.items():
        print(f"slope {k}: {v:.3f}")


def _verify_configs(name: str) -> list[ExperimentConfig]:
    spec = DESK[name]
    base = dict(problem=spec, desk=name, N=[5, 10, 20, 50])
    if spec.family == "saddle_linf":
        return [ExperimentConfig(algorithm="ssgs", trials=20, N=[10, 50], problem=spec, desk=name)]
    if spec.family in ("chain_quad", "spectral_quad"):
        return [ExperimentConfig(algorithm="prox_grad", **base),
                ExperimentConfig(algorithm="accel_prox", **base)]
    out = [ExperimentConfig(algorithm="gs", policy="fixed_horizon", **base),
           ExperimentConfig(algorithm="gs", policy="compact_set", **base)]
    if "sigma" in spec.params:
        out.append(ExperimentConfig(algorithm="sgs", policy="fixed_horizon", trials=20, **base))
    if spec.family == "strong_quad_l1":
        out.append(ExperimentConfig(algorithm="msgs", trials=10, problem=spec, desk=name))
    return out


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    if args.verb == "list-problems":
        print("families: " + ", ".join(FAMILIES))
        for name, spec in DESK.items():
            params = ", ".join(f"{k}={v}" for k, v in spec.params.items())
            print(f"{name}: {spec.family} seed={spec.seed} {params}")
        return 0
    formats = tuple(dict.fromkeys(args.format or ["csv", "json"]))
    try:
        if args.verb == "verify-bounds":
            if args.name not in DESK:
                raise ConfigError("name", f"unknown desk instance {args.name!r}")
            ok = True
            for i, cfg in enumerate(_verify_configs(args.name)):
                cfg = _apply_overrides(cfg, args)
                report = run_experiment(cfg, jobs=args.jobs)
                _print_report(report, args.name)
                if args.out:
                    emit(report, cfg.out, formats, stem=f"verify_{i}_{cfg.algorithm}_{cfg.policy}")
                ok &= report.all_bounds_hold
            print("all bounds hold" if ok else "some bounds FAILED")
            return 0 if ok else 1
        cfg = _apply_overrides(load_config(args.config), args)
        if args.verb == "run":
            report = run_experiment(cfg, jobs=args.jobs)
        else:
            report = complexity_sweep(cfg, jobs=args.jobs)
        _print_report(report, cfg.desk or cfg.problem.family)
        for path in emit(report, cfg.out, formats, stem=args.verb):
            log.info("wrote %s", path)
        return 0 if report.all_bounds_hold else 1
    except ConfigError as exc:
        print(f"config error in field {exc.field!r}: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"reference certification failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Report aggregation and the CSV / JSON / SVG emitters.

Floats are written with ``repr`` so a parsed CSV reproduces the in-memory rows
bit for bit, and aggregates use ``math.fsum`` so they do not depend on order.
"""
from __future__ import annotations

import csv
import json
import math
import os
from xml.sax.saxutils import escape

COLUMNS = ("trial_seed", "algorithm", "policy", "k_or_epsilon", "gap", "bound",
           "grad_calls", "subgrad_calls", "stoch_calls", "elapsed_ms")
STOCHASTIC = ("sgs", "msgs", "ssgs")
_INT = ("trial_seed", "grad_calls", "subgrad_calls", "stoch_calls")
_FLOAT = ("gap", "bound", "elapsed_ms")


def aggregate(rows: list) -> list:
    """Mean, standard error and mean counters per (algorithm, policy, k_or_epsilon)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["algorithm"], r["policy"], r["k_or_epsilon"]), []).append(r)
    out = []
    for (alg, pol, k), rs in groups.items():
        n = len(rs)
        gaps = [r["gap"] for r in rs]
        mean = math.fsum(gaps) / n
        se = math.sqrt(math.fsum((g - mean) ** 2 for g in gaps) / (n - 1) / n) if n > 1 else 0.0
        out.append({"algorithm": alg, "policy": pol, "k_or_epsilon": k, "trials": n,
                    "gap_mean": mean, "gap_se": se, "gap_max": max(gaps),
                    "bound": max(r["bound"] for r in rs),
                    "grad_calls": math.fsum(r["grad_calls"] for r in rs) / n,
                    "subgrad_calls": math.fsum(r["subgrad_calls"] for r in rs) / n,
                    "stoch_calls": math.fsum(r["stoch_calls"] for r in rs) / n})
    return out


def bounds_hold(rows: list, aggregates: list, tol: float) -> bool:
    """Deterministic rows must sit under their bound; stochastic means within 2 SE."""
    for r in rows:
        if r["algorithm"] not in STOCHASTIC and not r["gap"] <= r["bound"] + tol:
            return False
    for a in aggregates:
        if a["algorithm"] in STOCHASTIC and not a["gap_mean"] <= a["bound"] + 2.0 * a["gap_se"] + tol:
            return False
    return True


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: list, path: str | os.PathLike):
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in COLUMNS])


def _parse_k(s: str):
    try:
        return int(s)
    except ValueError:
        return float(s)


def read_csv(path: str | os.PathLike) -> list:
    rows = []
    with open(path, newline="", encoding="ascii") as fh:
        for rec in csv.DictReader(fh):
            row = {"algorithm": rec["algorithm"], "policy": rec["policy"],
                   "k_or_epsilon": _parse_k(rec["k_or_epsilon"])}
            for c in _INT:
                row[c] = int(rec[c])
            for c in _FLOAT:
                row[c] = float(rec[c]) if rec[c] != "" else None
            rows.append({c: row[c] for c in COLUMNS})
    return rows


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "tolist"):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def write_json(summary: dict, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_svg(aggregates: list, path: str | os.PathLike, title: str = "",
              width: int = 640, height: int = 420):
    """Log-log line chart of mean gap and bound against k (or 1/epsilon for sweeps)."""
    pts = [(a["k_or_epsilon"], a["gap_mean"], a["bound"]) for a in aggregates
           if a["k_or_epsilon"] > 0]
    sweep = any(isinstance(k, float) for k, _, _ in pts)
    xs = [math.log10(1.0 / k if sweep else k) for k, _, _ in pts]
    ys_gap = [math.log10(g) if g > 0 else None for _, g, _ in pts]
    ys_bound = [math.log10(b) if b > 0 else None for _, _, b in pts]
    finite = [y for y in ys_gap + ys_bound if y is not None]
    pad = 50
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{pad}" y="20" font-size="14">{escape(title)}</text>']
    if xs and finite:
        x0, x1 = min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1.0
        y0, y1 = min(finite), max(finite) if max(finite) > min(finite) else min(finite) + 1.0

        def sx(x):
            return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

        def sy(y):
            return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

        for ys, color, label in ((ys_gap, "#1f77b4", "mean gap"), (ys_bound, "#d62728", "bound")):
            seg = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if y is not None)
            lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{seg}"/>')
            ly = 40 if label == "mean gap" else 56
            lines.append(f'<text x="{width - 150}" y="{ly}" font-size="12" fill="{color}">{label}</text>')
        xl = "log10(1/epsilon)" if sweep else "log10(k)"
        lines.append(f'<text x="{width / 2:.0f}" y="{height - 12}" font-size="12">{xl}</text>')
        lines.append(f'<text x="8" y="{pad - 10}" font-size="12">log10 value '
                     f'[{y0:.2f}, {y1:.2f}]</text>')
        lines.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" '
                     f'stroke="black"/>')
        lines.append(f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def emit(report, out_dir: str | os.PathLike, formats=("csv", "json"), stem: str = "report") -> list:
    """Write the requested formats into ``out_dir``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for fmt in formats:
        path = os.path.join(out_dir, f"{stem}.{fmt}")
        if fmt == "csv":
            write_csv(report.rows, path)
        elif fmt == "json":
            write_json(report.summary(), path)
        elif fmt == "svg":
            write_svg(report.aggregates, path, title=f"{report.config['algorithm']} "
                                                     f"on {report.config['problem']['family']}")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        paths.append(path)
    return paths

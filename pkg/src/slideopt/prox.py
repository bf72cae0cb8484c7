"""Distance generating functions, Bregman distances and closed-form prox-mappings.

Two geometries are supported:

* ``euclidean``: omega(x) = 0.5 * ||x||_2^2 on the whole space, a box, a ball or a
  scaled simplex.  Modulus 1 with respect to the l2 norm.
* ``entropy_simplex``: omega(x) = sum_i x_i log x_i on the simplex
  {x >= 0, sum(x) = s}.  Modulus 1/s with respect to the l1 norm (dual norm l_inf).

Every algorithm in the package reduces its subproblems to

    argmin_{u in X}  <g, u> + sum_i w_i V(x_i, u) + chi(u)

which is :func:`composite_prox`.  Because all anchors share one omega, the weighted
Bregman terms collapse to ``W * omega(u) - <sum_i w_i grad omega(x_i), u>`` and the
problem is solved in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, xlogy

FEAS_TOL = 1e-12
CERT_TOL = 1e-8
BOUNDARY_NUDGE = 1e-12

GEOMETRY_KINDS = ("euclidean", "entropy_simplex")
SET_KINDS = ("whole_space", "box", "ball", "simplex")


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Closed convex feasible region X.

    Use the classmethod constructors rather than the raw fields.
    """

    kind: str
    lo: np.ndarray | float | None = None
    hi: np.ndarray | float | None = None
    center: np.ndarray | float | None = None
    radius: float | None = None
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ValueError(f"unknown feasible set kind {self.kind!r}")
        if self.kind == "box":
            lo, hi = np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ValueError("box bounds must be finite")
            if np.any(lo > hi):
                raise ValueError("box requires lo <= hi coordinatewise")
        elif self.kind == "ball":
            if self.radius is None or not self.radius > 0 or not math.isfinite(self.radius):
                raise ValueError("ball requires a finite radius > 0")
        elif self.kind == "simplex":
            if self.scale is None or not self.scale > 0 or not math.isfinite(self.scale):
                raise ValueError("simplex requires a finite scale > 0")

    @classmethod
    def whole_space(cls) -> "FeasibleSet":
        return cls("whole_space")

    @classmethod
    def box(cls, lo, hi) -> "FeasibleSet":
        return cls("box", lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius: float) -> "FeasibleSet":
        return cls("ball", center=center, radius=float(radius))

    @classmethod
    def simplex(cls, scale: float = 1.0) -> "FeasibleSet":
        return cls("simplex", scale=float(scale))

    @property
    def bounded(self) -> bool:
        return self.kind != "whole_space"

    def describe(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "box":
            out["lo"] = np.asarray(self.lo, dtype=float).tolist()
            out["hi"] = np.asarray(self.hi, dtype=float).tolist()
        elif self.kind == "ball":
            out["center"] = np.asarray(self.center, dtype=float).tolist()
            out["radius"] = self.radius
        elif self.kind == "simplex":
            out["scale"] = self.scale
        return out


@dataclass(frozen=True)
class SimpleTerm:
    """The 'simple' nonsmooth term chi: zero or weight * ||x||_1."""

    kind: str = "zero"
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "l1"):
            raise ValueError(f"unknown simple term {self.kind!r}")
        if not math.isfinite(self.weight) or self.weight < 0:
            raise ValueError("simple term weight must be finite and nonnegative")

    @classmethod
    def zero(cls) -> "SimpleTerm":
        return cls("zero", 0.0)

    @classmethod
    def l1(cls, weight: float) -> "SimpleTerm":
        return cls("l1", float(weight))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.weight == 0.0

    def value(self, x) -> float:
        if self.kind == "zero":
            return 0.0
        return self.weight * float(np.abs(x).sum())

    def __add__(self, other: "SimpleTerm") -> "SimpleTerm":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        return SimpleTerm.l1(self.weight + other.weight)


@dataclass(frozen=True)
class Anchor:
    """A weighted prox center: contributes ``weight * V(point, u)``."""

    point: np.ndarray
    weight: float


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def project_simplex(v: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = scale} (sort based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - scale
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


@dataclass(frozen=True, eq=False)
class ProxGeometry:
    """Norm, distance generating function and feasible set, plus the prox solver."""

    kind: str
    dimension: int
    feasible_set: FeasibleSet

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        fs = self.feasible_set
        if self.kind == "entropy_simplex" and fs.kind != "simplex":
            raise ValueError("entropy geometry requires a simplex feasible set")
        n = self.dimension
        if fs.kind == "box":
            lo = np.broadcast_to(np.asarray(fs.lo, dtype=float), (n,)).copy()
            hi = np.broadcast_to(np.asarray(fs.hi, dtype=float), (n,)).copy()
            object.__setattr__(self, "_lo", lo)
            object.__setattr__(self, "_hi", hi)
        elif fs.kind == "ball":
            c = np.broadcast_to(np.asarray(fs.center, dtype=float), (n,)).copy()
            object.__setattr__(self, "_center", c)

    # -- construction helpers ------------------------------------------------
    @classmethod
    def euclidean(cls, n: int, feasible_set: FeasibleSet | None = None) -> "ProxGeometry":
        return cls("euclidean", n, feasible_set or FeasibleSet.whole_space())

    @classmethod
    def entropy_simplex(cls, n: int, scale: float = 1.0) -> "ProxGeometry":
        return cls("entropy_simplex", n, FeasibleSet.simplex(scale))

    # -- norms and constants -------------------------------------------------
    @property
    def modulus(self) -> float:
        """Strong convexity modulus nu of omega w.r.t. :meth:`norm`."""
        if self.kind == "euclidean":
            return 1.0
        return 1.0 / self.feasible_set.scale

    @property
    def quadratic_growth(self) -> bool:
        """Whether V(x, z) <= ||x - z||^2 / 2 holds on X."""
        return self.kind == "euclidean"

    def norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return float(np.sqrt(x @ x))
        return float(np.abs(x).sum())

    def dual_norm(self, g) -> float:
        g = np.asarray(g, dtype=float)
        if self.kind == "euclidean":
            return float(np.sqrt(g @ g))
        return float(np.abs(g).max())

    # -- feasibility -----------------------------------------------------------
    @property
    def lo(self) -> np.ndarray:
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        return self._hi

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,) or not np.all(np.isfinite(x)):
            return False
        fs = self.feasible_set
        if fs.kind == "whole_space":
            return True
        if fs.kind == "box":
            return bool(np.all(x >= self._lo - tol) and np.all(x <= self._hi + tol))
        if fs.kind == "ball":
            return bool(np.linalg.norm(x - self._center) <= fs.radius + tol)
        return bool(np.all(x >= -tol) and abs(x.sum() - fs.scale) <= tol * self.dimension)

    def center(self) -> np.ndarray:
        """argmin of omega over X (the natural starting point)."""
        fs = self.feasible_set
        n = self.dimension
        if fs.kind == "simplex":
            return np.full(n, fs.scale / n)
        if fs.kind == "box":
            return np.clip(np.zeros(n), self._lo, self._hi)
        if fs.kind == "ball":
            c = self._center
            nc = np.linalg.norm(c)
            return c - c * min(1.0, fs.radius / nc) if nc > 0 else np.zeros(n)
        return np.zeros(n)

    # -- omega and its gradient ---------------------------------------------
    def omega(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "euclidean":
            return 0.5 * float(x @ x)
        return float(xlogy(x, x).sum())

    def mirror(self, x: np.ndarray) -> np.ndarray:
        """grad omega(x); entropy points are nudged off the boundary first."""
        if self.kind == "euclidean":
            return x
        return np.log(np.maximum(x, BOUNDARY_NUDGE)) + 1.0

    def bregman(self, x: np.ndarray, z: np.ndarray) -> float:
        """V(x, z) without input validation (diagnostic channel)."""
        if self.kind == "euclidean":
            d = z - x
            return 0.5 * float(d @ d)
        xs = np.maximum(x, BOUNDARY_NUDGE)
        val = float((xlogy(z, z) - xlogy(z, xs)).sum() - z.sum() + xs.sum())
        return max(val, 0.0)

    # -- prox solver -----------------------------------------------------------
    def supports(self, simple: SimpleTerm) -> bool:
        if simple.is_zero:
            return True
        if self.kind != "euclidean":
            return False
        fs = self.feasible_set
        # soft-thresholding then projecting is exact for a ball centred at the origin
        return fs.kind in ("whole_space", "box") or (fs.kind == "ball" and not np.any(self._center))

    def solve(self, mirror_sum: np.ndarray, weight: float, g: np.ndarray,
              simple: SimpleTerm) -> np.ndarray:
        """argmin_u <g, u> + weight * omega(u) - <mirror_sum, u> + chi(u) over X.

        No validation: callers guarantee ``weight > 0`` and a supported ``simple``.
        """
        fs = self.feasible_set
        if self.kind == "entropy_simplex":
            z = (mirror_sum - g) / weight
            return fs.scale * np.exp(z - logsumexp(z))
        return self.project((mirror_sum - g) / weight, weight, simple)

    def project(self, v: np.ndarray, weight: float, simple: SimpleTerm) -> np.ndarray:
        """Euclidean case: argmin_u weight/2 ||u - v||^2 + chi(u) over X."""
        fs = self.feasible_set
        if not simple.is_zero:
            v = soft_threshold(v, simple.weight / weight)
        if fs.kind == "whole_space":
            return v
        if fs.kind == "box":
            return np.minimum(np.maximum(v, self._lo), self._hi)
        if fs.kind == "ball":
            d = v - self._center
            nd = float(np.sqrt(d @ d))
            if nd <= fs.radius:
                return v
            return self._center + d * (fs.radius / nd)
        return project_simplex(v, fs.scale)

    # -- ranges of V -------------------------------------------------------------
    def max_bregman(self, u) -> float:
        """max_{x in X} V(x, u).

        Exact for the euclidean sets.  For the entropy simplex the supremum over
        the whole simplex is infinite; we return the maximum over points whose
        coordinates are at least ``BOUNDARY_NUDGE``, which is the set the prox
        solver actually evaluates grad omega on.
        """
        fs = self.feasible_set
        if not fs.bounded:
            raise ValueError("max_bregman requires a bounded feasible set")
        u = np.asarray(u, dtype=float)
        if self.kind == "entropy_simplex":
            n, s, d = self.dimension, fs.scale, BOUNDARY_NUDGE
            top = s - (n - 1) * d
            j = int(np.argmin(u))
            x = np.full(n, d)
            x[j] = top
            return self.bregman(x, u)
        if fs.kind == "box":
            far = np.maximum(u - self._lo, self._hi - u)
            return 0.5 * float(far @ far)
        if fs.kind == "ball":
            return 0.5 * (fs.radius + float(np.linalg.norm(u - self._center))) ** 2
        # euclidean simplex: convex in x, so a vertex is extremal
        j = int(np.argmin(u))
        return 0.5 * (float(u @ u) - 2.0 * fs.scale * u[j] + fs.scale ** 2)

    def max_bregman_from(self, x) -> float:
        """max_{u in X} V(x, u), the prox-radius of X seen from ``x``."""
        fs = self.feasible_set
        if not fs.bounded:
            raise ValueError("max_bregman_from requires a bounded feasible set")
        x = np.asarray(x, dtype=float)
        if self.kind == "entropy_simplex":
            s = fs.scale
            xs = np.maximum(x, BOUNDARY_NUDGE)
            # V(x, s e_j) = s log(s / x_j) - s + sum(x)
            return float(s * np.log(s / xs.min()) - s + xs.sum())
        return self.max_bregman(x)

    def diameter(self) -> float:
        """D_X = max_{x, y in X} V(x, y)."""
        fs = self.feasible_set
        if not fs.bounded:
            raise ValueError("diameter requires a bounded feasible set")
        if self.kind == "entropy_simplex":
            s = fs.scale
            return float(s * np.log(s / BOUNDARY_NUDGE))
        if fs.kind == "box":
            w = self._hi - self._lo
            return 0.5 * float(w @ w)
        if fs.kind == "ball":
            return 2.0 * fs.radius ** 2
        return fs.scale ** 2

    def describe(self) -> dict:
        return {"kind": self.kind, "dimension": self.dimension,
                "modulus": self.modulus, "feasible_set": self.feasible_set.describe()}


def _check_vector(name: str, v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({n},)")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def bregman(geometry: ProxGeometry, x, z) -> float:
    """Bregman distance V(x, z) = omega(z) - omega(x) - <grad omega(x), z - x>."""
    n = geometry.dimension
    x = _check_vector("x", x, n)
    z = _check_vector("z", z, n)
    if geometry.kind == "entropy_simplex" and np.any(x <= 0):
        raise ValueError("x lies on the simplex boundary; grad omega(x) is undefined")
    return geometry.bregman(x, z)


def composite_prox(geometry: ProxGeometry, simple: SimpleTerm, g,
                   anchors: Sequence[Anchor]) -> np.ndarray:
    """argmin_{u in X} <g, u> + sum_i w_i V(x_i, u) + chi(u)."""
    if not anchors:
        raise ValueError("composite_prox needs at least one anchor")
    if not geometry.supports(simple):
        raise ValueError(
            f"simple term {simple.kind!r} is not supported with {geometry.kind} "
            f"geometry on a {geometry.feasible_set.kind} set")
    n = geometry.dimension
    g = _check_vector("g", g, n)
    mirror_sum = np.zeros(n)
    total = 0.0
    for a in anchors:
        w = float(a.weight)
        if not (w > 0 and math.isfinite(w)):
            raise ValueError(f"anchor weight must be positive and finite, got {w}")
        p = _check_vector("anchor point", a.point, n)
        if not geometry.contains(p):
            raise ValueError("anchor point is not feasible")
        mirror_sum += w * geometry.mirror(p)
        total += w
    return geometry.solve(mirror_sum, total, g, simple)


def max_bregman(geometry: ProxGeometry, u) -> float:
    return geometry.max_bregman(u)

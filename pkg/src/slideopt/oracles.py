"""First-order oracles with exact call accounting.

Only the oracle calls that an algorithm is charged for are counted: gradients of f,
subgradients of h and stochastic samples of h'.  Function values are diagnostic and
go through an uncounted channel, so measuring a gap never changes the complexity
figures of a run.
"""
from __future__ import annotations

import copy
import threading
from dataclasses import dataclass, field, replace
import numpy as np

from .prox import ProxGeometry, SimpleTerm


class _Counted:
    """Mixin holding one thread-safe call counter."""

    def __init__(self):
        self.calls = 0
        self._lock = threading.Lock()

    def _tick(self, k: int = 1):
        with self._lock:
            self.calls += k

    def reset(self):
        with self._lock:
            self.calls = 0

    def clone(self):
        """Copy sharing all data but with a fresh counter."""
        other = copy.copy(self)
        other.calls = 0
        other._lock = threading.Lock()
        return other

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()


class SmoothOracle(_Counted):
    """Smooth convex f with L-Lipschitz gradient and strong convexity modulus mu.

    Subclasses implement ``_value`` and ``_gradient``.
    """

    lipschitz: float
    strong_convexity: float

    def __init__(self, lipschitz: float, strong_convexity: float = 0.0):
        super().__init__()
        if not lipschitz > 0:
            raise ValueError("Lipschitz constant must be positive")
        if strong_convexity < 0:
            raise ValueError("strong convexity modulus must be nonnegative")
        self.lipschitz = float(lipschitz)
        self.strong_convexity = float(strong_convexity)

    def value(self, x) -> float:
        return self._value(np.asarray(x, dtype=float))

    def gradient(self, x) -> np.ndarray:
        self._tick()
        return self._gradient(np.asarray(x, dtype=float))

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class LeastSquaresFactor:
    """f(x) = 0.5 ||Ax - b||^2 + 0.5 mu ||x||^2 - <c, x> (used by the dual certificate)."""

    A: np.ndarray
    b: np.ndarray
    mu: float
    c: np.ndarray


class QuadraticSmooth(SmoothOracle):
    """f(x) = 0.5 x'Qx - <c, x> + const, with Q symmetric PSD.

    L is the largest eigenvalue of Q, mu the smallest (clipped at zero) unless given.
    """

    def __init__(self, Q, c=None, const: float = 0.0, lipschitz=None,
                 strong_convexity=None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        n = Q.shape[0]
        c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
        if lipschitz is None or strong_convexity is None:
            ev = np.linalg.eigvalsh(Q)
            lipschitz = float(ev[-1]) if lipschitz is None else lipschitz
            strong_convexity = max(float(ev[0]), 0.0) if strong_convexity is None else strong_convexity
        super().__init__(lipschitz, strong_convexity)
        self.Q, self.c, self.const = Q, c, float(const)
        self.dimension = n
        self.factor: LeastSquaresFactor | None = None

    @classmethod
    def least_squares(cls, A, b, mu: float = 0.0, scale: float = 1.0,
                      lipschitz=None) -> "QuadraticSmooth":
        """scale * 0.5 ||Ax - b||^2 + 0.5 mu ||x||^2."""
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        Q = scale * (A.T @ A) + mu * np.eye(A.shape[1])
        c = scale * (A.T @ b)
        obj = cls(Q, c, 0.5 * scale * float(b @ b), lipschitz=lipschitz,
                  strong_convexity=None if mu == 0 else mu)
        root = np.sqrt(scale)
        obj.factor = LeastSquaresFactor(root * A, root * b, float(mu), np.zeros(A.shape[1]))
        return obj

    def _value(self, x):
        fac = self.factor
        if fac is not None:
            r = fac.A @ x - fac.b
            return 0.5 * float(r @ r) + 0.5 * fac.mu * float(x @ x) - float(fac.c @ x)
        return 0.5 * float(x @ (self.Q @ x)) - float(self.c @ x) + self.const

    def _gradient(self, x):
        return self.Q @ x - self.c


class NonsmoothOracle(_Counted):
    """Convex h with subgradients bounded by M in the dual norm (Lipschitz-type bound)."""

    bound: float

    def __init__(self, bound: float):
        super().__init__()
        if bound < 0:
            raise ValueError("M must be nonnegative")
        self.bound = float(bound)

    def value(self, x) -> float:
        return self._value(np.asarray(x, dtype=float))

    def subgradient(self, x) -> np.ndarray:
        self._tick()
        return self._subgradient(np.asarray(x, dtype=float))

    def as_simple_term(self) -> SimpleTerm | None:
        """The same function as a prox-friendly :class:`SimpleTerm`, if it is one."""
        return None

    def _value(self, x):
        raise NotImplementedError

    def _subgradient(self, x):
        raise NotImplementedError


class ZeroNonsmooth(NonsmoothOracle):
    def __init__(self, n: int):
        super().__init__(0.0)
        self.dimension = n

    def _value(self, x):
        return 0.0

    def _subgradient(self, x):
        return np.zeros(self.dimension)

    def as_simple_term(self):
        return SimpleTerm.zero()


class L1Nonsmooth(NonsmoothOracle):
    """h(x) = lam * ||Bx||_1 (B = identity when omitted).

    The bound M has to cover h(x) - h(y) - <h'(y), x - y> <= M ||x - y||, which for
    an l1 term costs twice the subgradient norm: M = 2 lam sqrt(p) ||B||_2 (l2 primal
    norm) or 2 lam max_j sum_i |B_ij| (l1 primal norm).
    """

    def __init__(self, n: int, lam: float, B=None, primal_norm: str = "l2"):
        if lam < 0 or not np.isfinite(lam):
            raise ValueError("lam must be finite and nonnegative")
        self.dimension = n
        self.lam = float(lam)
        self.B = None if B is None else np.asarray(B, dtype=float)
        if self.B is not None and self.B.shape[1] != n:
            raise ValueError("B has the wrong number of columns")
        if primal_norm == "l2":
            if self.B is None:
                per = np.sqrt(n)
            else:
                per = np.sqrt(self.B.shape[0]) * np.linalg.norm(self.B, 2)
        elif primal_norm == "l1":
            per = 1.0 if self.B is None else float(np.abs(self.B).sum(axis=0).max())
        else:
            raise ValueError(f"unknown primal norm {primal_norm!r}")
        super().__init__(2.0 * self.lam * per)

    def _value(self, x):
        z = x if self.B is None else self.B @ x
        return self.lam * float(np.abs(z).sum())

    def _subgradient(self, x):
        if self.B is None:
            return self.lam * np.sign(x)
        return self.lam * (self.B.T @ np.sign(self.B @ x))

    def as_simple_term(self):
        if self.B is None:
            return SimpleTerm.l1(self.lam)
        return None


class AbsLossNonsmooth(NonsmoothOracle):
    """h(x) = mean_j |<a_j, x> - b_j| over a finite sample of rows."""

    def __init__(self, rows, targets, weight: float = 1.0):
        rows = np.asarray(rows, dtype=float)
        self.rows, self.targets, self.weight = rows, np.asarray(targets, dtype=float), float(weight)
        self.dimension = rows.shape[1]
        self.row_norm_max = float(np.linalg.norm(rows, axis=1).max())
        super().__init__(2.0 * self.weight * self.row_norm_max)

    def _value(self, x):
        return self.weight * float(np.abs(self.rows @ x - self.targets).mean())

    def _subgradient(self, x):
        s = np.sign(self.rows @ x - self.targets)
        return self.weight * (s @ self.rows) / self.rows.shape[0]


class SampleStream:
    """Pre-drawn randomness for one outer iteration; row t feeds inner step t."""

    def __init__(self, oracle: "StochasticOracle", block, size: int):
        self.oracle = oracle
        self.block = block
        self.size = size
        self.pos = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.pos >= self.size:
            raise RuntimeError("sample stream exhausted")
        t = self.pos
        self.pos += 1
        self.oracle._tick()
        return self.oracle._sample(x, self.block, t)


class StochasticOracle(_Counted):
    """Unbiased sampler H(x, xi) of a subgradient of h with E||H - h'||_*^2 <= sigma^2.

    Randomness for outer iteration ``k`` of phase ``phase`` comes from the generator
    seeded with ``(seed, phase, k)``; the inner step index selects a row of the
    block drawn from it, so a stream is reproducible on its own.
    """

    sigma: float
    light_tail: bool = True

    def __init__(self, nonsmooth: NonsmoothOracle, sigma: float):
        super().__init__()
        if sigma < 0 or not np.isfinite(sigma):
            raise ValueError("sigma must be finite and nonnegative")
        self.nonsmooth = nonsmooth
        self.sigma = float(sigma)

    def stream(self, seed: int, phase: int, k: int, size: int) -> SampleStream:
        rng = np.random.default_rng([int(seed), int(phase), int(k)])
        return SampleStream(self, self._draw(rng, size), size)

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        """A single draw from ``rng`` (convenience for statistical checks)."""
        self._tick()
        return self._sample(np.asarray(x, dtype=float), self._draw(rng, 1), 0)

    def _draw(self, rng, size):
        raise NotImplementedError

    def _sample(self, x, block, t):
        raise NotImplementedError


class AdditiveNoise(StochasticOracle):
    """H = h'(x) + sigma * r * v, r ~ U[0, 1], v uniform on the dual-norm unit sphere.

    ||H - h'||_* <= sigma surely and E||H - h'||_*^2 = sigma^2 / 3.  With
    ``sigma == 0`` the exact subgradient is returned untouched.
    """

    def __init__(self, nonsmooth: NonsmoothOracle, sigma: float, n: int,
                 dual_norm: str = "l2"):
        super().__init__(nonsmooth, sigma)
        if dual_norm not in ("l2", "linf"):
            raise ValueError(f"unknown dual norm {dual_norm!r}")
        self.dimension = n
        self.dual_norm = dual_norm

    def _draw(self, rng, size):
        if self.sigma == 0.0:
            return None
        n = self.dimension
        if self.dual_norm == "l2":
            v = rng.standard_normal((size, n))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
        else:
            v = rng.uniform(-1.0, 1.0, (size, n))
            face = rng.integers(0, n, size)
            v[np.arange(size), face] = rng.choice([-1.0, 1.0], size)
        r = rng.uniform(0.0, 1.0, size)
        return (self.sigma * r)[:, None] * v

    def _sample(self, x, block, t):
        g = self.nonsmooth._subgradient(x)
        if block is None:
            return g
        return g + block[t]


class RowSampling(StochasticOracle):
    """Single-row subgradient of an :class:`AbsLossNonsmooth` average."""

    def __init__(self, nonsmooth: AbsLossNonsmooth):
        # ||a_j s_j - h'(x)|| <= 2 max_j ||a_j||, so the noise is bounded surely
        super().__init__(nonsmooth, 2.0 * nonsmooth.weight * nonsmooth.row_norm_max)

    def _draw(self, rng, size):
        return rng.integers(0, self.nonsmooth.rows.shape[0], size)

    def _sample(self, x, block, t):
        h = self.nonsmooth
        a = h.rows[block[t]]
        return h.weight * np.sign(a @ x - h.targets[block[t]]) * a


@dataclass
class Reference:
    """Reference solution: ``value`` is a certified lower bound on the optimum."""

    x: np.ndarray
    value: float
    certified_gap: float
    method: str


@dataclass(eq=False)
class CompositeProblem:
    """Psi(x) = f(x) + h(x) + chi(x) over the feasible set of ``geometry``."""

    geometry: ProxGeometry
    smooth: SmoothOracle
    nonsmooth: NonsmoothOracle
    simple: SimpleTerm = field(default_factory=SimpleTerm.zero)
    stochastic: StochasticOracle | None = None
    reference: Reference | None = None
    x0: np.ndarray | None = None
    name: str = "custom"
    info: dict = field(default_factory=dict)
    saddle: object | None = None

    def __post_init__(self):
        n = self.geometry.dimension
        for part in (self.smooth, self.nonsmooth, self.stochastic):
            dim = getattr(part, "dimension", n)
            if part is not None and dim != n:
                raise ValueError("oracle dimensions disagree with the geometry")
        if not self.geometry.supports(self.simple):
            raise ValueError("simple term is not supported by the geometry")
        if self.x0 is None:
            self.x0 = self.geometry.center()
        elif not self.geometry.contains(self.x0):
            raise ValueError("x0 is not feasible")

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    @property
    def L(self) -> float:
        return self.smooth.lipschitz

    @property
    def M(self) -> float:
        return self.nonsmooth.bound

    @property
    def mu(self) -> float:
        return self.smooth.strong_convexity

    @property
    def nu(self) -> float:
        return self.geometry.modulus

    @property
    def sigma(self) -> float:
        return 0.0 if self.stochastic is None else self.stochastic.sigma

    def psi(self, x) -> float:
        """Objective value through the uncounted channel."""
        x = np.asarray(x, dtype=float)
        # a smoothed saddle f is always scored with the exact max, not the surrogate
        fx = self.saddle.exact_value(x) if self.saddle is not None else self.smooth._value(x)
        return fx + self.nonsmooth._value(x) + self.simple.value(x)

    def gap(self, x) -> float:
        if self.reference is None:
            raise ValueError("problem has no reference optimum")
        return self.psi(x) - self.reference.value

    def counters(self) -> tuple[int, int, int]:
        stoch = 0 if self.stochastic is None else self.stochastic.calls
        return (self.smooth.calls, self.nonsmooth.calls, stoch)

    def reset_counters(self):
        self.smooth.reset()
        self.nonsmooth.reset()
        if self.stochastic is not None:
            self.stochastic.reset()

    def fresh(self) -> "CompositeProblem":
        """Shallow copy with its own zeroed counters (for one run or trial)."""
        h = self.nonsmooth.clone()
        stoch = None
        if self.stochastic is not None:
            stoch = self.stochastic.clone()
            stoch.nonsmooth = h
        return replace(self, smooth=self.smooth.clone(), nonsmooth=h, stochastic=stoch)

    def with_sigma(self, sigma: float) -> "CompositeProblem":
        """Copy whose stochastic oracle is additive noise of level ``sigma``."""
        dual = "l2" if self.geometry.kind == "euclidean" else "linf"
        h = self.nonsmooth.clone()
        return replace(self, smooth=self.smooth.clone(), nonsmooth=h,
                       stochastic=AdditiveNoise(h, sigma, self.dimension, dual))


def counters(problem: CompositeProblem) -> tuple[int, int, int]:
    """(grad_calls, subgrad_calls, stoch_calls) since the last reset."""
    return problem.counters()

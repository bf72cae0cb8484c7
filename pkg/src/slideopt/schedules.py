"""Parameter schedules for gradient sliding.

Outer iteration k uses (beta_k, gamma_k, T_k).  Inner step t of the sliding
procedure uses p_t = t/2 and theta_t = 2(t+1)/(t(t+3)); the running products

    P_0 = 1,  P_t = P_{t-1} p_t / (1 + p_t)  = 2 / ((t+1)(t+2))
    Gamma_1 = 1,  Gamma_k = (1 - gamma_k) Gamma_{k-1}

appear in every bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

POLICY_KINDS = ("fixed_horizon", "compact_set", "custom")


def ceil_count(v: float) -> int:
    """ceil(v) that forgives floating noise at integers, and never returns < 1."""
    r = round(v)
    if abs(v - r) <= 1e-9 * max(1.0, abs(v)):
        return max(int(r), 1)
    return max(math.ceil(v), 1)


def p(t: int) -> float:
    return t / 2.0


def theta(t: int) -> float:
    return 2.0 * (t + 1) / (t * (t + 3))


def big_p(t: int) -> float:
    return 2.0 / ((t + 1) * (t + 2))


@dataclass(frozen=True)
class SlidingSchedule:
    """All per-iteration constants of one GS or SGS run.

    ``noise`` is sigma^2 for the stochastic variants; it only enters T_k.
    For ``custom`` schedules the three sequences are given explicitly and
    Gamma_k is formed by the product recursion.
    """

    kind: str
    L: float
    M: float
    nu: float
    d_tilde: float
    horizon: int | None = None
    noise: float = 0.0
    betas: tuple = field(default=(), repr=False)
    gammas: tuple = field(default=(), repr=False)
    periods: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}")
        for name in ("L", "nu", "d_tilde"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.M < 0 or self.noise < 0:
            raise ValueError("M and sigma^2 must be nonnegative")
        if self.kind == "fixed_horizon" and (self.horizon is None or self.horizon < 1):
            raise ValueError("fixed_horizon needs N >= 1")
        if self.kind == "custom":
            n = len(self.betas)
            if n == 0 or len(self.gammas) != n or len(self.periods) != n:
                raise ValueError("custom schedule needs equal-length beta, gamma, T sequences")
            if any(not b > 0 for b in self.betas):
                raise ValueError("beta_k must be positive")
            if any(not 0 <= g <= 1 for g in self.gammas):
                raise ValueError("gamma_k must lie in [0, 1]")
            if any(int(t) != t or t < 1 for t in self.periods):
                raise ValueError("T_k must be integers >= 1")
            object.__setattr__(self, "horizon", n)

    # -- inner constants -------------------------------------------------------
    p = staticmethod(p)
    theta = staticmethod(theta)
    big_p = staticmethod(big_p)

    # -- outer constants -------------------------------------------------------
    @property
    def q(self) -> float:
        return self.M ** 2 + self.noise

    def gamma(self, k: int) -> float:
        if self.kind == "fixed_horizon":
            return 2.0 / (k + 1)
        if self.kind == "compact_set":
            return 3.0 / (k + 2)
        return float(self.gammas[k - 1])

    def big_t(self, k: int) -> int:
        if self.kind == "fixed_horizon":
            return ceil_count(self.q * self.horizon * k * k / (self.d_tilde * self.L ** 2))
        if self.kind == "compact_set":
            return ceil_count(self.q * (k + 1) ** 3 / (self.d_tilde * self.L ** 2))
        return int(self.periods[k - 1])

    def beta(self, k: int) -> float:
        if self.kind == "fixed_horizon":
            return 2.0 * self.L / (self.nu * k)
        if self.kind == "compact_set":
            return 9.0 * self.L * (1.0 - big_p(self.big_t(k))) / (2.0 * self.nu * (k + 1))
        return float(self.betas[k - 1])

    def big_gamma(self, k: int) -> float:
        if self.kind == "fixed_horizon":
            return 2.0 / (k * (k + 1))
        if self.kind == "compact_set":
            return 6.0 / (k * (k + 1) * (k + 2))
        g = 1.0
        for j in range(2, k + 1):
            g *= 1.0 - self.gamma(j)
        return g

    def ratio(self, k: int) -> float:
        """gamma_k beta_k / (Gamma_k (1 - P_{T_k})), whose monotonicity selects the bound."""
        return self.gamma(k) * self.beta(k) / (self.big_gamma(k) * (1.0 - big_p(self.big_t(k))))

    # -- validity checks -------------------------------------------------------
    def check(self, L: float | None = None, nu: float | None = None, N: int | None = None):
        """Raise ValueError unless gamma_1 = 1 and nu beta_k >= L gamma_k for k <= N."""
        L = self.L if L is None else L
        nu = self.nu if nu is None else nu
        N = self._n(N)
        if abs(self.gamma(1) - 1.0) > 1e-12:
            raise ValueError("schedule requires gamma_1 = 1")
        for k in range(1, N + 1):
            if nu * self.beta(k) - L * self.gamma(k) < -1e-12 * L:
                raise ValueError(
                    f"schedule violates nu*beta_k >= L*gamma_k at k={k} "
                    f"(beta={self.beta(k):.6g}, gamma={self.gamma(k):.6g}, L={L:.6g})")

    def ratio_nonincreasing(self, N: int | None = None) -> bool:
        N = self._n(N)
        r = [self.ratio(k) for k in range(1, N + 1)]
        return all(b <= a * (1 + 1e-12) for a, b in zip(r, r[1:]))

    def ratio_nondecreasing(self, N: int | None = None) -> bool:
        N = self._n(N)
        r = [self.ratio(k) for k in range(1, N + 1)]
        return all(b >= a * (1 - 1e-12) for a, b in zip(r, r[1:]))

    def total_periods(self, N: int | None = None) -> int:
        return sum(self.big_t(k) for k in range(1, self._n(N) + 1))

    def _n(self, N):
        if N is not None:
            return int(N)
        if self.horizon is None:
            raise ValueError("this schedule has no horizon; pass N")
        return self.horizon

    def describe(self) -> dict:
        out = {"policy": self.kind, "L": self.L, "M": self.M, "nu": self.nu,
               "d_tilde": self.d_tilde, "N": self.horizon, "sigma2": self.noise}
        return out


def schedule_fixed_horizon(L: float, M: float, nu: float, N: int, d_tilde: float,
                           sigma: float = 0.0) -> SlidingSchedule:
    """beta_k = 2L/(nu k), gamma_k = 2/(k+1), T_k = ceil((M^2+sigma^2) N k^2 / (D L^2))."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be an integer >= 1, got {N}")
    if M < 0:
        raise ValueError("M must be nonnegative")
    return SlidingSchedule("fixed_horizon", float(L), float(M), float(nu), float(d_tilde),
                           horizon=int(N), noise=float(sigma) ** 2)


def schedule_compact_set(L: float, M: float, nu: float, d_tilde: float,
                         sigma: float = 0.0, N: int | None = None) -> SlidingSchedule:
    """gamma_k = 3/(k+2), T_k = ceil((M^2+sigma^2)(k+1)^3 / (D L^2)),
    beta_k = 9 L (1 - P_{T_k}) / (2 nu (k+1))."""
    return SlidingSchedule("compact_set", float(L), float(M), float(nu), float(d_tilde),
                           horizon=None if N is None else int(N), noise=float(sigma) ** 2)


def schedule_custom(L: float, M: float, nu: float, betas: Sequence[float],
                    gammas: Sequence[float], periods: Sequence[int],
                    d_tilde: float = 1.0) -> SlidingSchedule:
    return SlidingSchedule("custom", float(L), float(M), float(nu), float(d_tilde),
                           betas=tuple(float(b) for b in betas),
                           gammas=tuple(float(g) for g in gammas),
                           periods=tuple(int(t) for t in periods))


def default_d_tilde(kind: str, d_x: float, nu: float, stochastic: bool = False) -> float:
    """D-tilde tuned for the optimal complexity of each policy."""
    if kind == "fixed_horizon":
        return 3.0 * d_x / ((4.0 if stochastic else 2.0) * nu)
    if kind == "compact_set":
        return 81.0 * d_x / ((32.0 if stochastic else 16.0) * nu)
    raise ValueError(f"no default D-tilde for policy {kind!r}")

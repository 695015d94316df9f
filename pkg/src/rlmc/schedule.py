"""Step-size sequences for constant and decreasing-step RLMC.

``Polynomial(c, alpha)`` uses ``gamma_n = c * n**(-alpha)`` for ``n >= 1``.

The regularity constant ``omega = limsup (gamma_n^{1/2} - gamma_{n+1}^{1/2}) /
gamma_{n+1}^{3/2}`` has closed forms for these families. Expanding
``n^{-alpha/2} - (n+1)^{-alpha/2} ~ (alpha/2) n^{-alpha/2-1}`` gives a ratio
``~ (alpha / 2c) n^{alpha - 1}``: ``1/(2c)`` when ``alpha = 1``, zero when
``alpha < 1`` and unbounded when ``alpha > 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

CONSTANT = "constant"
POLYNOMIAL = "polynomial"


class ScheduleError(ValueError):
    """A schedule violates the hypotheses required by the caller."""


@dataclass(frozen=True)
class Diagnosis:
    valid_for_decreasing: bool
    reasons: list = field(default_factory=list)

    def __bool__(self):
        return self.valid_for_decreasing


@dataclass(frozen=True)
class ScheduleTimes:
    """Cumulative times ``t[0] = 0``, ``t[k] = gamma_1 + ... + gamma_k``."""

    t: np.ndarray
    gammas: np.ndarray

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class DiscountedStepSum:
    """``u[n]`` for ``n = 0..n_max`` plus ``u_n / sqrt(gamma_n)`` diagnostics."""

    u: np.ndarray
    ratio: np.ndarray
    running_max: np.ndarray

    @property
    def sup(self) -> float:
        return float(self.running_max[-1]) if len(self.running_max) else 0.0


@dataclass(frozen=True)
class StepSchedule:
    kind: str
    eta: float = 0.0
    c: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind == CONSTANT:
            if not self.eta > 0:
                raise ValueError("constant step size must be positive")
        elif self.kind == POLYNOMIAL:
            if not self.c > 0 or not self.alpha > 0:
                raise ValueError("polynomial schedule needs c > 0 and alpha > 0")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, eta: float) -> "StepSchedule":
        return cls(CONSTANT, eta=float(eta))

    @classmethod
    def polynomial(cls, c: float, alpha: float = 1.0) -> "StepSchedule":
        return cls(POLYNOMIAL, c=float(c), alpha=float(alpha))

    def gamma(self, n: int) -> float:
        if n < 1:
            raise ValueError("step index starts at 1")
        if self.kind == CONSTANT:
            return self.eta
        return self.c * float(n) ** (-self.alpha)

    def gammas(self, n_max: int, start: int = 1) -> np.ndarray:
        """``gamma_start, ..., gamma_{start + n_max - 1}`` as an array."""
        if start < 1:
            raise ValueError("step index starts at 1")
        if self.kind == CONSTANT:
            return np.full(n_max, self.eta)
        n = np.arange(start, start + n_max, dtype=np.float64)
        return self.c * n ** (-self.alpha)

    def omega(self) -> float:
        if self.kind == CONSTANT:
            return 0.0
        if self.alpha == 1.0:
            return 1.0 / (2.0 * self.c)
        return 0.0 if self.alpha < 1.0 else math.inf

    def omega_ratio(self, n) -> np.ndarray:
        """The ratio inside the limsup defining omega, evaluated at ``n``.

        The numerator is rewritten as ``(g_n - g_{n+1}) / (sqrt(g_n) + sqrt(g_{n+1}))``
        with ``g_n - g_{n+1}`` from ``expm1``/``log1p`` to avoid cancellation.
        """
        n = np.asarray(n, dtype=np.float64)
        if self.kind == CONSTANT:
            return np.zeros_like(n)
        g0 = self.c * n ** (-self.alpha)
        g1 = self.c * (n + 1) ** (-self.alpha)
        dg = -g0 * np.expm1(-self.alpha * np.log1p(1.0 / n))
        return dg / (np.sqrt(g0) + np.sqrt(g1)) / g1 ** 1.5

    def validate(self, m: float) -> Diagnosis:
        """Check the decreasing-step hypotheses: gamma_n -> 0, sum = inf, omega < m/2."""
        if not m > 0:
            raise ValueError("m must be positive")
        reasons = []
        if self.kind == CONSTANT:
            reasons.append("gamma_n does not tend to 0 (constant step size)")
        elif self.alpha > 1.0:
            reasons.append(f"sum of gamma_n is finite (alpha = {self.alpha:g} > 1)")
        w = self.omega()
        if w >= m / 2:
            reasons.append(f"omega >= m/2: omega = {w:g}, m/2 = {m / 2:g}")
        return Diagnosis(not reasons, reasons)

    def times(self, n_max: int) -> ScheduleTimes:
        g = self.gammas(n_max)
        t = np.empty(n_max + 1)
        t[0] = 0.0
        t[1:] = kernels.compensated_cumsum(g)
        return ScheduleTimes(t, g)

    def lemma_step_sequence(self, m: float, n_max: int) -> DiscountedStepSum:
        """``u_n = sum_{k<=n} gamma_k^{3/2} exp(-(m/2)(t_n - t_k))`` by forward recursion."""
        w = self.omega()
        if not m > 2 * w:
            raise ScheduleError(f"need m > 2*omega, got m = {m:g}, omega = {w:g}")
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        g = self.gammas(n_max)
        u = np.empty(n_max + 1)
        u[0] = 0.0
        u[1:] = kernels.affine_recursion(np.exp(-0.5 * m * g), g ** 1.5, 0.0)
        ratio = u[1:] / np.sqrt(g)
        return DiscountedStepSum(u, ratio, np.maximum.accumulate(ratio))

    def exp_decay_ratio(self, m: float, n_max: int) -> np.ndarray:
        """``exp(-m t_n) / sqrt(gamma_n)`` for ``n = 1..n_max``."""
        tt = self.times(n_max)
        return np.exp(-m * tt.t[1:]) / np.sqrt(tt.gammas)

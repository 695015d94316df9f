"""Empirical distances, the drift-inequality check, a test-function proxy for
the smooth-function distance, the semigroup gradient-decay check and log-log
slope fitting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .potential import Potential
from .sampler import rlmc_step
from .streams import RngStreams

MC_BLOCK = 1 << 18


# --------------------------------------------------------------------------
# Wasserstein distances in one dimension

def empirical_w_1d(samples_a, samples_b, order: int = 1) -> float:
    """Exact W_p between two one-dimensional empirical measures.

    Equal sample counts reduce to matching sorted samples. Unequal counts are
    handled exactly by merging the two quantile functions on the union of
    their breakpoints.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    a = np.sort(np.ravel(np.asarray(samples_a, dtype=np.float64)))
    b = np.sort(np.ravel(np.asarray(samples_b, dtype=np.float64)))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if a.size == b.size:
        diff = np.abs(a - b)
        return float(np.mean(diff) if order == 1 else np.sqrt(np.mean(diff * diff)))
    levels = np.union1d(np.arange(1, a.size + 1) / a.size, np.arange(1, b.size + 1) / b.size)
    levels[-1] = 1.0
    widths = np.diff(np.concatenate(([0.0], levels)))
    mid = levels - 0.5 * widths
    qa = a[np.minimum((mid * a.size).astype(np.int64), a.size - 1)]
    qb = b[np.minimum((mid * b.size).astype(np.int64), b.size - 1)]
    diff = np.abs(qa - qb)
    return float(np.sum(widths * diff) if order == 1 else np.sqrt(np.sum(widths * diff * diff)))


def bootstrap_se(stat: Callable, samples_a, samples_b, n_boot: int, rng: np.random.Generator) -> float:
    """Bootstrap standard error of ``stat(a, b)`` resampling both samples."""
    a = np.asarray(samples_a)
    b = np.asarray(samples_b)
    vals = np.empty(n_boot)
    for i in range(n_boot):
        vals[i] = stat(a[rng.integers(0, len(a), len(a))], b[rng.integers(0, len(b), len(b))])
    return float(np.std(vals, ddof=1))


# --------------------------------------------------------------------------
# Test-function suite

@dataclass(frozen=True)
class TestFunction:
    """Smooth ``h`` with certified sup-norms of its gradient and Hessian."""

    __test__ = False  # not a pytest class

    name: str
    func: Callable
    grad: Callable
    grad_bound: float
    hess_bound: float

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=np.float64))


def _coord_tanh(i):
    def f(x):
        return np.tanh(x[..., i])

    def g(x):
        out = np.zeros_like(x)
        out[..., i] = 1.0 / np.cosh(x[..., i]) ** 2
        return out
    # |tanh''| = 2|tanh| sech^2 <= 4 / (3 sqrt 3)
    return TestFunction(f"tanh[x{i + 1}]", f, g, 1.0, 4.0 / (3.0 * np.sqrt(3.0)))


def _coord_half_logcosh(i):
    def f(x):
        ax = np.abs(x[..., i])
        return 0.5 * (ax + np.log1p(np.exp(-2 * ax)) - np.log(2.0))

    def g(x):
        out = np.zeros_like(x)
        out[..., i] = 0.5 * np.tanh(x[..., i])
        return out
    return TestFunction(f"half_logcosh[x{i + 1}]", f, g, 0.5, 0.5)


def _bump(c):
    c = np.asarray(c, dtype=np.float64)

    def f(x):
        r2 = np.sum((x - c) ** 2, axis=-1)
        return np.exp(-r2 / 4.0)

    def g(x):
        diff = x - c
        return -0.5 * diff * np.exp(-np.sum(diff * diff, axis=-1) / 4.0)[..., None]
    # |grad| = (r/2) e^{-r^2/4} peaks at r = sqrt 2; Hessian eigenvalues e^{-r^2/4}(-1/2), e^{-r^2/4}(r^2/4 - 1/2)
    label = ",".join(f"{v:g}" for v in c)
    return TestFunction(f"bump[{label}]", f, g, float(np.sqrt(0.5) * np.exp(-0.5)), 0.5)


def default_suite(dim: int, centers: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0)) -> list:
    """Coordinate tanh and half log-cosh per axis, plus Gaussian bumps on the diagonal.

    Bump centres are ``c * (1, ..., 1) / sqrt(dim)`` for each ``c`` in ``centers``.
    Every member has gradient and Hessian sup-norms at most 1.
    """
    suite = [_coord_tanh(i) for i in range(dim)]
    suite += [_coord_half_logcosh(i) for i in range(dim)]
    suite += [_bump(np.full(dim, c / np.sqrt(dim))) for c in centers]
    return suite


def _as_2d(x):
    x = np.asarray(x, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def dG_proxy(samples_a, samples_b, suite=None) -> float:
    """``max_h |mean_a h - mean_b h|`` over the suite; a lower bound on d_G."""
    a = _as_2d(samples_a)
    b = _as_2d(samples_b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("empty sample")
    suite = default_suite(a.shape[1]) if suite is None else suite
    return float(max(abs(np.mean(h(a)) - np.mean(h(b))) for h in suite))


# --------------------------------------------------------------------------
# Drift inequality

def drift_constants(m: float, L: float, d: int, eta: float):
    """``(lambda, b)`` of the Lyapunov bound ``Q V <= lambda V + b`` for ``V = |x|^2``."""
    lam = 1.0 - 2.0 * m * eta + (2.0 * L * L + 1.0) * eta * eta
    b = (2.0 + L * L) * d * eta + L * L * d * eta ** 3
    return lam, b


@dataclass(frozen=True)
class DriftRecord:
    x: np.ndarray
    Q_eta_V_estimate: float
    standard_error: float
    lambda_V_plus_b: float
    exact: float | None
    passed: bool
    exact_passed: bool | None


def _check_drift_step(p, eta):
    if not 0 < eta <= p.m / p.L ** 2:
        raise ValueError(f"drift bound needs 0 < eta <= m/L^2 = {p.m / p.L ** 2:g}, got {eta:g}")


def one_step_second_moment_mc(p: Potential, x, eta: float, n_mc: int, rng: RngStreams,
                              block: int = MC_BLOCK):
    """Monte Carlo ``E|X_1|^2`` from ``x``; returns ``(mean, standard_error)``."""
    x = np.asarray(x, dtype=np.float64)
    total = 0.0
    total_sq = 0.0
    for start in range(0, n_mc, block):
        k = min(block, n_mc - start)
        u = rng.draw_u(k)
        xi_p = rng.draw_xi_prime((k, p.dim))
        xi = rng.draw_xi((k, p.dim))
        x1, _ = rlmc_step(p, np.broadcast_to(x, (k, p.dim)), eta, u, xi, xi_p)
        v = np.einsum("ij,ij->i", x1, x1)
        total += v.sum()
        total_sq += (v * v).sum()
    mean = total / n_mc
    var = max(total_sq / n_mc - mean * mean, 0.0) * n_mc / max(n_mc - 1, 1)
    return mean, float(np.sqrt(var / n_mc))


def drift_check(p: Potential, eta: float, x_grid, n_mc: int, rng: RngStreams,
                n_se: float = 3.0) -> list:
    """Check ``Q_eta V(x) <= lambda V(x) + b`` at each grid point.

    The Monte Carlo estimate passes when it is at most ``lambda V + b`` plus
    ``n_se`` standard errors. For diagonal quadratic potentials the exact
    one-step second moment is also compared with zero tolerance.
    """
    _check_drift_step(p, eta)
    lam, b = drift_constants(p.m, p.L, p.dim, eta)
    out = []
    for x in x_grid:
        x = np.broadcast_to(np.asarray(x, dtype=np.float64), (p.dim,)).copy()
        bound = lam * float(x @ x) + b
        est, se = one_step_second_moment_mc(p, x, eta, n_mc, rng)
        exact = oracle.one_step_second_moment(p, x, eta) if p.is_diagonal else None
        out.append(DriftRecord(x, est, se, bound, exact, est <= bound + n_se * se,
                               None if exact is None else exact <= bound))
    return out


# --------------------------------------------------------------------------
# Semigroup gradient decay

@dataclass(frozen=True)
class GradientDecayRecord:
    t: float
    grad_estimate: np.ndarray
    grad_estimate_norm: float
    standard_error: float
    bound: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.grad_estimate_norm <= self.bound + self.tolerance


def semigroup_gradient_decay(A, h: TestFunction, t_grid, x, delta: float, n_mc: int,
                             rng: RngStreams, n_se: float = 3.0) -> list:
    """Finite-difference estimate of ``grad P_t h(x)`` for the Gaussian semigroup.

    ``P_t h(x) = E h(exp(-A t) x + sd_t Z)``; the central differences at
    ``x +- delta e_i`` reuse the same ``Z`` (common random numbers), drawn from
    the ``xi`` substream. The bound is ``||grad h|| exp(-m t)``; the tolerance
    adds ``n_se`` standard errors and ``delta^2`` for the difference error.
    """
    if isinstance(A, Potential) and not A.is_quadratic:
        raise ValueError("semigroup check needs a quadratic potential")
    lam = oracle._diag(A)
    d = len(lam)
    m = float(lam.min())
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), (d,))
    out = []
    for t in t_grid:
        law = oracle.ou_transition(lam, np.zeros(d), t)
        sd = np.sqrt(law.var)
        decay = np.exp(-lam * t)
        z = rng.draw_xi((n_mc, d))
        g = np.empty(d)
        se = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = delta
            fp = h(decay * (x + e) + sd * z)
            fm = h(decay * (x - e) + sd * z)
            diff = (fp - fm) / (2 * delta)
            g[i] = diff.mean()
            se[i] = diff.std(ddof=1) / np.sqrt(n_mc)
        se_norm = float(np.sqrt(np.sum(se * se)))
        out.append(GradientDecayRecord(float(t), g, float(np.linalg.norm(g)), se_norm,
                                       h.grad_bound * np.exp(-m * t), n_se * se_norm + delta ** 2))
    return out


# --------------------------------------------------------------------------
# Slope fitting

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    standard_error: float


def slope_fit(points) -> SlopeFit:
    """Ordinary least squares on ``(log_x, log_y)`` pairs."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (log_x, log_y) points")
    lx, ly = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite point")
    xc = lx - lx.mean()
    sxx = float(xc @ xc)
    if sxx <= 1e-300 or len(np.unique(lx)) < 2:
        raise ValueError("abscissae are degenerate")
    slope = float(xc @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ssr = float(resid @ resid)
    yc = ly - ly.mean()
    sst = float(yc @ yc)
    r2 = 1.0 if sst == 0 else min(max(1.0 - ssr / sst, 0.0), 1.0)
    se = float(np.sqrt(ssr / (len(pts) - 2) / sxx))
    return SlopeFit(slope, intercept, r2, se)


def loglog_fit(x, y) -> SlopeFit:
    return slope_fit(np.column_stack([np.log(x), np.log(y)]))

"""Closed-form and quadrature ground truth for Gaussian targets.

With diagonal ``A`` every coordinate decouples. For one coordinate with
eigenvalue ``lam`` an RLMC step is the random-coefficient affine map::

    X' = a(u) X - gamma*lam*sqrt(2 u gamma) xi' + sqrt(2 gamma) xi,
    a(u) = 1 - gamma*lam + u*gamma^2*lam^2,

so ``E X'^2 = E_u[a^2] E X^2 + 2 gamma + gamma^3 lam^2`` exactly, with
``E_u[a^2] = (1 - gamma lam)^2 + (1 - gamma lam) gamma^2 lam^2 + gamma^4 lam^4 / 3``.

The stationary law of constant-step RLMC on a Gaussian target is a variance
mixture, not a Gaussian; distances to it are reported between moment-matched
Gaussians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .potential import Potential
from .schedule import StepSchedule

DEFAULT_NODES = 64


def _diag(A) -> np.ndarray:
    if isinstance(A, Potential):
        return A.diagonal()
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 2:
        if np.count_nonzero(A - np.diag(np.diag(A))):
            raise ValueError("oracles support diagonal A only")
        A = np.diag(A)
    A = np.atleast_1d(A)
    if np.any(A <= 0):
        raise ValueError("eigenvalues must be positive")
    return A


@dataclass(frozen=True)
class GaussianLaw:
    """Gaussian with diagonal covariance ``var``."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        var = np.broadcast_to(np.asarray(self.var, dtype=np.float64), mean.shape).copy()
        if np.any(var < 0):
            raise ValueError("variances must be nonnegative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def dim(self):
        return len(self.mean)

    def second_moment(self) -> float:
        return float(np.sum(self.mean ** 2 + self.var))


def contraction_coefficient(lam, gamma):
    """``E_u[a(u)^2]`` for eigenvalue ``lam`` and step ``gamma``."""
    h = np.asarray(gamma, dtype=np.float64) * np.asarray(lam, dtype=np.float64)
    return (1 - h) ** 2 + (1 - h) * h ** 2 + h ** 4 / 3.0


def noise_variance(lam, gamma):
    """Variance injected by one step: ``2 gamma + gamma^3 lam^2``."""
    gamma = np.asarray(gamma, dtype=np.float64)
    return 2.0 * gamma + gamma ** 3 * np.asarray(lam, dtype=np.float64) ** 2


def rlmc_stationary_variance(A, eta: float) -> np.ndarray:
    """Per-coordinate stationary variance of constant-step RLMC."""
    lam = _diag(A)
    if not eta > 0:
        raise ValueError("eta must be positive")
    rho = contraction_coefficient(lam, eta)
    if np.any(rho >= 1):
        bad = lam[np.argmax(rho)]
        raise ValueError(f"second-moment map is not contracting (E[a^2] >= 1) for eigenvalue {bad:g}")
    # 1 - E[a^2] = h(2 - 2h + h^2 - h^3/3) avoids cancellation for small h
    h = eta * lam
    return noise_variance(lam, eta) / (h * (2 - 2 * h + h * h - h ** 3 / 3.0))


def stationary_law(A, eta: float) -> GaussianLaw:
    """Moment-matched Gaussian stand-in for the RLMC stationary law."""
    var = rlmc_stationary_variance(A, eta)
    return GaussianLaw(np.zeros_like(var), var)


def target_law(A) -> GaussianLaw:
    lam = _diag(A)
    return GaussianLaw(np.zeros_like(lam), 1.0 / lam)


def second_moment_step(A, m_prev, gamma):
    """Apply the exact one-step second-moment map coordinatewise."""
    lam = _diag(A)
    return contraction_coefficient(lam, gamma) * m_prev + noise_variance(lam, gamma)


def one_step_second_moment(A, x, eta: float) -> float:
    """Exact ``E|X_1|^2`` for one RLMC step from ``x``."""
    lam = _diag(A)
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), lam.shape)
    return float(np.sum(second_moment_step(lam, x * x, eta)))


def moment_recursion(A, schedule: StepSchedule, x0, n: int, per_coordinate: bool = False):
    """Exact ``E|Y_k|^2`` for ``k = 0..n`` along the schedule.

    Returns an array of length ``n + 1`` (or ``(n + 1, d)`` per coordinate).
    """
    lam = _diag(A)
    x0 = np.broadcast_to(np.asarray(x0, dtype=np.float64), lam.shape)
    g = schedule.gammas(n)
    out = np.empty((n + 1, len(lam)))
    out[0] = x0 ** 2
    for i, li in enumerate(lam):
        if n:
            out[1:, i] = kernels.affine_recursion(contraction_coefficient(li, g),
                                                  noise_variance(li, g), x0[i] ** 2)
    return out if per_coordinate else out.sum(axis=1)


def gaussian_w2(a: GaussianLaw, b: GaussianLaw) -> float:
    """Wasserstein-2 distance between diagonal Gaussians."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(np.sqrt(np.sum((a.mean - b.mean) ** 2)
                         + np.sum((np.sqrt(a.var) - np.sqrt(b.var)) ** 2)))


def ou_transition(A, x, t: float) -> GaussianLaw:
    """Law of the Langevin diffusion at time ``t`` started from ``x``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam = _diag(A)
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), lam.shape)
    if np.isinf(t):
        return GaussianLaw(np.zeros_like(lam), 1.0 / lam)
    return GaussianLaw(np.exp(-lam * t) * x, -np.expm1(-2.0 * lam * t) / lam)


def coupled_error_second_moment(lam: float, x: float, gamma: float) -> float:
    """Exact ``E|X_gamma - Y_gamma|^2`` for the synchronous coupling, one coordinate.

    ``X - Y = c(u) x + sqrt(2)(S - B) + gamma lam sqrt(2 u gamma) xi'`` with
    ``c(u) = exp(-lam gamma) - 1 + lam gamma - u lam^2 gamma^2``; the three
    terms are uncorrelated.
    """
    h = lam * gamma
    c0 = np.expm1(-h) + h
    ec2 = c0 * c0 - c0 * h * h + h ** 4 / 3.0
    var_s = -np.expm1(-2 * h) / (2 * lam)
    cov = -np.expm1(-h) / lam
    var_diff = var_s + gamma - 2 * cov
    return float(ec2 * x * x + 2 * var_diff + h * h * gamma)


def _gauss_pdf(z, mean, var):
    return np.exp(-0.5 * (z - mean) ** 2 / var) / np.sqrt(2 * np.pi * var)


def transition_density(p: Potential, x: float, x_tilde, eta: float,
                       n_u: int = DEFAULT_NODES, n_y: int = DEFAULT_NODES):
    """One-step RLMC transition density ``q_eta(x, x_tilde)`` in one dimension.

    Integrates ``N(x_tilde; x - eta U'(y), 2 eta) N(y; x - u eta U'(x), 2 u eta)``
    over ``y`` by Gauss-Hermite (centred and scaled per ``u``) and over
    ``u in [0, 1]`` by Gauss-Legendre.
    """
    if p.dim != 1:
        raise ValueError("transition density quadrature is one-dimensional")
    if not eta > 0:
        raise ValueError("eta must be positive")
    x = float(np.ravel(x)[0]) if np.ndim(x) else float(x)
    xt = np.asarray(x_tilde, dtype=np.float64)
    scalar = xt.ndim == 0
    xt = np.atleast_1d(xt)

    ul, wl = np.polynomial.legendre.leggauss(n_u)
    ul = 0.5 * (ul + 1.0)
    wl = 0.5 * wl
    zh, wh = np.polynomial.hermite.hermgauss(n_y)
    wh = wh / np.sqrt(np.pi)

    gx = float(p.grad(np.array([x]))[0])
    centre = x - ul * eta * gx                         # (n_u,)
    y = centre[:, None] + 2.0 * np.sqrt(ul * eta)[:, None] * zh[None, :]   # (n_u, n_y)
    mean = x - eta * p.grad(y[..., None])[..., 0]      # (n_u, n_y)
    w = wl[:, None] * wh[None, :]
    dens = _gauss_pdf(xt[:, None, None], mean[None], 2.0 * eta)
    q = np.einsum("kij,ij->k", dens, w)
    return float(q[0]) if scalar else q


def transition_density_quadratic(lam: float, x: float, x_tilde, eta: float):
    """Reference ``q_eta`` for ``U = lam x^2 / 2`` as a one-dimensional u-mixture.

    ``q = int_0^1 N(x_tilde; (1 - eta lam + u eta^2 lam^2) x, 2 eta + 2 u eta^3 lam^2) du``,
    integrated adaptively with scipy.
    """
    from scipy.integrate import quad

    def one(xt):
        f = lambda u: _gauss_pdf(xt, (1 - eta * lam + u * eta ** 2 * lam ** 2) * x,
                                 2 * eta + 2 * u * eta ** 3 * lam ** 2)
        return quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]

    xt = np.asarray(x_tilde, dtype=np.float64)
    if xt.ndim == 0:
        return one(float(xt))
    return np.array([one(v) for v in xt])


def transition_bin_probabilities(p: Potential, x: float, edges, eta: float,
                                 nodes_per_bin: int = 8, **quad):
    """Integrate ``q_eta(x, .)`` over consecutive bins with Gauss-Legendre."""
    edges = np.asarray(edges, dtype=np.float64)
    t, w = np.polynomial.legendre.leggauss(nodes_per_bin)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    pts = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
    q = transition_density(p, x, pts.ravel(), eta, **quad).reshape(pts.shape)
    return (q * w[None, :]).sum(axis=1) * half

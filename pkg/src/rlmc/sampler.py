"""Chain recursions: ULA, randomized-midpoint LMC (constant and decreasing
step), exact Ornstein-Uhlenbeck transitions and the coupled one-step pair.

One RLMC step from ``x`` with step ``gamma`` and fraction ``u``::

    mid    = x - u*gamma*grad(x) + sqrt(2*u*gamma) * xi_prime
    x_next = x - gamma*grad(mid) + sqrt(2*gamma) * xi

Per step the draws are taken as ``u``, then ``xi_prime``, then ``xi``, each from
its own substream (see :mod:`rlmc.streams`), so a stream's sequence depends only
on the seed and the number of steps taken.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .potential import Potential
from .schedule import ScheduleError, StepSchedule
from .streams import RngStreams

CHUNK = 1 << 16


def rlmc_step(p: Potential, x, gamma, u, xi, xi_prime):
    """One randomized-midpoint step; returns ``(x_next, midpoint)``.

    All arguments broadcast, so ``x`` of shape ``(n, d)`` with ``u`` of shape
    ``(n,)`` advances ``n`` chains at once.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if np.any(gamma <= 0):
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    ug = np.asarray(u, dtype=np.float64) * gamma
    if ug.ndim and x.ndim > ug.ndim:
        ug = ug[..., None]
    g = gamma[..., None] if gamma.ndim and x.ndim > gamma.ndim else gamma
    mid = x - ug * p.grad(x) + np.sqrt(2.0 * ug) * np.asarray(xi_prime, dtype=np.float64)
    x_next = x - g * p.grad(mid) + np.sqrt(2.0 * g) * np.asarray(xi, dtype=np.float64)
    return x_next, mid


def ula_step(p: Potential, x, gamma, xi):
    """One Euler-Maruyama (unadjusted Langevin) step."""
    if np.any(np.asarray(gamma) <= 0):
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=np.float64)
    return x - gamma * p.grad(x) + np.sqrt(2.0 * gamma) * np.asarray(xi, dtype=np.float64)


@dataclass
class ChainRun:
    """A sampled trajectory.

    ``states[k]`` is the state after ``k`` steps (``states[0] = x0``);
    ``midpoints[k]`` is the midpoint used by step ``k + 1`` when kept.
    """

    states: np.ndarray
    times: np.ndarray
    gammas: np.ndarray
    potential: Potential
    schedule: StepSchedule
    seed: int
    midpoints: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.gammas)

    def to_csv(self, path) -> None:
        """Dump ``k, t_k, gamma_k, x_1..x_d`` (``gamma_0`` is written as 0)."""
        d = self.states.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "t_k", "gamma_k"] + [f"x_{i + 1}" for i in range(d)])
            for k in range(len(self.states)):
                g = self.gammas[k - 1] if k else 0.0
                w.writerow([k, f"{self.times[k]:.16e}", f"{g:.16e}"]
                           + [f"{v:.16e}" for v in self.states[k]])


def _as_state(p: Potential, x0):
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 0:
        x0 = np.full(p.dim, float(x0))
    if x0.shape != (p.dim,):
        raise ValueError(f"initial value must have shape ({p.dim},)")
    return x0


def _run(p, schedule, x0, n_steps, rng, keep_midpoints, chunk):
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    x = _as_state(p, x0)
    d = p.dim
    states = np.empty((n_steps + 1, d))
    states[0] = x
    mids = np.empty((n_steps, d)) if keep_midpoints else None
    times = schedule.times(n_steps)
    kind, matrix, a, b = p.kernel_args()
    for start in range(0, n_steps, chunk):
        stop = min(start + chunk, n_steps)
        k = stop - start
        u = rng.draw_u(k)
        xi_p = rng.draw_xi_prime((k, d))
        xi = rng.draw_xi((k, d))
        x = kernels.rlmc_chain(kind, matrix, a, b, x, times.gammas[start:stop], u, xi_p, xi,
                               states[start + 1:stop + 1],
                               None if mids is None else mids[start:stop])
    return ChainRun(states, times.t, times.gammas, p, schedule, rng.seed, mids)


def run_constant(p: Potential, eta: float, x0, n_steps: int, rng: RngStreams,
                 keep_midpoints: bool = False, chunk: int = CHUNK) -> ChainRun:
    """Constant-step RLMC chain of ``n_steps`` steps."""
    return _run(p, StepSchedule.constant(eta), x0, n_steps, rng, keep_midpoints, chunk)


def run_decreasing(p: Potential, schedule: StepSchedule, x0, n_steps: int, rng: RngStreams,
                   keep_midpoints: bool = False, chunk: int = CHUNK) -> ChainRun:
    """Decreasing-step RLMC; the schedule must pass ``schedule.validate(p.m)``."""
    diag = schedule.validate(p.m)
    if not diag:
        raise ScheduleError("; ".join(diag.reasons))
    return _run(p, schedule, x0, n_steps, rng, keep_midpoints, chunk)


def run_ensemble(p: Potential, schedule: StepSchedule, x0, n_chains: int, checkpoints,
                 rng: RngStreams) -> dict:
    """Advance ``n_chains`` chains together and return states at ``checkpoints``.

    Each step draws ``u`` of shape ``(n_chains,)`` and noise of shape
    ``(n_chains, d)``, so the draws depend on ``n_chains`` as well as the seed.
    Two ensembles with the same seed and size share all noise (a synchronous
    coupling), whatever their initial values.
    """
    x = np.broadcast_to(_as_state(p, x0), (n_chains, p.dim)).copy()
    cps = sorted(set(int(c) for c in checkpoints))
    if cps and cps[0] < 0:
        raise ValueError("checkpoints must be nonnegative")
    out = {}
    n_max = cps[-1] if cps else 0
    gam = schedule.gammas(n_max) if n_max else np.empty(0)
    if 0 in cps:
        out[0] = x.copy()
    for k in range(n_max):
        u = rng.draw_u(n_chains)
        xi_p = rng.draw_xi_prime((n_chains, p.dim))
        xi = rng.draw_xi((n_chains, p.dim))
        x, _ = rlmc_step(p, x, gam[k], u, xi, xi_p)
        if k + 1 in cps:
            out[k + 1] = x.copy()
    return out


def _eig(p: Potential):
    if not p.is_quadratic:
        raise ValueError("exact Ornstein-Uhlenbeck transitions need a quadratic potential")
    if p.is_diagonal:
        return p.diagonal(), None
    lam, Q = np.linalg.eigh(p.matrix)
    return lam, Q


def _batch(p, x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = np.full(p.dim, float(x))
    if x.shape[-1] != p.dim:
        raise ValueError(f"expected trailing dimension {p.dim}")
    if n is not None:
        x = np.broadcast_to(x, (n, p.dim))
    return x


def ou_exact_step(p: Potential, x, t: float, rng: RngStreams, n: int | None = None):
    """Exact draw of the Langevin diffusion after time ``t`` from ``x``.

    Gaussian with mean ``exp(-A t) x`` and covariance ``A^{-1}(I - exp(-2 A t))``.
    Noise comes from the ``xi`` substream.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam, Q = _eig(p)
    x = _batch(p, x, n)
    z = x if Q is None else x @ Q
    sd = np.sqrt(-np.expm1(-2.0 * lam * t) / lam)
    z = np.exp(-lam * t) * z + sd * rng.draw_xi(z.shape)
    return z if Q is None else z @ Q.T


def coupled_one_step(p: Potential, x, gamma: float, rng: RngStreams, n: int | None = None):
    """Exact diffusion step and RLMC step driven by the same Brownian motion.

    Per eigen-coordinate with eigenvalue ``lam``, the pair ``(B, S)`` with
    ``B = B_gamma`` and ``S = int_0^gamma exp(-lam (gamma - s)) dB_s`` is
    Gaussian with ``Var B = gamma``, ``Var S = (1 - exp(-2 lam gamma)) / (2 lam)``
    and ``Cov(B, S) = (1 - exp(-lam gamma)) / lam``; it is sampled from two
    standard normals (both taken from the ``xi`` substream) via its Cholesky
    factor. Then ``x_exact = exp(-lam gamma) x + sqrt(2) S`` and the RLMC step
    uses ``xi = B / sqrt(gamma)`` with an independent ``xi_prime``.

    Returns ``(x_exact, y_rlmc)``.
    """
    if not 0 < gamma < 1:
        raise ValueError("coupled one-step pair needs 0 < gamma < 1")
    lam, Q = _eig(p)
    x = _batch(p, x, n)
    shape = x.shape
    u = rng.draw_u(shape[:-1] if len(shape) > 1 else None)
    xi_p = rng.draw_xi_prime(shape)
    zz = rng.draw_xi((2,) + shape)
    z1, z2 = zz[0], zz[1]

    var_s = -np.expm1(-2.0 * lam * gamma) / (2.0 * lam)
    cov = -np.expm1(-lam * gamma) / lam
    sg = np.sqrt(gamma)
    s = (cov / sg) * z1 + np.sqrt(np.maximum(var_s - cov * cov / gamma, 0.0)) * z2

    xe = x if Q is None else x @ Q
    x_exact = np.exp(-lam * gamma) * xe + np.sqrt(2.0) * s
    xi = z1
    if Q is not None:
        x_exact = x_exact @ Q.T
        xi = z1 @ Q.T
    y, _ = rlmc_step(p, x, gamma, u, xi, xi_p)
    return x_exact, y

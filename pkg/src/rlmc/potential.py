"""Target potentials with certified convexity constants.

Two families ship, both minimised at the origin:

* ``quadratic``: ``U(x) = x^T A x / 2`` for symmetric positive definite ``A``;
  ``m`` and ``L`` are the extreme eigenvalues of ``A``.
* ``logcosh``: ``U(x) = (a/2)|x|^2 + b * sum_i log cosh(x_i)``; the Hessian is
  ``diag(a + b sech^2(x_i))`` so ``m = a`` and ``L = a + b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .streams import RngStreams

QUADRATIC = "quadratic"
LOGCOSH = "logcosh"

# kind codes understood by the compiled kernels
KERNEL_CODES = {QUADRATIC: 0, LOGCOSH: 1}


@dataclass(frozen=True, eq=False)
class Potential:
    """Immutable potential. Build with :meth:`quadratic` or :meth:`logcosh_ridge`."""

    kind: str
    dim: int
    m: float
    L: float
    matrix: np.ndarray | None = field(default=None, repr=False)
    a: float = 0.0
    b: float = 0.0

    @classmethod
    def quadratic(cls, A) -> "Potential":
        """Quadratic potential with Hessian ``A`` (a matrix, or a 1-D diagonal)."""
        A = np.asarray(A, dtype=np.float64)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        elif A.ndim == 1:
            A = np.diag(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max())):
            raise ValueError("A must be symmetric")
        eig = np.linalg.eigvalsh(A)
        if eig[0] <= 0:
            raise ValueError(f"A must be positive definite (smallest eigenvalue {eig[0]:g})")
        A = np.ascontiguousarray(A)
        A.setflags(write=False)
        return cls(QUADRATIC, A.shape[0], float(eig[0]), float(eig[-1]), matrix=A)

    @classmethod
    def logcosh_ridge(cls, a: float, b: float, dim: int = 1) -> "Potential":
        if a <= 0 or b < 0:
            raise ValueError("logcosh ridge needs a > 0 and b >= 0")
        if dim < 1:
            raise ValueError("dim must be positive")
        return cls(LOGCOSH, int(dim), float(a), float(a + b), a=float(a), b=float(b))

    @property
    def is_quadratic(self) -> bool:
        return self.kind == QUADRATIC

    @property
    def is_diagonal(self) -> bool:
        return self.is_quadratic and np.count_nonzero(self.matrix - np.diag(np.diag(self.matrix))) == 0

    def diagonal(self) -> np.ndarray:
        """Eigenvalues of a diagonal quadratic potential, coordinate by coordinate."""
        if not self.is_diagonal:
            raise ValueError("closed-form oracles need a diagonal quadratic potential")
        return np.diag(self.matrix).copy()

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def value(self, x):
        x = self._check(x)
        if self.is_quadratic:
            return 0.5 * np.einsum("...i,ij,...j->...", x, self.matrix, x)
        return 0.5 * self.a * np.sum(x * x, axis=-1) + self.b * np.sum(_log_cosh(x), axis=-1)

    def grad(self, x):
        """Gradient at ``x``; leading axes are treated as a batch."""
        x = self._check(x)
        if self.is_quadratic:
            return x @ self.matrix.T
        return self.a * x + self.b * np.tanh(x)

    def kernel_args(self):
        """``(kind_code, matrix, a, b)`` for :func:`rlmc.kernels.rlmc_chain`."""
        if self.is_quadratic:
            return KERNEL_CODES[QUADRATIC], self.matrix, 0.0, 0.0
        return KERNEL_CODES[LOGCOSH], np.zeros((1, 1)), self.a, self.b

    def probe_convexity(self, n_probes: int, radius: float, rng: RngStreams, center=None,
                        rtol: float = 1e-8) -> "ConvexityReport":
        """Secant curvature quotients on random pairs in a ball.

        Draws ``n_probes`` pairs ``(x, y)`` uniformly in the ball of ``radius``
        around ``center`` (origin by default) and returns the extreme values of
        ``<grad(x) - grad(y), x - y> / |x - y|^2``.
        """
        if n_probes < 1 or radius <= 0:
            raise ValueError("need n_probes >= 1 and radius > 0")
        c = np.zeros(self.dim) if center is None else np.broadcast_to(
            np.asarray(center, dtype=np.float64), (self.dim,))
        gen = rng.xi

        def ball(n):
            v = gen.standard_normal((n, self.dim))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            r = radius * gen.random(n) ** (1.0 / self.dim)
            return c + v * r[:, None]

        x, y = ball(n_probes), ball(n_probes)
        diff = x - y
        q = np.einsum("ij,ij->i", self.grad(x) - self.grad(y), diff) / np.einsum("ij,ij->i", diff, diff)
        return ConvexityReport(float(q.min()), float(q.max()), self.m, self.L, rtol)


@dataclass(frozen=True)
class ConvexityReport:
    min_curvature: float
    max_curvature: float
    m: float
    L: float
    rtol: float

    @property
    def within_bounds(self) -> bool:
        return (self.min_curvature >= self.m * (1 - self.rtol)
                and self.max_curvature <= self.L * (1 + self.rtol))


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - np.log(2.0)

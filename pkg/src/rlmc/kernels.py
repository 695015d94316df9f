"""Backend selection for the sequential loops.

The compiled extension is used when importable; setting ``RLMC_PURE_PYTHON=1``
forces the Python fallback. ``BACKEND`` names the active one.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("RLMC_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def rlmc_chain(kind, matrix, a, b, x0, gammas, u, xi_prime, xi, states, midpoints=None,
               impl=None):
    """Advance one chain through ``len(gammas)`` RLMC steps (see ``sampler``)."""
    impl = impl or _impl
    return impl.rlmc_chain(int(kind), _f64(matrix), float(a), float(b), _f64(x0),
                           _f64(gammas), _f64(u), _f64(xi_prime), _f64(xi),
                           states, midpoints)


def affine_recursion(coef, add, init=0.0, impl=None):
    """``y[k] = coef[k] * y[k-1] + add[k]`` with ``y[-1] = init``."""
    impl = impl or _impl
    return impl.affine_recursion(_f64(coef), _f64(add), float(init))


def compensated_cumsum(values, impl=None):
    """Cumulative sums with Neumaier compensation."""
    impl = impl or _impl
    return impl.compensated_cumsum(_f64(values))

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequential loops: the RLMC chain, affine scalar recursions and
compensated cumulative sums.

Must stay numerically interchangeable with ``_kernels_py``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, tanh

cnp.import_array()

cdef enum:
    QUADRATIC = 0
    LOGCOSH = 1


cdef inline void _grad(int kind, const double[:, ::1] matrix, double a, double b,
                       const double* x, double* out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    if kind == QUADRATIC:
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc = acc + matrix[i, j] * x[j]
            out[i] = acc
    else:
        for i in range(d):
            out[i] = a * x[i] + b * tanh(x[i])


def rlmc_chain(int kind, const double[:, ::1] matrix, double a, double b,
               const double[::1] x0, const double[::1] gammas, const double[::1] u,
               const double[:, ::1] xi_prime, const double[:, ::1] xi,
               double[:, ::1] states, double[:, ::1] midpoints=None):
    """Run ``len(gammas)`` RLMC steps from ``x0``, writing into ``states``.

    Row ``k`` of ``states`` (and of ``midpoints`` when given) holds the state
    after step ``k + 1``. Returns the final state.
    """
    cdef Py_ssize_t n = gammas.shape[0]
    cdef Py_ssize_t d = x0.shape[0]
    cdef Py_ssize_t k, i
    cdef double g, ug, s_mid, s_end
    cdef bint keep_mid = midpoints is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xbuf = np.array(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mbuf = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gbuf = np.empty(d, dtype=np.float64)
    cdef double* x = <double*> xbuf.data
    cdef double* mid = <double*> mbuf.data
    cdef double* grad = <double*> gbuf.data

    with nogil:
        for k in range(n):
            g = gammas[k]
            ug = u[k] * g
            s_mid = sqrt(2.0 * ug)
            s_end = sqrt(2.0 * g)
            _grad(kind, matrix, a, b, x, grad, d)
            for i in range(d):
                mid[i] = x[i] - ug * grad[i] + s_mid * xi_prime[k, i]
            _grad(kind, matrix, a, b, mid, grad, d)
            for i in range(d):
                x[i] = x[i] - g * grad[i] + s_end * xi[k, i]
                states[k, i] = x[i]
            if keep_mid:
                for i in range(d):
                    midpoints[k, i] = mid[i]
    return xbuf


def affine_recursion(const double[::1] coef, const double[::1] add, double init):
    """Return ``y`` with ``y[k] = coef[k] * y[k-1] + add[k]`` and ``y[-1] = init``."""
    cdef Py_ssize_t n = coef.shape[0]
    cdef Py_ssize_t k
    cdef double y = init
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double* o = <double*> out.data
    with nogil:
        for k in range(n):
            y = coef[k] * y + add[k]
            o[k] = y
    return out


def compensated_cumsum(const double[::1] values):
    """Running sums with Neumaier error compensation."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t k
    cdef double s = 0.0, comp = 0.0, t, v
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double* o = <double*> out.data
    with nogil:
        for k in range(n):
            v = values[k]
            t = s + v
            if (s if s >= 0 else -s) >= (v if v >= 0 else -v):
                comp = comp + ((s - t) + v)
            else:
                comp = comp + ((v - t) + s)
            s = t
            o[k] = s + comp
    return out

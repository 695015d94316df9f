"""Pure-Python twins of the compiled loops in ``_kernels.pyx``.

Same signatures and arithmetic order, so results agree with the compiled core
to rounding (bit-for-bit in one dimension).
"""
import math

import numpy as np

QUADRATIC = 0
LOGCOSH = 1


def _grad_vec(kind, matrix, a, b, x):
    if kind == QUADRATIC:
        return matrix @ x
    return a * x + b * np.tanh(x)


def rlmc_chain(kind, matrix, a, b, x0, gammas, u, xi_prime, xi, states, midpoints=None):
    n = len(gammas)
    d = len(x0)
    if d == 1:
        return _rlmc_chain_1d(kind, float(matrix[0, 0]), a, b, float(x0[0]),
                              gammas, u, xi_prime, xi, states, midpoints)
    x = np.array(x0, dtype=np.float64)
    for k in range(n):
        g = gammas[k]
        ug = u[k] * g
        grad = _grad_vec(kind, matrix, a, b, x)
        mid = x - ug * grad + math.sqrt(2.0 * ug) * xi_prime[k]
        grad = _grad_vec(kind, matrix, a, b, mid)
        x = x - g * grad + math.sqrt(2.0 * g) * xi[k]
        states[k] = x
        if midpoints is not None:
            midpoints[k] = mid
    return x


def _rlmc_chain_1d(kind, lam, a, b, x, gammas, u, xi_prime, xi, states, midpoints):
    # Python floats are ~10x faster than 1-element arrays in this loop.
    tanh = math.tanh
    sqrt = math.sqrt
    gl = gammas.tolist()
    ul = u.tolist()
    xpl = xi_prime[:, 0].tolist()
    xl = xi[:, 0].tolist()
    out = [0.0] * len(gl)
    mids = [0.0] * len(gl) if midpoints is not None else None
    quad = kind == QUADRATIC
    for k in range(len(gl)):
        g = gl[k]
        ug = ul[k] * g
        grad = lam * x if quad else a * x + b * tanh(x)
        mid = x - ug * grad + sqrt(2.0 * ug) * xpl[k]
        grad = lam * mid if quad else a * mid + b * tanh(mid)
        x = x - g * grad + sqrt(2.0 * g) * xl[k]
        out[k] = x
        if mids is not None:
            mids[k] = mid
    states[:, 0] = out
    if midpoints is not None:
        midpoints[:, 0] = mids
    return np.array([x])


def affine_recursion(coef, add, init):
    out = np.empty(len(coef))
    y = float(init)
    cl = coef.tolist()
    al = add.tolist()
    res = [0.0] * len(cl)
    for k in range(len(cl)):
        y = cl[k] * y + al[k]
        res[k] = y
    out[:] = res
    return out


def compensated_cumsum(values):
    s = 0.0
    comp = 0.0
    vals = values.tolist()
    res = [0.0] * len(vals)
    for k, v in enumerate(vals):
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
        res[k] = s + comp
    return np.array(res, dtype=np.float64)

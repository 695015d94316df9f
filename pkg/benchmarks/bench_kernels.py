"""Compare the compiled and pure-Python kernels on the sequential loops.

    python benchmarks/bench_kernels.py [--steps N] [--repeat R]

Reports the best-of-R time per step for each backend and the speedup, and
checks that both backends produce the same trajectory.
"""
import argparse
import time

import numpy as np

from rlmc import _kernels_py
from rlmc.potential import Potential

try:
    from rlmc import _kernels as _compiled
except ImportError:
    _compiled = None


def best_time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_chain(impl, p, n, repeat, n_draw, seed=0):
    # draws are generated at the full length and sliced, so both backends see the same prefix
    r = np.random.default_rng(seed)
    u = r.random(n_draw)[:n]
    xp = r.standard_normal((n_draw, p.dim))[:n]
    xi = r.standard_normal((n_draw, p.dim))[:n]
    g = np.full(n, 0.1)
    x0 = np.zeros(p.dim)
    states = np.empty((n, p.dim))

    def run():
        impl.rlmc_chain(*p.kernel_args(), x0, g, u, xp, xi, states, None)
        return states.copy()
    return best_time(run, repeat)


def bench_recursion(impl, n, repeat):
    coef = np.full(n, 0.99)
    add = np.full(n, 0.01)
    return best_time(lambda: impl.affine_recursion(coef, add, 0.0), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10 ** 6, help="chain length / recursion length")
    ap.add_argument("--python-steps", type=int, default=None,
                    help="length for the fallback (default: steps // 10)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    n = args.steps
    n_py = args.python_steps or max(n // 10, 1)

    chains = {
        "chain quadratic d=1": Potential.quadratic([1.0]),
        "chain logcosh d=1": Potential.logcosh_ridge(1, 2),
        "chain quadratic d=4": Potential.quadratic(np.eye(4) + 0.1),
        "chain logcosh d=4": Potential.logcosh_ridge(1, 2, 4),
    }
    cases = [(name, lambda impl, k, p=p: bench_chain(impl, p, k, args.repeat, n)) for name, p in chains.items()]
    cases.append(("affine recursion", lambda impl, k: bench_recursion(impl, k, args.repeat)))
    print(f"{'kernel':<22}{'cython us/step':>16}{'python us/step':>16}{'speedup':>10}{'max diff':>12}")
    for name, fn in cases:
        t_py, out_py = fn(_kernels_py, n_py)
        us_py = 1e6 * t_py / n_py
        if _compiled is None:
            print(f"{name:<22}{'n/a':>16}{us_py:>16.4f}{'':>10}{'':>12}")
            continue
        t_c, out_c = fn(_compiled, n)
        us_c = 1e6 * t_c / n
        diff = float(np.max(np.abs(np.asarray(out_c)[:n_py] - np.asarray(out_py))))
        print(f"{name:<22}{us_c:>16.4f}{us_py:>16.4f}{us_py / us_c:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()

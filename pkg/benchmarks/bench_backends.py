"""Time the compiled kernels against the pure-numpy reference.

Imports both kernel modules directly (ignoring DYNCOV_BACKEND) and
reports per-call wall time for the three hot paths: the per-anchor
local-linear sweep, the index-direction normal-equation builder, and
the GARCH variance recursion. The first compiled call is reported
separately since it includes JIT compilation.

    python3 benchmarks/bench_backends.py [--n 1000] [--p 50] [--q 4]
"""

import argparse
import time

import numpy as np

from dyncov import _kernels_numpy
from dyncov.smoothing import knn_bandwidths

try:
    from dyncov import _kernels_numba

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def make_problem(n, p, q, seed=7):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, q))
    beta = rng.standard_normal(q)
    beta /= np.linalg.norm(beta)
    X_lag = X[:-1]
    X_reg = X[1:]
    z = X_lag @ beta
    Y = rng.standard_normal((n - 1, p))
    h = 0.2 * (z.max() - z.min())
    bandwidths = np.full(z.size, h)
    return X_reg, Y, X_lag, z, h, bandwidths


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_module(tag, mod, problem, repeat):
    X_reg, Y, X_lag, z, h, bandwidths = problem
    order = np.argsort(z, kind="stable")
    zs = z[order]

    results = {}

    def run_ll():
        return mod.local_linear_anchors(X_reg[order], Y[order], zs, zs, bandwidths)

    t_first = timeit(run_ll, 1)
    coeffs, conds, flags, wsums = run_ll()
    results["local_linear_anchors"] = (t_first, timeit(run_ll, repeat))

    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    coeffs_orig = coeffs[inv]
    valid = (flags[inv] < 2).astype(np.uint8)

    def run_step2():
        return mod.beta_step2_system(X_reg, Y, X_lag, z, h, coeffs_orig, valid)

    t_first = timeit(run_step2, 1)
    results["beta_step2_system"] = (t_first, timeit(run_step2, repeat))

    rng = np.random.default_rng(3)
    r2 = rng.standard_normal(20000) ** 2
    alpha = np.array([0.1])
    gamma = np.array([0.1])

    def run_garch():
        mod.garch_sigma2_path(0.5, alpha, gamma, r2, True, 1e-6)
        return mod.garch_nll_terms(0.5, alpha, gamma, r2, True, 1e-6)

    t_first = timeit(run_garch, 1)
    results["garch_path_nll"] = (t_first, timeit(run_garch, repeat))
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--p", type=int, default=50)
    parser.add_argument("--q", type=int, default=4)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    problem = make_problem(args.n, args.p, args.q)
    print(f"problem: n={args.n} p={args.p} q={args.q}")

    numpy_res = bench_module("numpy", _kernels_numpy, problem, args.repeat)
    numba_res = (
        bench_module("numba", _kernels_numba, problem, args.repeat)
        if HAVE_NUMBA
        else None
    )

    header = f"{'kernel':<24}{'numpy (s)':>12}{'numba (s)':>12}{'first call':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, (first_np, best_np) in numpy_res.items():
        if numba_res is None:
            print(f"{name:<24}{best_np:>12.4f}{'n/a':>12}{'n/a':>12}{'n/a':>9}")
            continue
        first_nb, best_nb = numba_res[name]
        speed = best_np / best_nb if best_nb > 0 else float("inf")
        print(
            f"{name:<24}{best_np:>12.4f}{best_nb:>12.4f}{first_nb:>12.4f}{speed:>8.1f}x"
        )
    if not HAVE_NUMBA:
        print("numba is not importable; compiled column skipped")


if __name__ == "__main__":
    main()

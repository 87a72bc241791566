"""Benchmark the compiled simplex solvers against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeats 5] [--seed 0]

Times solve_simplex_fw (L2-only instances) and solve_simplex_fw_smoothed
(mixed-norm instances) on identical random inputs and reports the speedup.
"""

import argparse
import time

import numpy as np

from prodconc._kernels import fallback
from prodconc.rng import derive_rng

try:
    from prodconc._kernels import _fwcore
except ImportError:
    _fwcore = None


def make_instance(rng, m, blocks, dim, mixed):
    S = rng.standard_normal((m, blocks * dim))
    t = rng.standard_normal(blocks * dim) * 2.0
    offsets = np.arange(0, (blocks + 1) * dim, dim, dtype=np.int64)
    if mixed:
        codes = rng.integers(0, 3, size=blocks).astype(np.int32)
    else:
        codes = np.ones(blocks, dtype=np.int32)
    return S, t, offsets, codes


def run_case(solver, instances, p, tol, max_iter):
    t0 = time.perf_counter()
    checksum = 0.0
    for S, t, offsets, codes in instances:
        _lam, g_up, _g_lo, _iters = solver(S, t, offsets, codes, p, tol,
                                           max_iter)
        checksum += g_up
    return time.perf_counter() - t0, checksum


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--instances", type=int, default=10)
    parser.add_argument("--max-iter", type=int, default=1500)
    args = parser.parse_args()

    if _fwcore is None:
        print("compiled kernel unavailable; build the extension first")
        return

    cases = [
        ("fw / L2 blocks", "solve_simplex_fw", False),
        ("smoothed / mixed blocks", "solve_simplex_fw_smoothed", True),
    ]
    print(f"{'case':<28}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for label, fn_name, mixed in cases:
        rng = derive_rng(args.seed, "bench", 0)
        instances = [make_instance(rng, 24, 4, 3, mixed)
                     for _ in range(args.instances)]
        py_fn = getattr(fallback, fn_name)
        cy_fn = getattr(_fwcore, fn_name)
        t_py = min(run_case(py_fn, instances, 2.0, 1e-6, args.max_iter)[0]
                   for _ in range(args.repeats))
        t_cy = min(run_case(cy_fn, instances, 2.0, 1e-6, args.max_iter)[0]
                   for _ in range(args.repeats))
        # sanity: both backends agree on the objective
        s_py = run_case(py_fn, instances, 2.0, 1e-6, args.max_iter)[1]
        s_cy = run_case(cy_fn, instances, 2.0, 1e-6, args.max_iter)[1]
        assert abs(s_py - s_cy) <= 1e-9 * max(1.0, abs(s_py)), \
            f"backend mismatch: {s_py} vs {s_cy}"
        print(f"{label:<28}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>10.1f}x")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Benchmark the compiled QL eigensolver kernel against the pure NumPy twin.

The implicit-shift QL sweep is the scalar hot loop behind every Lanczos
iteration and every dense certification; everything else (Householder
reduction, matvecs) is BLAS-bound and shared by both builds.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from ncgopt import _kernels_py
from ncgopt._kernels_py import householder_tridiag

try:
    from ncgopt import _kernels_cy
except ImportError:
    _kernels_cy = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_tridiag(sizes, repeats):
    rng = np.random.default_rng(0)
    rows = []
    for n in sizes:
        d = rng.standard_normal(n)
        e = rng.standard_normal(n - 1)
        for vectors in (False, True):
            pure = _time(lambda: _kernels_py.tridiag_eigh(d, e, want_vectors=vectors), repeats)
            if _kernels_cy is not None:
                comp = _time(
                    lambda: _kernels_cy.tridiag_eigh(d, e, want_vectors=vectors), repeats
                )
                w_p, _ = _kernels_py.tridiag_eigh(d, e, want_vectors=False)
                w_c, _ = _kernels_cy.tridiag_eigh(d, e, want_vectors=False)
                drift = float(np.max(np.abs(w_p - w_c)))
            else:
                comp, drift = float("nan"), float("nan")
            rows.append((f"tridiag n={n} vectors={vectors}", pure, comp, drift))
    return rows


def bench_dense(sizes, repeats):
    rng = np.random.default_rng(1)
    rows = []
    for n in sizes:
        a = rng.standard_normal((n, n))
        a = 0.5 * (a + a.T)
        d, e, q = householder_tridiag(a)

        def full(impl):
            w, v = impl.tridiag_eigh(d, e, z=q)
            return w, v

        pure = _time(lambda: full(_kernels_py), repeats)
        if _kernels_cy is not None:
            comp = _time(lambda: full(_kernels_cy), repeats)
            drift = float(
                np.max(np.abs(full(_kernels_py)[0] - full(_kernels_cy)[0]))
            )
        else:
            comp, drift = float("nan"), float("nan")
        rows.append((f"dense eig d={n} (post-Householder)", pure, comp, drift))
    return rows


def bench_lanczos_workload(repeats):
    """Criterion-style workload: many smallest-eigenvalue estimates on a
    d=100 operator, timed against each kernel build."""
    import ncgopt.eigensolver as es
    from ncgopt import kernels
    from ncgopt.rng import run_stream

    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.standard_normal((100, 100)))
    lam = rng.uniform(-1.0, 1.0, 100)
    h = (q * lam) @ q.T

    def workload():
        for s in range(60):
            es.lanczos_min_eig(
                lambda v: h @ v, 100, 0.05, 0.05, run_stream(s).generator(), l1=1.0
            )

    rows = []
    saved = kernels.tridiag_eigh
    try:
        kernels.tridiag_eigh = _kernels_py.tridiag_eigh
        pure = _time(workload, repeats)
        if _kernels_cy is not None:
            kernels.tridiag_eigh = _kernels_cy.tridiag_eigh
            comp = _time(workload, repeats)
        else:
            comp = float("nan")
    finally:
        kernels.tridiag_eigh = saved
    rows.append(("60 Lanczos estimates d=100", pure, comp, 0.0))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _kernels_cy is None:
        print("compiled kernel not built; timing the pure twin only\n")

    rows = bench_tridiag((50, 100, 200, 400), args.repeats)
    rows += bench_dense((50, 100, 200), args.repeats)
    rows += bench_lanczos_workload(max(2, args.repeats // 2))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'pure [ms]':>10}  {'compiled [ms]':>13}  {'speedup':>8}  {'max |dw|':>9}")
    for name, pure, comp, drift in rows:
        speed = pure / comp if comp == comp and comp > 0 else float("nan")
        print(
            f"{name:<{width}}  {1e3 * pure:>10.3f}  {1e3 * comp:>13.3f}  {speed:>8.1f}  {drift:>9.1e}"
        )


if __name__ == "__main__":
    main()

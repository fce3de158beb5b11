"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python benchmarks/bench_kernels.py [--repeats N]

Times the four hot kernels on representative workloads (word evaluation and
homomorphism-table scans at rate-experiment sizes, Jacobi eigenvalues at
metric-audit sizes) and prints per-call times plus the speedup of the
compiled extension.
"""

import argparse
import timeit

import numpy as np

from stablab import _pykernels

try:
    from stablab import _speedups
except ImportError:
    _speedups = None


def make_workloads(rng):
    n = 6
    perms = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (4, 1)), axis=1)
    gens = perms[:2]
    gens_inv = np.stack([_pykernels.perm_invert(g) for g in gens])
    word = np.array([1, 2, -1, -2], dtype=np.int64)  # commutator
    homs = rng.permuted(
        np.tile(np.arange(n, dtype=np.int64), (8000, 2, 1)), axis=2
    )
    phi = perms[2:4].copy()
    a, b = perms[0].copy(), perms[1].copy()
    h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    h = (h + h.conj().T) / 2
    return {
        "hamming_count (n=6)": lambda impl: impl.hamming_count(a, b),
        "eval_word_perm (4 letters, n=6)": lambda impl: impl.eval_word_perm(
            word, gens, gens_inv
        ),
        "homdist_scan (8000x2x6)": lambda impl: impl.homdist_scan(homs, phi),
        "jacobi_eigvalsh (4x4)": lambda impl: impl.jacobi_eigvalsh(h, 1e-12, 100),
    }


def time_call(fn, repeats):
    raw = timeit.repeat(fn, number=repeats, repeat=3)
    return min(raw) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    workloads = make_workloads(np.random.default_rng(0))
    header = f"{'kernel':36s} {'python':>12s} {'cython':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, call in workloads.items():
        py = time_call(lambda: call(_pykernels), args.repeats)
        if _speedups is None:
            print(f"{name:36s} {py * 1e6:10.1f}us {'n/a':>12s} {'n/a':>9s}")
            continue
        cy = time_call(lambda: call(_speedups), args.repeats)
        print(f"{name:36s} {py * 1e6:10.1f}us {cy * 1e6:10.1f}us {py / cy:8.1f}x")
    if _speedups is None:
        print("\ncompiled extension not built; showing fallback times only")


if __name__ == "__main__":
    main()

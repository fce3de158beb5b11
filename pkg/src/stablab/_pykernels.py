"""Pure-Python (numpy) implementations of the hot kernels.

Same call surface as the compiled ``stablab._speedups`` extension; the
active implementation is chosen in ``stablab._kernels``.  Permutations are
int64 image arrays, words are int64 arrays of signed 1-based generator
indices, Hermitian matrices are complex128.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def perm_compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Composition a after b: out[i] = a[b[i]]."""
    return a[b]


def perm_invert(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[a] = np.arange(a.shape[0], dtype=a.dtype)
    return out


def hamming_count(a: np.ndarray, b: np.ndarray) -> int:
    """Number of points where two image arrays differ."""
    return int(np.count_nonzero(a != b))


def eval_word_perm(letters: np.ndarray, gens: np.ndarray, gens_inv: np.ndarray) -> np.ndarray:
    """Evaluate a word at a permutation assignment (left to right product).

    ``letters`` holds signed 1-based generator indices; ``gens`` and
    ``gens_inv`` are (k, n) image tables for the generators and their
    inverses.
    """
    n = gens.shape[1]
    acc = np.arange(n, dtype=gens.dtype)
    for x in letters:
        row = gens[x - 1] if x > 0 else gens_inv[-x - 1]
        acc = acc[row]
    return acc


def homdist_scan(homs: np.ndarray, phi: np.ndarray) -> tuple[int, int]:
    """Nearest row of a homomorphism table under max-over-generators Hamming.

    ``homs`` has shape (m, k, n), ``phi`` shape (k, n).  Returns the index of
    the first minimizer and its count (max over the k generators of the
    number of differing points).
    """
    mismatch = homs != phi[np.newaxis, :, :]
    counts = mismatch.sum(axis=2).max(axis=1)
    idx = int(np.argmin(counts))
    return idx, int(counts[idx])


def jacobi_eigvalsh(h: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.

    Returns the (unsorted) real diagonal once every off-diagonal entry is at
    most ``tol`` in modulus; raises RuntimeError after ``max_sweeps`` sweeps.
    """
    a = np.array(h, dtype=np.complex128)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0].real])
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
        if off <= tol:
            return np.diag(a).real.copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= tol * 0.01 or r < 1e-300:
                    continue
                v = apq / r
                vb = v.conjugate()
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * vb * colq
                a[:, q] = s * colp + c * vb * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * v * rowq
                a[q, :] = s * rowp + c * v * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

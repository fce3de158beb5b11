"""Bi-invariant metric group backends.

Two element kinds behind one contract: permutations of {0..n-1} under the
normalized Hamming distance, and n x n unitary matrices under the normalized
Hilbert-Schmidt, Schatten-p (unnormalized) or operator metric.

Conventions fixed here and documented once:

* ``multiply(a, b)`` applies ``b`` first (function composition ``a o b``);
  for image arrays that is ``out[i] = a[b[i]]``.
* Schatten norms are unnormalized, Hilbert-Schmidt carries the 1/sqrt(n)
  normalization; ``schatten(2) == sqrt(n) * hs`` is a tested identity.
* Singular values come from cyclic Jacobi on the Hermitian Gram matrix, not
  from an external eigensolver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import BackendMismatchError, CapsExceededError, NumericError

SYM_HAMMING = "sym_hamming"
U_HS = "u_hs"
U_SCHATTEN = "u_schatten"
U_OP = "u_op"
FAMILIES = (SYM_HAMMING, U_HS, U_SCHATTEN, U_OP)
UNITARY_FAMILIES = (U_HS, U_SCHATTEN, U_OP)

UNITARITY_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
ENUMERATION_DEGREE_CAP = 8


@dataclass(frozen=True)
class MetricDescriptor:
    """Which group and which metric: family, degree n, Schatten exponent p."""

    family: str
    n: int
    p: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown metric family '{self.family}'")
        if self.n < 1:
            raise ValueError(f"degree must be >= 1, got {self.n}")
        if self.family == U_SCHATTEN:
            if self.p is None or self.p < 1:
                raise ValueError("Schatten metric needs p >= 1")
            object.__setattr__(self, "p", float(self.p))
        elif self.p is not None:
            raise ValueError(f"p is only meaningful for {U_SCHATTEN}")

    @property
    def is_symmetric(self) -> bool:
        return self.family == SYM_HAMMING

    def to_json(self) -> dict:
        data = {"family": self.family, "n": self.n}
        if self.p is not None:
            data["p"] = self.p
        return data

    @staticmethod
    def from_json(data: dict) -> "MetricDescriptor":
        return MetricDescriptor(data["family"], int(data["n"]), data.get("p"))


class GroupElement:
    """A permutation or unitary matrix tagged with its metric descriptor."""

    __slots__ = ("descriptor", "data")

    def __init__(self, descriptor: MetricDescriptor, data: np.ndarray, _checked: bool = False):
        # the unchecked path copies so freezing never touches caller arrays;
        # _checked is for internal construction from freshly made arrays
        self.descriptor = descriptor
        if descriptor.is_symmetric:
            arr = np.asarray(data, dtype=np.int64) if _checked else np.array(data, dtype=np.int64)
            if not _checked:
                if arr.shape != (descriptor.n,):
                    raise ValueError(f"expected {descriptor.n} images, got shape {arr.shape}")
                if not np.array_equal(np.sort(arr), np.arange(descriptor.n)):
                    raise ValueError("image array is not a bijection of 0..n-1")
        else:
            arr = (
                np.asarray(data, dtype=np.complex128)
                if _checked
                else np.array(data, dtype=np.complex128)
            )
            if not _checked:
                n = descriptor.n
                if arr.shape != (n, n):
                    raise ValueError(f"expected a {n}x{n} matrix, got shape {arr.shape}")
                gram = arr.conj().T @ arr
                if np.abs(gram - np.eye(n)).max() > UNITARITY_TOL:
                    raise ValueError("matrix is not unitary within tolerance")
        arr.flags.writeable = False
        self.data = arr

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroupElement)
            and self.descriptor == other.descriptor
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        kind = "perm" if self.descriptor.is_symmetric else "unitary"
        return f"GroupElement({kind}, n={self.descriptor.n})"

    def to_json(self) -> dict:
        if self.descriptor.is_symmetric:
            return {"perm": self.data.tolist(), "metric": self.descriptor.to_json()}
        entries = [[[float(z.real), float(z.imag)] for z in row] for row in self.data]
        return {"unitary": entries, "metric": self.descriptor.to_json()}

    @staticmethod
    def from_json(data: dict, descriptor: MetricDescriptor | None = None) -> "GroupElement":
        desc = MetricDescriptor.from_json(data["metric"]) if "metric" in data else descriptor
        if desc is None:
            raise ValueError("element JSON carries no metric descriptor")
        if "perm" in data:
            return GroupElement(desc, np.asarray(data["perm"], dtype=np.int64))
        if "unitary" in data:
            rows = [[complex(re, im) for re, im in row] for row in data["unitary"]]
            return GroupElement(desc, np.asarray(rows, dtype=np.complex128))
        raise ValueError("element JSON needs a 'perm' or 'unitary' field")


def _require_same(a: GroupElement, b: GroupElement):
    if a.descriptor != b.descriptor:
        raise BackendMismatchError(
            f"descriptor mismatch: {a.descriptor} vs {b.descriptor}"
        )


def identity(desc: MetricDescriptor) -> GroupElement:
    if desc.is_symmetric:
        return GroupElement(desc, np.arange(desc.n, dtype=np.int64), _checked=True)
    return GroupElement(desc, np.eye(desc.n, dtype=np.complex128), _checked=True)


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product; for permutations the right factor acts first."""
    _require_same(a, b)
    if a.descriptor.is_symmetric:
        return GroupElement(a.descriptor, _kernels.perm_compose(a.data, b.data), _checked=True)
    return GroupElement(a.descriptor, a.data @ b.data, _checked=True)


def invert(a: GroupElement) -> GroupElement:
    if a.descriptor.is_symmetric:
        return GroupElement(a.descriptor, _kernels.perm_invert(a.data), _checked=True)
    return GroupElement(a.descriptor, a.data.conj().T, _checked=True)


# ---------------------------------------------------------------------------
# Distances


def _images(x) -> np.ndarray:
    return x.data if isinstance(x, GroupElement) else np.asarray(x, dtype=np.int64)


def _matrix(x) -> np.ndarray:
    return x.data if isinstance(x, GroupElement) else np.asarray(x, dtype=np.complex128)


def hamming_distance(a, b) -> float:
    """Fraction of points moved differently: |{j : a(j) != b(j)}| / n."""
    ai, bi = _images(a), _images(b)
    if ai.shape != bi.shape:
        raise BackendMismatchError("degree mismatch in Hamming distance")
    return _kernels.hamming_count(ai, bi) / ai.shape[0]


def singular_values(m) -> np.ndarray:
    """Singular values, nonincreasing, via cyclic Jacobi on the Gram matrix."""
    mat = _matrix(m)
    gram = mat.conj().T @ mat
    tol = JACOBI_TOL * max(1.0, float(np.abs(gram).max()))
    try:
        eigs = _kernels.jacobi_eigvalsh(gram, tol, JACOBI_MAX_SWEEPS)
    except RuntimeError as exc:
        raise NumericError(str(exc)) from exc
    eigs = np.asarray(eigs, dtype=np.float64)
    if eigs.min(initial=0.0) < -JACOBI_TOL:
        raise NumericError(f"Gram matrix produced eigenvalue {eigs.min()} < -{JACOBI_TOL}")
    eigs = np.where(eigs < 0.0, 0.0, eigs)
    return np.sort(np.sqrt(eigs))[::-1]


def hs_distance(a, b) -> float:
    """Normalized Hilbert-Schmidt distance sqrt(tr((A-B)*(A-B)) / n)."""
    am, bm = _matrix(a), _matrix(b)
    if am.shape != bm.shape:
        raise BackendMismatchError("degree mismatch in HS distance")
    diff = am - bm
    return math.sqrt(float(np.sum(np.abs(diff) ** 2)) / am.shape[0])


def schatten_distance(a, b, p: float) -> float:
    """Unnormalized Schatten p-norm of A - B: (sum of sigma_i^p)^(1/p)."""
    if p < 1:
        raise ValueError("Schatten exponent must satisfy p >= 1")
    am, bm = _matrix(a), _matrix(b)
    if am.shape != bm.shape:
        raise BackendMismatchError("degree mismatch in Schatten distance")
    sigma = singular_values(am - bm)
    return float(np.sum(sigma ** p) ** (1.0 / p))


def operator_distance(a, b) -> float:
    """Largest singular value of A - B."""
    am, bm = _matrix(a), _matrix(b)
    if am.shape != bm.shape:
        raise BackendMismatchError("degree mismatch in operator distance")
    sigma = singular_values(am - bm)
    return float(sigma[0]) if sigma.size else 0.0


def distance(a: GroupElement, b: GroupElement) -> float:
    """The descriptor's metric, dispatched over the four families."""
    _require_same(a, b)
    family = a.descriptor.family
    if family == SYM_HAMMING:
        return hamming_distance(a.data, b.data)
    if family == U_HS:
        return hs_distance(a.data, b.data)
    if family == U_SCHATTEN:
        return schatten_distance(a.data, b.data, a.descriptor.p)
    return operator_distance(a.data, b.data)


def tolerance_for(desc: MetricDescriptor) -> float:
    """Audit tolerance: exact for Hamming, 1e-9 for the unitary families."""
    return 0.0 if desc.is_symmetric else 1e-9


# ---------------------------------------------------------------------------
# Matrix exponential and random elements


def unitary_exp(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(i * scale * H) for Hermitian H, by scaling-and-squaring Taylor.

    Stays on the unitary group up to roundoff; series truncated when the
    next term drops below 1e-14 in Frobenius norm.
    """
    h = np.asarray(h, dtype=np.complex128)
    n = h.shape[0]
    x = 1j * scale * h
    norm = float(np.sqrt(np.sum(np.abs(x) ** 2)))
    squarings = 0
    while norm > 0.5:
        x = x * 0.5
        norm *= 0.5
        squarings += 1
    term = np.eye(n, dtype=np.complex128)
    total = np.eye(n, dtype=np.complex128)
    k = 1
    while True:
        term = term @ x / k
        total = total + term
        if float(np.sqrt(np.sum(np.abs(term) ** 2))) < 1e-14 or k > 60:
            break
        k += 1
    for _ in range(squarings):
        total = total @ total
    return total


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.permutation(n).astype(np.int64)


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2.0


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-like random unitary via modified Gram-Schmidt with phase fixing."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        v = a[:, j].copy()
        for i in range(j):
            v -= (q[:, i].conj() @ v) * q[:, i]
        norm = math.sqrt(float(np.sum(np.abs(v) ** 2)))
        if norm < 1e-12:
            v = np.zeros(n, dtype=np.complex128)
            v[j] = 1.0
            norm = 1.0
        q[:, j] = v / norm
    # fix phases so the construction is scale-canonical
    for j in range(n):
        pivot = q[np.argmax(np.abs(q[:, j])), j]
        q[:, j] *= np.conj(pivot) / abs(pivot)
    return q


def random_element(desc: MetricDescriptor, rng: np.random.Generator) -> GroupElement:
    if desc.is_symmetric:
        return GroupElement(desc, random_permutation(desc.n, rng), _checked=True)
    return GroupElement(desc, random_unitary(desc.n, rng))


def sample_near(g: GroupElement, radius: float, rng: np.random.Generator) -> GroupElement:
    """Perturb ``g`` by roughly ``radius`` in the group's own metric.

    Permutations: compose with a random permutation supported on
    floor(radius*n) random points, so the distance from ``g`` is at most
    floor(radius*n)/n exactly.  Unitaries: multiply by exp(i*radius*H) for a
    random Hermitian H of unit operator norm; the distance is radius to
    first order but not exact.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius == 0:
        return g
    desc = g.descriptor
    if desc.is_symmetric:
        if radius > 1:
            raise ValueError("radius > 1 makes no sense for the Hamming metric")
        k = int(radius * desc.n)
        if k < 2:
            return g
        points = np.sort(rng.choice(desc.n, size=k, replace=False))
        images = np.arange(desc.n, dtype=np.int64)
        images[points] = points[rng.permutation(k)]
        pi = GroupElement(desc, images, _checked=True)
        return multiply(g, pi)
    h = random_hermitian(desc.n, rng)
    sigma = singular_values(h)
    if sigma[0] <= 0.0:
        return g
    u = unitary_exp(h / sigma[0], radius)
    return multiply(g, GroupElement(desc, u))


def enumerate_elements(desc: MetricDescriptor) -> Iterator[GroupElement]:
    """All n! permutations in lexicographic image order (sym only, n <= 8)."""
    if not desc.is_symmetric or desc.n > ENUMERATION_DEGREE_CAP:
        raise CapsExceededError(
            f"element enumeration needs family {SYM_HAMMING} with n <= {ENUMERATION_DEGREE_CAP}"
        )
    for images in itertools.permutations(range(desc.n)):
        yield GroupElement(desc, np.array(images, dtype=np.int64), _checked=True)


# ---------------------------------------------------------------------------
# Randomized metric audit


@dataclass(frozen=True)
class MetricAuditReport:
    descriptor: MetricDescriptor
    trials: int
    max_bi_invariance_violation: float
    max_triangle_violation: float
    max_symmetry_violation: float
    max_self_distance: float
    tolerance: float

    @property
    def max_violation(self) -> float:
        return max(
            self.max_bi_invariance_violation,
            self.max_triangle_violation,
            self.max_symmetry_violation,
            self.max_self_distance,
        )

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {
            "metric": self.descriptor.to_json(),
            "trials": self.trials,
            "max_bi_invariance_violation": self.max_bi_invariance_violation,
            "max_triangle_violation": self.max_triangle_violation,
            "max_symmetry_violation": self.max_symmetry_violation,
            "max_self_distance": self.max_self_distance,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def audit_metric(
    desc: MetricDescriptor, trials: int, rng: np.random.Generator
) -> MetricAuditReport:
    """Randomized check of bi-invariance and the metric axioms."""
    bi = tri = sym = self_d = 0.0
    for _ in range(trials):
        x = random_element(desc, rng)
        y = random_element(desc, rng)
        z = random_element(desc, rng)
        g = random_element(desc, rng)
        dxy = distance(x, y)
        left = distance(multiply(g, x), multiply(g, y))
        right = distance(multiply(x, g), multiply(y, g))
        bi = max(bi, abs(left - dxy), abs(right - dxy))
        tri = max(tri, distance(x, z) - (dxy + distance(y, z)))
        sym = max(sym, abs(dxy - distance(y, x)))
        self_d = max(self_d, distance(x, x))
    return MetricAuditReport(
        descriptor=desc,
        trials=trials,
        max_bi_invariance_violation=bi,
        max_triangle_violation=max(tri, 0.0),
        max_symmetry_violation=sym,
        max_self_distance=self_d,
        tolerance=tolerance_for(desc),
    )

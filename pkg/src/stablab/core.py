"""Defect, assignment distance, and homomorphism distance.

An :class:`AlmostHom` assigns one group element to each generator of a
presentation.  ``defect`` measures how badly the relators fail (max distance
of a relator's value from the identity), ``dist`` compares two assignments
generator-wise, and ``homdist_exact`` / ``homdist_upper`` measure the
distance to the nearest exact homomorphism - exactly by enumeration for
symmetric backends within caps, or as an honest upper bound from local
search otherwise.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels, metrics
from .errors import BackendMismatchError, CapsExceededError, SearchError
from .metrics import GroupElement, MetricDescriptor
from .words import Presentation, TransportMap, Word

DEGREE_CAP = 6
GENERATOR_CAP = 4
UNITARY_EXACT_TOL = 1e-9


@dataclass(frozen=True)
class AlmostHom:
    """A generator assignment into one metric-group backend."""

    presentation: Presentation
    descriptor: MetricDescriptor
    assignment: tuple[GroupElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if len(self.assignment) != self.presentation.rank:
            raise ValueError(
                f"need {self.presentation.rank} elements, got {len(self.assignment)}"
            )
        for element in self.assignment:
            if element.descriptor != self.descriptor:
                raise BackendMismatchError("assignment element does not match descriptor")

    def to_json(self) -> dict:
        return {
            "presentation": self.presentation.to_json(),
            "metric": self.descriptor.to_json(),
            "assignment": [g.to_json() for g in self.assignment],
        }

    @staticmethod
    def from_json(data: dict) -> "AlmostHom":
        presentation = Presentation.from_json(data["presentation"])
        descriptor = MetricDescriptor.from_json(data["metric"])
        assignment = tuple(
            GroupElement.from_json(entry, descriptor) for entry in data["assignment"]
        )
        return AlmostHom(presentation, descriptor, assignment)


@dataclass(frozen=True)
class DefectReport:
    defect: float
    per_relator: tuple[tuple[int, float], ...]

    def to_json(self) -> dict:
        return {
            "defect": self.defect,
            "per_relator": [
                {"relator": i, "distance": d} for i, d in self.per_relator
            ],
        }


@dataclass(frozen=True)
class HomDistResult:
    value: float
    witness: AlmostHom
    method: str  # "exact" | "upper_bound"

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "witness": self.witness.to_json(),
        }


def trivial_homomorphism(p: Presentation, desc: MetricDescriptor) -> AlmostHom:
    """Every generator to the identity; a homomorphism for any presentation."""
    e = metrics.identity(desc)
    return AlmostHom(p, desc, tuple(e for _ in range(p.rank)))


def _perm_tables(phi: AlmostHom) -> tuple[np.ndarray, np.ndarray]:
    gens = np.stack([g.data for g in phi.assignment])
    inv = np.stack([_kernels.perm_invert(g.data) for g in phi.assignment])
    return gens, inv


def evaluate_word(phi: AlmostHom, w: Word) -> GroupElement:
    """Product of assigned elements along the word; empty word is identity."""
    if w.max_index() >= phi.presentation.rank:
        raise ValueError("word refers to a generator outside the presentation")
    desc = phi.descriptor
    if desc.is_symmetric:
        gens, inv = _perm_tables(phi)
        letters = np.asarray(w.letters, dtype=np.int64)
        return GroupElement(desc, _kernels.eval_word_perm(letters, gens, inv), _checked=True)
    acc = np.eye(desc.n, dtype=np.complex128)
    for x in w.letters:
        m = phi.assignment[abs(x) - 1].data
        acc = acc @ (m if x > 0 else m.conj().T)
    return GroupElement(desc, acc, _checked=True)


def defect(phi: AlmostHom) -> DefectReport:
    """Max over relators of the distance from the relator's value to 1."""
    e = metrics.identity(phi.descriptor)
    per = tuple(
        (i, metrics.distance(evaluate_word(phi, r), e))
        for i, r in enumerate(phi.presentation.relators)
    )
    return DefectReport(max((d for _, d in per), default=0.0), per)


def dist(phi: AlmostHom, psi: AlmostHom) -> float:
    """Max over generators of the backend distance between assignments."""
    if phi.presentation != psi.presentation:
        raise BackendMismatchError("assignments live on different presentations")
    if phi.descriptor != psi.descriptor:
        raise BackendMismatchError("assignments use different metric backends")
    return max(
        metrics.distance(a, b) for a, b in zip(phi.assignment, psi.assignment)
    )


def transport_hom(
    phi: AlmostHom, tmap: TransportMap, target: Presentation
) -> AlmostHom:
    """Reinterpret an assignment across presentations via a transport map.

    Each target generator receives the evaluation under ``phi`` of its
    transport word.  Transporting an exact homomorphism along a Tietze
    transport yields an exact homomorphism on the target presentation.
    """
    if tmap.source_rank != phi.presentation.rank:
        raise BackendMismatchError("transport source does not match the assignment")
    if len(tmap.words) != target.rank:
        raise BackendMismatchError("transport target does not match the presentation")
    assignment = tuple(evaluate_word(phi, w) for w in tmap.words)
    return AlmostHom(target, phi.descriptor, assignment)


# ---------------------------------------------------------------------------
# Exact homomorphism enumeration (symmetric backends)


def _check_enumeration_caps(p: Presentation, desc: MetricDescriptor, degree_cap: int, generator_cap: int):
    if not desc.is_symmetric:
        raise CapsExceededError("exact enumeration exists only for sym_hamming backends")
    if desc.n > degree_cap:
        raise CapsExceededError(f"degree {desc.n} exceeds the enumeration cap {degree_cap}")
    if p.rank > generator_cap:
        raise CapsExceededError(
            f"{p.rank} generators exceed the enumeration cap {generator_cap}"
        )


def enumerate_homomorphisms(
    p: Presentation,
    desc: MetricDescriptor,
    degree_cap: int = DEGREE_CAP,
    generator_cap: int = GENERATOR_CAP,
) -> Iterator[AlmostHom]:
    """All exact homomorphisms, by backtracking with early relator pruning.

    A relator is checked as soon as every generator it mentions has been
    assigned, so most branches die early.  Assignments are produced in
    lexicographic order of their image arrays.
    """
    _check_enumeration_caps(p, desc, degree_cap, generator_cap)
    n, rank = desc.n, p.rank
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    inv_perms = np.argsort(perms, axis=1).astype(np.int64)
    check_at: list[list[np.ndarray]] = [[] for _ in range(rank + 1)]
    for r in p.relators:
        check_at[r.max_index() + 1].append(np.asarray(r.letters, dtype=np.int64))
    gens = np.zeros((rank, n), dtype=np.int64)
    gens_inv = np.zeros((rank, n), dtype=np.int64)
    idarr = np.arange(n, dtype=np.int64)

    def emit() -> AlmostHom:
        assignment = tuple(
            GroupElement(desc, gens[i].copy(), _checked=True) for i in range(rank)
        )
        return AlmostHom(p, desc, assignment)

    def rec(depth: int) -> Iterator[AlmostHom]:
        if depth == rank:
            yield emit()
            return
        for i in range(perms.shape[0]):
            gens[depth] = perms[i]
            gens_inv[depth] = inv_perms[i]
            ok = True
            for letters in check_at[depth + 1]:
                value = _kernels.eval_word_perm(letters, gens, gens_inv)
                if not np.array_equal(value, idarr):
                    ok = False
                    break
            if ok:
                yield from rec(depth + 1)

    return rec(0)


@functools.lru_cache(maxsize=32)
def _hom_table(
    p: Presentation, desc: MetricDescriptor, degree_cap: int, generator_cap: int
) -> np.ndarray:
    """(m, rank, n) stack of all exact homomorphisms' image arrays."""
    rows = [
        np.stack([g.data for g in h.assignment])
        for h in enumerate_homomorphisms(p, desc, degree_cap, generator_cap)
    ]
    return np.array(rows, dtype=np.int64)


def homdist_exact(
    phi: AlmostHom,
    degree_cap: int = DEGREE_CAP,
    generator_cap: int = GENERATOR_CAP,
) -> HomDistResult:
    """Minimum distance to an exact homomorphism, by full enumeration.

    Ties are broken by enumeration order (the first minimizer is kept), so
    the witness is reproducible.
    """
    table = _hom_table(phi.presentation, phi.descriptor, degree_cap, generator_cap)
    phi_mat = np.stack([g.data for g in phi.assignment])
    idx, count = _kernels.homdist_scan(table, phi_mat)
    witness = AlmostHom(
        phi.presentation,
        phi.descriptor,
        tuple(
            GroupElement(phi.descriptor, table[idx, i].copy(), _checked=True)
            for i in range(phi.presentation.rank)
        ),
    )
    return HomDistResult(count / phi.descriptor.n, witness, "exact")


# ---------------------------------------------------------------------------
# Upper bound by greedy local search


def exactness_tolerance(desc: MetricDescriptor) -> float:
    """Defect below which an assignment counts as an exact homomorphism."""
    return 0.0 if desc.is_symmetric else UNITARY_EXACT_TOL


@functools.lru_cache(maxsize=16)
def _descent_directions(n: int) -> tuple[np.ndarray, ...]:
    """Fixed quasi-random Hermitian directions of unit operator norm."""
    rng = np.random.default_rng(0x5AB1AB)
    out = []
    for _ in range(4):
        h = metrics.random_hermitian(n, rng)
        h = h / metrics.singular_values(h)[0]
        out.extend([h, -h])
    return tuple(out)


def _sym_candidates(phi: AlmostHom, gen_index: int) -> Iterator[GroupElement]:
    images = phi.assignment[gen_index].data
    n = images.shape[0]
    for i in range(n - 1):
        for j in range(i + 1, n):
            cand = images.copy()
            cand[i], cand[j] = cand[j], cand[i]
            yield GroupElement(phi.descriptor, cand, _checked=True)


def _replace(phi: AlmostHom, gen_index: int, element: GroupElement) -> AlmostHom:
    assignment = list(phi.assignment)
    assignment[gen_index] = element
    return AlmostHom(phi.presentation, phi.descriptor, tuple(assignment))


def homdist_upper(
    phi: AlmostHom,
    budget: int = 200,
    rng: np.random.Generator | None = None,
) -> HomDistResult:
    """Upper bound on the homomorphism distance via greedy defect descent.

    Symmetric backends adjust one generator image by a transposition per
    round; unitary backends take geodesic steps along a fixed set of eight
    Hermitian directions with step halving.  The search is deterministic
    (``rng`` is accepted for interface symmetry and seeded extensions).
    Raises :class:`SearchError` carrying the best candidate if the budget is
    exhausted or the search stalls before reaching an exact homomorphism.
    """
    del rng  # the default move sets are fully deterministic
    tol = exactness_tolerance(phi.descriptor)
    current = phi
    current_defect = defect(current).defect
    if current_defect <= tol:
        return HomDistResult(0.0, current, "upper_bound")
    step = max(current_defect, 1e-3)
    for _ in range(budget):
        best_defect = current_defect
        best = None
        for gen_index in range(phi.presentation.rank):
            if phi.descriptor.is_symmetric:
                candidates = _sym_candidates(current, gen_index)
            else:
                base = current.assignment[gen_index].data
                candidates = (
                    GroupElement(phi.descriptor, base @ metrics.unitary_exp(h, step))
                    for h in _descent_directions(phi.descriptor.n)
                )
            for cand in candidates:
                trial = _replace(current, gen_index, cand)
                d = defect(trial).defect
                if d < best_defect:
                    best_defect = d
                    best = trial
        if best is None:
            if phi.descriptor.is_symmetric or step < 1e-13:
                raise SearchError(
                    "local search stalled before reaching an exact homomorphism",
                    best=current,
                )
            step *= 0.5
            continue
        current, current_defect = best, best_defect
        if current_defect <= tol:
            return HomDistResult(dist(phi, current), current, "upper_bound")
    raise SearchError("search budget exhausted without an exact witness", best=current)

"""Empirical stability-rate curves and their comparison.

``sample_rate`` estimates D(delta) = sup { homdist(phi) : defect(phi) < delta }
from below: it perturbs exact homomorphisms and filters random assignments,
records the homomorphism distance of every accepted sample, and reports the
max per grid point.  The underestimation bias is structural and every curve
carries its sample counts and method mix so it stays visible.

``preceq_check`` decides the order f(delta) <= C g(C delta) + C delta on a
finite grid with a bounded search over C.  A witness is conclusive for the
grid; absence of one is evidence, not proof.  Sampled functions are
interpolated by monotone steps that round queries up to the next sampled
point (never under-reporting g inside the sampled span) and extend past the
grid by the last value.
"""

from __future__ import annotations

import bisect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import core, metrics
from .core import AlmostHom
from .errors import SearchError
from .metrics import GroupElement, MetricDescriptor
from .words import Presentation, TransportMap

DEFAULT_C_GRID = tuple(float(2**k) for k in range(21))
SURROGATE_NOTE = (
    "finite-prefix surrogate: trends are computed on the stored prefix only, "
    "no ultrafilter limits are involved"
)


@dataclass(frozen=True)
class RateSample:
    defect: float
    homdist: float
    method: str  # "exact" | "upper_bound"
    degree: int
    provenance: tuple  # (bin index, descriptor index, sample index, kind)
    hom: AlmostHom


@dataclass(frozen=True)
class RateCurve:
    """Staircase estimate of D(delta) with per-bin sample provenance."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    counts: tuple[int, ...]
    method_mix: tuple[tuple[str, int], ...]
    empty_bins: tuple[int, ...]
    samples: tuple[RateSample, ...]

    def __post_init__(self):
        if list(self.grid) != sorted(self.grid) or len(set(self.grid)) != len(self.grid):
            raise ValueError("grid must be strictly increasing")
        if any(d <= 0 for d in self.grid):
            raise ValueError("grid values must be positive")
        for a, b in zip(self.values, self.values[1:]):
            if b < a:
                raise ValueError("curve values must be monotone nondecreasing")

    def to_csv(self) -> str:
        method = ",".join(f"{name}:{count}" for name, count in self.method_mix)
        lines = ["delta,D_emp,samples,method"]
        for delta, value, count in zip(self.grid, self.values, self.counts):
            lines.append(f"{delta!r},{value!r},{count},{method}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "grid": list(self.grid),
            "values": list(self.values),
            "counts": list(self.counts),
            "method_mix": {name: count for name, count in self.method_mix},
            "empty_bins": list(self.empty_bins),
        }


def _perturb_hom(base: AlmostHom, radius: float, rng: np.random.Generator) -> AlmostHom:
    assignment = tuple(metrics.sample_near(g, radius, rng) for g in base.assignment)
    return AlmostHom(base.presentation, base.descriptor, assignment)


def _random_hom(
    p: Presentation, desc: MetricDescriptor, rng: np.random.Generator
) -> AlmostHom:
    assignment = tuple(metrics.random_element(desc, rng) for _ in range(p.rank))
    return AlmostHom(p, desc, assignment)


def _measure_homdist(
    phi: AlmostHom, method: str, degree_cap: int, generator_cap: int, upper_budget: int
) -> tuple[float, str, str]:
    """Returns (homdist, method label, sampler note)."""
    if method == "exact":
        result = core.homdist_exact(phi, degree_cap, generator_cap)
        return result.value, "exact", ""
    try:
        result = core.homdist_upper(phi, budget=upper_budget)
        return result.value, "upper_bound", ""
    except SearchError:
        trivial = core.trivial_homomorphism(phi.presentation, phi.descriptor)
        return core.dist(phi, trivial), "upper_bound", "trivial-fallback"


def _bin_task(
    p: Presentation,
    desc: MetricDescriptor,
    desc_index: int,
    bin_index: int,
    delta: float,
    samples_per_bin: int,
    method: str,
    seed: int,
    retry_budget: int,
    degree_cap: int,
    generator_cap: int,
    upper_budget: int,
    base_table: np.ndarray | None,
) -> list[RateSample]:
    samples: list[RateSample] = []
    enumerable = (
        desc.is_symmetric and desc.n <= degree_cap and p.rank <= generator_cap
    )
    if base_table is None and enumerable:
        base_table = core._hom_table(p, desc, degree_cap, generator_cap)
    for i in range(samples_per_bin):
        rng = np.random.default_rng((seed, bin_index, desc_index, i))
        kind = "perturbed" if i % 2 == 0 else "random"
        phi = None
        if kind == "perturbed":
            if base_table is not None:
                row = base_table[int(rng.integers(base_table.shape[0]))]
                base = AlmostHom(
                    p,
                    desc,
                    tuple(
                        GroupElement(desc, images.copy(), _checked=True) for images in row
                    ),
                )
            else:
                # no enumerable homomorphism family: perturb the one
                # homomorphism every presentation has
                base = core.trivial_homomorphism(p, desc)
            radius = 1.0
            for _ in range(40):
                candidate = _perturb_hom(base, radius, rng)
                if core.defect(candidate).defect < delta:
                    phi = candidate
                    break
                radius *= 0.5
            if phi is None:
                phi = base  # radius underflow cannot happen, but stay safe
        else:
            for _ in range(retry_budget):
                candidate = _random_hom(p, desc, rng)
                if core.defect(candidate).defect < delta:
                    phi = candidate
                    break
            if phi is None:
                continue  # rejected: this draw found nothing under the bin's bound
        value, label, note = _measure_homdist(
            phi, method, degree_cap, generator_cap, upper_budget
        )
        samples.append(
            RateSample(
                defect=core.defect(phi).defect,
                homdist=value,
                method=label,
                degree=desc.n,
                provenance=(bin_index, desc_index, i, kind + (":" + note if note else "")),
                hom=phi,
            )
        )
    return samples


def sample_rate(
    p: Presentation,
    descriptors: MetricDescriptor | Sequence[MetricDescriptor],
    delta_grid: Sequence[float],
    samples_per_bin: int,
    method: str = "exact",
    seed: int = 0,
    retry_budget: int = 50,
    degree_cap: int = core.DEGREE_CAP,
    generator_cap: int = core.GENERATOR_CAP,
    upper_budget: int = 200,
    threads: int = 1,
    base_tables: Sequence[np.ndarray] | None = None,
) -> RateCurve:
    """Sample an empirical rate curve over one or several backend degrees.

    A multi-degree curve is the pointwise max over the configured degrees
    (the degree sweep is an experimental policy, echoed in provenance).
    ``samples_per_bin`` applies per bin and per descriptor, split half and
    half between perturbed exact homomorphisms and rejection-filtered random
    assignments.  Sampling is deterministic in ``seed`` and independent of
    ``threads``: each (bin, descriptor, index) task derives its own stream.

    ``base_tables`` optionally overrides the exact-homomorphism tables used
    to seed the perturbation sampler (one per descriptor), e.g. with
    transported homomorphisms from another presentation.
    """
    if method not in ("exact", "upper"):
        raise ValueError("method must be 'exact' or 'upper'")
    if isinstance(descriptors, MetricDescriptor):
        descriptors = [descriptors]
    descriptors = list(descriptors)
    grid = [float(d) for d in delta_grid]
    if sorted(grid) != grid or any(d <= 0 for d in grid):
        raise ValueError("delta grid must be positive and increasing")
    tasks = []
    for b, delta in enumerate(grid):
        for j, desc in enumerate(descriptors):
            base = None if base_tables is None else base_tables[j]
            tasks.append(
                (p, desc, j, b, delta, samples_per_bin, method, seed, retry_budget,
                 degree_cap, generator_cap, upper_budget, base)
            )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda args: _bin_task(*args), tasks))
    else:
        results = [_bin_task(*args) for args in tasks]
    all_samples: list[RateSample] = [s for chunk in results for s in chunk]

    values = []
    counts = [0] * len(grid)
    for sample in all_samples:
        counts[sample.provenance[0]] += 1
    for delta in grid:
        qualifying = [s.homdist for s in all_samples if s.defect < delta]
        values.append(max(qualifying, default=0.0))
    mix: dict[str, int] = {}
    for sample in all_samples:
        mix[sample.method] = mix.get(sample.method, 0) + 1
    return RateCurve(
        grid=tuple(grid),
        values=tuple(values),
        counts=tuple(counts),
        method_mix=tuple(sorted(mix.items())),
        empty_bins=tuple(b for b, c in enumerate(counts) if c == 0),
        samples=tuple(all_samples),
    )


# ---------------------------------------------------------------------------
# Curve analysis


@dataclass(frozen=True)
class ExponentFit:
    alpha: float
    r_squared: float
    points_used: int

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "r_squared": self.r_squared,
            "points_used": self.points_used,
        }


def fit_exponent(curve: RateCurve) -> ExponentFit:
    """Least-squares slope of log D against log delta over nonzero bins."""
    points = [(d, v) for d, v in zip(curve.grid, curve.values) if v > 0]
    if len(points) < 3:
        raise ValueError(f"fewer than 3 usable points ({len(points)} nonzero bins)")
    x = np.log([d for d, _ in points])
    y = np.log([v for _, v in points])
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    residual = y - (ym + slope * (x - xm))
    ss_res = float((residual**2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ExponentFit(alpha=slope, r_squared=r2, points_used=len(points))


@dataclass(frozen=True)
class LinearLowerReport:
    c_max: float
    note: str | None

    def to_json(self) -> dict:
        return {"c_max": self.c_max, "note": self.note}


def linear_lower_check(curve: RateCurve) -> LinearLowerReport:
    """Largest c with c*delta <= D(delta) at every bin with a positive value."""
    ratios = [v / d for d, v in zip(curve.grid, curve.values) if v > 0]
    if not ratios:
        return LinearLowerReport(0.0, "free-group-like: empirical curve is identically zero")
    return LinearLowerReport(min(ratios), None)


# ---------------------------------------------------------------------------
# The order f <= C g(C .) + C . on sampled monotone functions


@dataclass(frozen=True)
class StepFunction:
    """Monotone step interpolation of samples; queries round up to the grid."""

    grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.grid) != len(self.values) or not self.grid:
            raise ValueError("need equally many grid points and values")
        if list(self.grid) != sorted(self.grid):
            raise ValueError("grid must be increasing")

    def at(self, x: float) -> float:
        i = bisect.bisect_left(self.grid, x)
        return self.values[i] if i < len(self.values) else self.values[-1]


def as_step(f) -> StepFunction:
    if isinstance(f, StepFunction):
        return f
    if isinstance(f, RateCurve):
        return StepFunction(f.grid, f.values)
    grid, values = f
    return StepFunction(tuple(float(x) for x in grid), tuple(float(v) for v in values))


def check_witness(f, g, C: float, delta_grid: Sequence[float] | None = None) -> bool:
    """Does f(d) <= C g(C d) + C d hold at every grid point?"""
    fs, gs = as_step(f), as_step(g)
    grid = fs.grid if delta_grid is None else delta_grid
    return all(fs.at(d) <= C * gs.at(C * d) + C * d for d in grid)


@dataclass(frozen=True)
class RateComparison:
    direction: str
    witness_C: float | None
    c_grid: tuple[float, ...]
    delta_grid: tuple[float, ...]
    interpolation: str = "monotone step, queries rounded up, constant beyond grid"

    @property
    def holds(self) -> bool:
        return self.witness_C is not None

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "witness_C": self.witness_C,
            "holds": self.holds,
            "C_grid": [self.c_grid[0], self.c_grid[-1], len(self.c_grid)],
            "delta_grid": list(self.delta_grid),
            "interpolation": self.interpolation,
        }


def preceq_check(
    f,
    g,
    c_grid: Sequence[float] | None = None,
    delta_grid: Sequence[float] | None = None,
    direction: str = "f<=g",
) -> RateComparison:
    """Smallest C in the grid witnessing f(d) <= C g(C d) + C d, if any.

    A finite-grid semi-decision: a returned witness certifies the inequality
    on the grid; ``witness_C=None`` only means no C in the search grid works
    there.
    """
    cs = tuple(float(c) for c in (DEFAULT_C_GRID if c_grid is None else c_grid))
    if not cs:
        raise ValueError("empty C grid")
    fs = as_step(f)
    grid = tuple(float(d) for d in (fs.grid if delta_grid is None else delta_grid))
    if not grid:
        raise ValueError("empty delta grid")
    for c in cs:
        if check_witness(fs, g, c, grid):
            return RateComparison(direction, c, cs, grid)
    return RateComparison(direction, None, cs, grid)


@dataclass(frozen=True)
class EquivalenceResult:
    forward: RateComparison
    backward: RateComparison

    @property
    def equivalent(self) -> bool:
        return self.forward.holds and self.backward.holds

    def to_json(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "forward": self.forward.to_json(),
            "backward": self.backward.to_json(),
        }


def equiv_check(
    f,
    g,
    c_grid: Sequence[float] | None = None,
    delta_grid: Sequence[float] | None = None,
) -> EquivalenceResult:
    """Both directions of ``preceq_check``; equivalent iff both witness."""
    return EquivalenceResult(
        forward=preceq_check(f, g, c_grid, delta_grid, direction="f<=g"),
        backward=preceq_check(g, f, c_grid, delta_grid, direction="g<=f"),
    )


def presentation_rate_compare(
    p1: Presentation,
    p2: Presentation,
    forward: TransportMap,
    descriptors1: Sequence[MetricDescriptor],
    descriptors2: Sequence[MetricDescriptor],
    delta_grid: Sequence[float],
    samples_per_bin: int,
    method: str = "exact",
    seed: int = 0,
    c_grid: Sequence[float] | None = None,
    **sample_kwargs,
) -> tuple[EquivalenceResult, RateCurve, RateCurve]:
    """Sample both presentations' curves and test their equivalence.

    The second presentation's perturbation sampler is seeded with the first
    presentation's exact homomorphisms transported along ``forward``, tying
    the two experiments to the same underlying family.
    """
    degree_cap = sample_kwargs.get("degree_cap", core.DEGREE_CAP)
    generator_cap = sample_kwargs.get("generator_cap", core.GENERATOR_CAP)
    transported_tables = []
    for desc1, desc2 in zip(descriptors1, descriptors2):
        table = core._hom_table(p1, desc1, degree_cap, generator_cap)
        rows = []
        for row in table:
            base = AlmostHom(
                p1,
                desc1,
                tuple(GroupElement(desc1, images.copy(), _checked=True) for images in row),
            )
            moved = core.transport_hom(base, forward, p2)
            rows.append(np.stack([g.data for g in moved.assignment]))
        transported_tables.append(np.array(rows, dtype=np.int64))
    curve1 = sample_rate(
        p1, descriptors1, delta_grid, samples_per_bin, method, seed, **sample_kwargs
    )
    curve2 = sample_rate(
        p2,
        descriptors2,
        delta_grid,
        samples_per_bin,
        method,
        seed + 1,
        base_tables=transported_tables,
        **sample_kwargs,
    )
    return equiv_check(curve1, curve2, c_grid=c_grid), curve1, curve2


# ---------------------------------------------------------------------------
# Finite-prefix surrogates for the asymptotic definitions


@dataclass(frozen=True)
class AsymptoticReport:
    surrogate: str
    defects: tuple[float, ...]  # the stored prefix; verdicts recompute from it
    is_asymptotic: bool
    diminish_a: bool | None
    a_constant: float | None
    diminish_b: bool | None
    b_last_quarter_mean: float | None
    skipped_zero_defects: int

    @property
    def prefix_length(self) -> int:
        return len(self.defects)

    def to_json(self) -> dict:
        return {
            "surrogate": self.surrogate,
            "defects": list(self.defects),
            "prefix_length": self.prefix_length,
            "is_asymptotic": self.is_asymptotic,
            "diminish_a": self.diminish_a,
            "a_constant": self.a_constant,
            "diminish_b": self.diminish_b,
            "b_last_quarter_mean": self.b_last_quarter_mean,
            "skipped_zero_defects": self.skipped_zero_defects,
        }


def asymptotic_checks(
    defects: Sequence[float],
    dists: Sequence[float] | None = None,
    new_defects: Sequence[float] | None = None,
    final_threshold: float = 0.1,
    ratio_threshold: float = 0.1,
) -> AsymptoticReport:
    """Finite-prefix trend checks standing in for the asymptotic definitions.

    These are surrogates and say so in the output: the decay verdict
    compares first- and last-quarter means and the final value; condition
    (a) reports the max of dist/defect as the fitted O-constant; condition
    (b) asks the last-quarter mean of new_defect/defect to fall below
    ``ratio_threshold``.  Zero-defect indices are skipped and counted.
    """
    defects = [float(d) for d in defects]
    if len(defects) < 8:
        raise ValueError("need a prefix of at least 8 defects")
    quarter = len(defects) // 4
    first = sum(defects[:quarter]) / quarter
    last = sum(defects[-quarter:]) / quarter
    is_asymptotic = last < first / 4 and defects[-1] < final_threshold

    skipped = 0
    diminish_a = None
    a_constant = None
    if dists is not None:
        if len(dists) != len(defects):
            raise ValueError("dists must pair with defects")
        ratios = []
        for d, dd in zip(defects, dists):
            if d == 0:
                skipped += 1
            else:
                ratios.append(dd / d)
        if ratios:
            a_constant = max(ratios)
            diminish_a = True
        else:
            diminish_a = False

    diminish_b = None
    b_mean = None
    if new_defects is not None:
        if len(new_defects) != len(defects):
            raise ValueError("new_defects must pair with defects")
        tail_ratios = []
        for d, nd in zip(defects[-quarter:], new_defects[-quarter:]):
            if d == 0:
                skipped += 1
            else:
                tail_ratios.append(nd / d)
        if tail_ratios:
            b_mean = sum(tail_ratios) / len(tail_ratios)
            diminish_b = b_mean < ratio_threshold
        else:
            diminish_b = False

    return AsymptoticReport(
        surrogate=SURROGATE_NOTE,
        defects=tuple(defects),
        is_asymptotic=is_asymptotic,
        diminish_a=diminish_a,
        a_constant=a_constant,
        diminish_b=diminish_b,
        b_last_quarter_mean=b_mean,
        skipped_zero_defects=skipped,
    )

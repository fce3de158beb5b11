"""Defect-halving steps and the Cauchy iteration to an exact homomorphism.

One step replaces an assignment by one with less than ``halving_factor``
times the defect while moving less than ``M`` times the defect; iterating
certified steps drives the defect below ``final_tolerance`` while the total
movement stays below ``M * defect / (1 - halving_factor)`` (the geometric
series bound, which is ``2 * M * defect`` at the default factor 1/2).

The step search never claims success silently: every outcome records which
of the two bounds actually held, and a failed search raises
:class:`~stablab.errors.SearchError` carrying the best candidate found.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core, metrics
from .core import AlmostHom
from .errors import SearchError

STRATEGY_SNAP = "snap"
STRATEGY_DESCENT = "descent"


@dataclass(frozen=True)
class DiminishConfig:
    """Knobs for the halving step and the iteration around it.

    ``epsilon`` is the defect threshold below which steps are attempted at
    all; ``M`` is the movement constant; both are experiment inputs, not
    derived quantities.
    """

    M: float
    epsilon: float
    halving_factor: float = 0.5
    max_iterations: int = 64
    final_tolerance: float = 0.0
    strategy: str = STRATEGY_SNAP
    degree_cap: int = core.DEGREE_CAP
    generator_cap: int = core.GENERATOR_CAP
    descent_rounds: int = 200

    def __post_init__(self):
        if self.M <= 0:
            raise ValueError("M must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.halving_factor < 1.0:
            raise ValueError("halving_factor must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.final_tolerance < 0:
            raise ValueError("final_tolerance must be nonnegative")
        if self.strategy not in (STRATEGY_SNAP, STRATEGY_DESCENT):
            raise ValueError(f"unknown strategy '{self.strategy}'")

    @property
    def series_bound_factor(self) -> float:
        """Total-movement bound per unit of initial defect: M / (1 - q)."""
        return self.M / (1.0 - self.halving_factor)


@dataclass(frozen=True)
class StepOutcome:
    next: AlmostHom
    step_distance: float
    new_defect: float
    satisfied_halving: bool
    satisfied_movement: bool


@dataclass(frozen=True)
class StepRecord:
    defect: float
    step_distance: float


@dataclass(frozen=True)
class SolveTrace:
    initial_defect: float
    steps: tuple[StepRecord, ...]
    total_distance: float
    converged: bool
    certified: bool
    violations: tuple[tuple[int, str], ...]

    def to_json(self) -> dict:
        return {
            "initial_defect": self.initial_defect,
            "steps": [
                {"defect": s.defect, "step_distance": s.step_distance}
                for s in self.steps
            ],
            "total_distance": self.total_distance,
            "converged": self.converged,
            "certified": self.certified,
            "violations": [
                {"iteration": i, "bound": kind} for i, kind in self.violations
            ],
        }


@dataclass(frozen=True)
class CertificationReport:
    certified: bool
    violations: tuple[tuple[int, str], ...]
    series_bound: float

    def to_json(self) -> dict:
        return {
            "certified": self.certified,
            "series_bound": self.series_bound,
            "violations": [
                {"iteration": i, "bound": kind} for i, kind in self.violations
            ],
        }


def _step_violations(
    initial_defect: float, steps: tuple[StepRecord, ...], cfg: DiminishConfig
) -> list[tuple[int, str]]:
    """Strict per-step bounds: halving, movement, and geometric decay."""
    violations = []
    prev = initial_defect
    for j, step in enumerate(steps, start=1):
        if not step.defect < cfg.halving_factor * prev:
            violations.append((j, "halving"))
        if not step.step_distance < cfg.M * prev:
            violations.append((j, "movement"))
        if not step.defect < initial_defect * cfg.halving_factor**j:
            violations.append((j, "geometric"))
        prev = step.defect
    return violations


def certify_trace(trace: SolveTrace, cfg: DiminishConfig) -> CertificationReport:
    """Re-audit a trace from its recorded numbers alone.

    Checks every per-step bound, the triangle inequality between the total
    distance and the step distances, and (for nonempty traces) the
    cumulative movement bound ``series_bound_factor * initial_defect``.
    All bounds are strict.
    """
    violations = _step_violations(trace.initial_defect, trace.steps, cfg)
    if trace.steps:
        if not trace.total_distance < cfg.series_bound_factor * trace.initial_defect:
            violations.append((-1, "cumulative"))
        step_sum = sum(s.step_distance for s in trace.steps)
        if trace.total_distance > step_sum + 1e-12:
            violations.append((-1, "triangle"))
    return CertificationReport(
        certified=not violations,
        violations=tuple(violations),
        series_bound=cfg.series_bound_factor * trace.initial_defect,
    )


def _constrained_descent(
    phi: AlmostHom, initial_defect: float, cfg: DiminishConfig
) -> AlmostHom:
    """Greedy defect descent restricted to the ball dist(phi, .) < M*defect.

    Returns the best candidate found; the caller decides whether it meets
    the halving bound.
    """
    target = cfg.halving_factor * initial_defect
    radius = cfg.M * initial_defect
    symmetric = phi.descriptor.is_symmetric
    current = phi
    current_defect = initial_defect
    step = max(initial_defect, 1e-3)
    for _ in range(cfg.descent_rounds):
        if current_defect < target:
            return current
        best = None
        best_defect = current_defect
        for gen_index in range(phi.presentation.rank):
            if symmetric:
                candidates = core._sym_candidates(current, gen_index)
            else:
                base = current.assignment[gen_index].data
                candidates = (
                    metrics.GroupElement(
                        phi.descriptor, base @ metrics.unitary_exp(h, step)
                    )
                    for h in core._descent_directions(phi.descriptor.n)
                )
            for cand in candidates:
                trial = core._replace(current, gen_index, cand)
                if not core.dist(phi, trial) < radius:
                    continue
                d = core.defect(trial).defect
                if d < best_defect:
                    best_defect = d
                    best = trial
        if best is None:
            if symmetric or step < 1e-13:
                break
            step *= 0.5
            continue
        current, current_defect = best, best_defect
    return current


def diminish_step(
    phi: AlmostHom, cfg: DiminishConfig, rng: np.random.Generator | None = None
) -> StepOutcome:
    """One halving step: find psi with less defect, close to phi.

    Preconditions: ``final_tolerance < defect(phi) < epsilon``.  The snap
    strategy takes the nearest exact homomorphism from full enumeration; the
    descent strategy searches within the movement ball.  The returned
    outcome recomputes the defect and distance rather than trusting the
    strategy, and a candidate that misses either bound is raised as a
    :class:`SearchError` with the best outcome attached.
    """
    initial = core.defect(phi).defect
    if initial <= cfg.final_tolerance:
        raise ValueError("diminish_step needs defect above final_tolerance")
    if not initial < cfg.epsilon:
        raise ValueError(
            f"defect {initial} is not below the applicability threshold {cfg.epsilon}"
        )
    if cfg.strategy == STRATEGY_SNAP:
        psi = core.homdist_exact(phi, cfg.degree_cap, cfg.generator_cap).witness
    else:
        psi = _constrained_descent(phi, initial, cfg)
    step_distance = core.dist(phi, psi)
    new_defect = core.defect(psi).defect
    outcome = StepOutcome(
        next=psi,
        step_distance=step_distance,
        new_defect=new_defect,
        satisfied_halving=new_defect < cfg.halving_factor * initial,
        satisfied_movement=step_distance < cfg.M * initial,
    )
    if not (outcome.satisfied_halving and outcome.satisfied_movement):
        raise SearchError(
            "no candidate satisfied both diminishing bounds "
            f"(halving={outcome.satisfied_halving}, movement={outcome.satisfied_movement})",
            best=outcome,
        )
    return outcome


def iterate_to_homomorphism(
    phi: AlmostHom, cfg: DiminishConfig, rng: np.random.Generator | None = None
) -> tuple[AlmostHom, SolveTrace]:
    """Iterate halving steps until the defect falls to ``final_tolerance``.

    Returns the final assignment and a trace whose ``certified`` flag means
    every recorded step met the halving, movement, and geometric-decay
    bounds.  On step failure or iteration exhaustion the best iterate so far
    is returned with ``converged=False``.
    """
    initial = core.defect(phi).defect
    if not initial < cfg.epsilon:
        raise ValueError(
            f"defect {initial} is not below the applicability threshold {cfg.epsilon}"
        )
    current = phi
    current_defect = initial
    steps: list[StepRecord] = []
    converged = current_defect <= cfg.final_tolerance
    while not converged and len(steps) < cfg.max_iterations:
        try:
            outcome = diminish_step(current, cfg, rng)
        except SearchError:
            break
        steps.append(StepRecord(outcome.new_defect, outcome.step_distance))
        current = outcome.next
        current_defect = outcome.new_defect
        converged = current_defect <= cfg.final_tolerance
    total_distance = core.dist(phi, current) if steps else 0.0
    violations = _step_violations(initial, tuple(steps), cfg)
    trace = SolveTrace(
        initial_defect=initial,
        steps=tuple(steps),
        total_distance=total_distance,
        converged=converged,
        certified=not violations,
        violations=tuple(violations),
    )
    return current, trace

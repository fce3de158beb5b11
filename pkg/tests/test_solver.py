import numpy as np
import pytest

import stablab.core as sc
import stablab.metrics as sm
from stablab.errors import SearchError
from stablab.solver import (
    DiminishConfig,
    SolveTrace,
    StepRecord,
    certify_trace,
    diminish_step,
    iterate_to_homomorphism,
)
from stablab.words import parse_presentation

Z2 = parse_presentation("<a, b | [a,b]>")


def sym(n):
    return sm.MetricDescriptor("sym_hamming", n)


def hom_from_images(p, desc, *image_lists):
    return sc.AlmostHom(
        p, desc, tuple(sm.GroupElement(desc, np.array(imgs)) for imgs in image_lists)
    )


@pytest.fixture
def s3_example():
    return hom_from_images(Z2, sym(3), [1, 0, 2], [0, 2, 1])


class TestConfig:
    def test_defaults(self):
        cfg = DiminishConfig(M=1.0, epsilon=0.5)
        assert cfg.halving_factor == 0.5
        assert cfg.series_bound_factor == 2.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"M": 0.0, "epsilon": 1.0},
            {"M": 1.0, "epsilon": 0.0},
            {"M": 1.0, "epsilon": 1.0, "halving_factor": 1.0},
            {"M": 1.0, "epsilon": 1.0, "max_iterations": 0},
            {"M": 1.0, "epsilon": 1.0, "final_tolerance": -1e-3},
            {"M": 1.0, "epsilon": 1.0, "strategy": "anneal"},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            DiminishConfig(**kwargs)


class TestDiminishStep:
    def test_snap_on_s3_example(self, s3_example):
        cfg = DiminishConfig(M=1.0, epsilon=2.0)
        out = diminish_step(s3_example, cfg)
        assert out.step_distance == 2.0 / 3.0
        assert out.new_defect == 0.0
        assert out.satisfied_halving and out.satisfied_movement
        # the outcome recomputes rather than trusting the strategy
        assert sc.defect(out.next).defect == out.new_defect
        assert sc.dist(s3_example, out.next) == out.step_distance

    def test_movement_bound_failure_carries_best(self, s3_example):
        cfg = DiminishConfig(M=0.5, epsilon=2.0)
        with pytest.raises(SearchError) as err:
            diminish_step(s3_example, cfg)
        best = err.value.best
        assert best.step_distance == 2.0 / 3.0
        assert best.satisfied_halving and not best.satisfied_movement

    def test_exact_input_rejected(self):
        cycle = [1, 2, 0]
        exact = hom_from_images(Z2, sym(3), cycle, cycle)
        with pytest.raises(ValueError):
            diminish_step(exact, DiminishConfig(M=1.0, epsilon=1.0))

    def test_epsilon_precondition(self, s3_example):
        with pytest.raises(ValueError):
            diminish_step(s3_example, DiminishConfig(M=1.0, epsilon=0.5))

    def test_descent_strategy_finds_halving_step(self, s3_example):
        cfg = DiminishConfig(M=3.0, epsilon=2.0, strategy="descent")
        out = diminish_step(s3_example, cfg)
        assert out.new_defect < 0.5 * 1.0
        assert out.step_distance < 3.0


class TestIterate:
    def test_exact_input_trivial_trace(self):
        cycle = [1, 2, 0]
        exact = hom_from_images(Z2, sym(3), cycle, cycle)
        final, trace = iterate_to_homomorphism(exact, DiminishConfig(M=1.0, epsilon=1.0))
        assert final == exact
        assert trace.converged and trace.certified
        assert trace.steps == ()
        assert trace.total_distance == 0.0
        assert certify_trace(trace, DiminishConfig(M=1.0, epsilon=1.0)).certified

    def test_s3_example_one_snap_step(self, s3_example):
        cfg = DiminishConfig(M=1.0, epsilon=2.0)
        final, trace = iterate_to_homomorphism(s3_example, cfg)
        assert trace.converged and trace.certified
        assert len(trace.steps) == 1
        assert trace.total_distance == 2.0 / 3.0
        assert trace.total_distance < 2 * cfg.M * trace.initial_defect
        assert sc.defect(final).defect == 0.0

    def test_step_failure_returns_unconverged(self, s3_example):
        cfg = DiminishConfig(M=0.5, epsilon=2.0)
        final, trace = iterate_to_homomorphism(s3_example, cfg)
        assert not trace.converged
        assert trace.steps == ()
        assert sc.dist(final, s3_example) == 0.0

    def test_determinism(self, s3_example):
        cfg = DiminishConfig(M=2.0, epsilon=2.0, strategy="descent")
        t1 = iterate_to_homomorphism(s3_example, cfg, np.random.default_rng(5))[1]
        t2 = iterate_to_homomorphism(s3_example, cfg, np.random.default_rng(5))[1]
        assert t1.to_json() == t2.to_json()

    def test_random_sym_instances_certified(self):
        rng = np.random.default_rng(71)
        cfg = DiminishConfig(M=3.0, epsilon=2.0)
        checked = 0
        for n in (3, 4, 5, 6):
            desc = sym(n)
            for _ in range(10):
                phi = hom_from_images(Z2, desc, rng.permutation(n), rng.permutation(n))
                if sc.defect(phi).defect == 0.0:
                    continue
                final, trace = iterate_to_homomorphism(phi, cfg)
                assert trace.converged and trace.certified
                assert sc.defect(final).defect == 0.0
                assert trace.total_distance < 2 * cfg.M * trace.initial_defect
                # snap converges in exactly one step whenever the nearest
                # homomorphism lies inside the movement ball
                if sc.homdist_exact(phi).value < cfg.M * trace.initial_defect:
                    assert len(trace.steps) == 1
                checked += 1
        assert checked > 10

    def test_certified_trace_defects_strictly_decreasing(self, s3_example):
        cfg = DiminishConfig(M=3.0, epsilon=2.0, strategy="descent")
        _, trace = iterate_to_homomorphism(s3_example, cfg)
        if trace.certified:
            seq = [trace.initial_defect] + [s.defect for s in trace.steps]
            assert all(b < a for a, b in zip(seq, seq[1:]))

    def test_unitary_descent_iteration(self):
        desc = sm.MetricDescriptor("u_hs", 2)
        rng = np.random.default_rng(73)
        base = sm.random_element(desc, rng)
        exact = sc.AlmostHom(Z2, desc, (base, base))
        phi = sc.AlmostHom(
            Z2,
            desc,
            (exact.assignment[0], sm.sample_near(exact.assignment[1], 0.05, rng)),
        )
        initial = sc.defect(phi).defect
        assert initial > 1e-9
        cfg = DiminishConfig(
            M=40.0, epsilon=1.0, final_tolerance=1e-9, strategy="descent",
            max_iterations=40, descent_rounds=400,
        )
        final, trace = iterate_to_homomorphism(phi, cfg, np.random.default_rng(1))
        assert trace.converged
        assert sc.defect(final).defect <= 1e-9


class TestCertifyTrace:
    def test_empty_trace_vacuous(self):
        cfg = DiminishConfig(M=1.0, epsilon=1.0)
        trace = SolveTrace(0.0, (), 0.0, True, True, ())
        report = certify_trace(trace, cfg)
        assert report.certified and report.violations == ()

    def test_forged_movement_violation(self):
        cfg = DiminishConfig(M=1.0, epsilon=1.0)
        # one step moving exactly 2*M*defect: strictly too far
        trace = SolveTrace(0.5, (StepRecord(0.2, 1.0),), 1.0, True, True, ())
        report = certify_trace(trace, cfg)
        assert (1, "movement") in report.violations
        assert not report.certified

    def test_forged_halving_violation(self):
        cfg = DiminishConfig(M=4.0, epsilon=1.0)
        trace = SolveTrace(0.5, (StepRecord(0.25, 0.1),), 0.1, True, True, ())
        report = certify_trace(trace, cfg)
        # 0.25 is not strictly below 0.5 * 0.5
        assert (1, "halving") in report.violations

    def test_forged_geometric_violation(self):
        cfg = DiminishConfig(M=4.0, epsilon=1.0)
        steps = (StepRecord(0.2, 0.1), StepRecord(0.13, 0.1))
        # step 2 halves its predecessor (0.13 < 0.5*0.2 fails... 0.1 is the
        # geometric bound 0.5^2 * 0.5 = 0.125; 0.13 violates it)
        trace = SolveTrace(0.5, steps, 0.2, True, True, ())
        report = certify_trace(trace, cfg)
        assert (2, "geometric") in report.violations

    def test_cumulative_violation(self):
        cfg = DiminishConfig(M=1.0, epsilon=1.0)
        trace = SolveTrace(0.5, (StepRecord(0.2, 0.4),), 1.5, True, True, ())
        report = certify_trace(trace, cfg)
        assert (-1, "cumulative") in report.violations
        assert (-1, "triangle") in report.violations

    def test_geometric_series_bound_for_other_factors(self):
        # with halving factor q the series bound is M/(1-q) per unit defect
        cfg = DiminishConfig(M=1.0, epsilon=1.0, halving_factor=0.25)
        assert cfg.series_bound_factor == pytest.approx(4.0 / 3.0)
        good = SolveTrace(0.6, (StepRecord(0.1, 0.5),), 0.5, True, True, ())
        assert certify_trace(good, cfg).certified

    def test_real_trace_clean(self):
        phi = hom_from_images(Z2, sym(3), [1, 0, 2], [0, 2, 1])
        cfg = DiminishConfig(M=1.0, epsilon=2.0)
        _, trace = iterate_to_homomorphism(phi, cfg)
        report = certify_trace(trace, cfg)
        assert report.certified
        assert report.violations == ()

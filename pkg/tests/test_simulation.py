"""Tests for the data generators and Monte-Carlo experiments."""

from dataclasses import replace
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from cox_reduce.errors import ConfigError, GeneratorSelfTestError
from cox_reduce.hypercube import expected_companions, isolation_bound, isolation_union_bound
from cox_reduce.simulation import (
    EXPERIMENTS,
    Check,
    CovariateLaw,
    ExperimentReport,
    GenSpec,
    arrangement_companion_experiment,
    comparator_contrast_experiment,
    coverage_experiment,
    desk_spec,
    generate,
    generate_design,
    generator_self_test,
    mc_mean,
    noncentral_moment_experiment,
    null_acceptance_experiment,
    retention_probability_experiment,
    spurious_correlation_experiment,
)


class TestLaws:
    @pytest.mark.parametrize(
        "law, p",
        [
            (CovariateLaw(kind="gamma"), 5),
            (CovariateLaw.equicorrelated(1.0), 5),
            (CovariateLaw.equicorrelated(-0.5), 5),
            (CovariateLaw.block(0.5, 1), 5),
            (CovariateLaw.duplicated((0,)), 5),
            (CovariateLaw.duplicated((0, 1), (1, 2)), 5),
            (CovariateLaw.duplicated((0, 7)), 5),
        ],
    )
    def test_invalid_laws(self, law, p):
        """Test that malformed covariate laws are configuration errors."""
        with pytest.raises(ConfigError):
            law.validate(p)

    def test_describe(self):
        """Test the short law descriptions used in reports."""
        assert CovariateLaw.iid().describe() == "iid"
        assert CovariateLaw.block(0.9, 5).describe() == "block(0.9,5)"
        assert CovariateLaw.equicorrelated(0.3).describe() == "equicorrelated(0.3)"


class TestGenerate:
    def test_shapes_and_centring(self):
        """Test that generated data are centred and carry the truth."""
        spec = GenSpec.sparse(50, 8, (1, 4), (2.0, -1.0), 0.5, seed=3)
        y, x, truth = generate(spec)
        assert y.shape == (50,) and x.shape == (50, 8)
        assert abs(y.mean()) < 1e-12
        assert np.max(np.abs(x.mean(axis=0))) < 1e-12
        assert truth.support == (1, 4)
        assert truth.theta0[4] == -1.0

    def test_reproducible(self):
        """Test that one GenSpec always generates the same data."""
        spec = desk_spec(seed=5)
        first, second = generate(spec), generate(spec)
        np.testing.assert_array_equal(first[0], second[0])
        np.testing.assert_array_equal(first[1], second[1])

    def test_design_does_not_depend_on_noise_level(self):
        """Test that changing sigma keeps the covariates."""
        spec = GenSpec.sparse(40, 6, (0,), 1.0, 1.0, seed=2)
        np.testing.assert_array_equal(
            generate_design(spec), generate_design(replace(spec, sigma=3.0))
        )

    def test_noiseless_response(self):
        """Test that sigma = 0 gives y = X theta0 exactly."""
        spec = GenSpec.sparse(30, 5, (2,), 1.5, 0.0, seed=1)
        y, x, _ = generate(spec)
        np.testing.assert_array_equal(y, x @ np.array(spec.theta0))

    def test_duplicated_columns_are_copies(self):
        """Test that duplicated groups repeat their first column."""
        spec = GenSpec.sparse(30, 6, (0,), law=CovariateLaw.duplicated((1, 3, 5)), seed=4)
        x = generate_design(spec)
        np.testing.assert_array_equal(x[:, 3], x[:, 1])
        np.testing.assert_array_equal(x[:, 5], x[:, 1])

    def test_theta_length_checked(self):
        """Test that theta0 must have p entries."""
        with pytest.raises(ConfigError):
            GenSpec(n=10, p=3, theta0=(1.0,)).validate()

    def test_genspec_record(self):
        """Test the GenSpec audit record."""
        record = GenSpec.sparse(20, 4, (1,), 2.0, seed=9).to_record()
        assert record["support"] == [1] and record["values"] == [2.0]
        assert record["law"] == "iid"


class TestSelfTest:
    @pytest.mark.parametrize(
        "law",
        [
            CovariateLaw.iid(),
            CovariateLaw.equicorrelated(0.5),
            CovariateLaw.block(0.9, 5),
            CovariateLaw.duplicated((0, 1)),
        ],
    )
    def test_generator_passes(self, law):
        """Test that every law reproduces its target correlations."""
        report = generator_self_test(law, n=10_000, p=20, seed=0)
        assert report.passed, report.to_record()

    def test_gate_stops_experiments(self):
        """Test that a failing self-test stops a data-driven experiment."""
        failing = ExperimentReport(
            name="generator_self_test",
            replicates=1,
            seed=0,
            checks=(Check("linked_correlation", 0.0, 0.01, 0.5, "rule", False),),
        )
        with patch("cox_reduce.simulation.generator_self_test", return_value=failing):
            with pytest.raises(GeneratorSelfTestError):
                coverage_experiment(replicates=1)


def test_mc_mean():
    """Test the Monte-Carlo mean and standard error."""
    mean, se = mc_mean([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert mc_mean([7.0]) == (7.0, 0.0)


def test_experiment_registry():
    """Test that every experiment name maps to a callable."""
    assert set(EXPERIMENTS) == {
        "spurious",
        "companions",
        "retention",
        "coverage",
        "noncentral",
        "null",
        "contrast",
        "generator",
    }
    assert all(callable(f) for f in EXPERIMENTS.values())


class TestExperiments:
    def test_companions_match_closed_form(self):
        """Test that the simulated companion mean is near its closed form."""
        report = arrangement_companion_experiment(6, 5, 3, replicates=4000, seed=1)
        check = report.checks[0]
        assert check.target == pytest.approx(expected_companions(6, 5, 3))
        assert abs(check.estimate - check.target) <= 5 * check.se

    def test_isolation_above_bound(self):
        """Test that the isolation frequency is gated on the union bound and reports the stated one."""
        report = retention_probability_experiment(10, 10, replicates=2000, seed=2)
        check = report.checks[0]
        assert check.target == pytest.approx(isolation_union_bound(10, 10))
        assert report.parameters["stated_bound"] == pytest.approx(isolation_bound(10, 10))
        assert check.passed

    def test_coverage_floor_has_no_standard_error_allowance(self):
        """Test that coverage just below 0.92 fails even when three SE would excuse it."""
        spec = GenSpec.sparse(120, 12, (1, 5), 3.0, 1.0, seed=7)
        calls = []

        def contains(models):
            calls.append(models)
            return len(calls) > 1

        confidence_set = MagicMock(accepted=2)
        confidence_set.contains.side_effect = contains
        with patch("cox_reduce.simulation.build_confidence_set", return_value=confidence_set):
            report = coverage_experiment(spec, replicates=10, seed=7)
        check = report.checks[0]
        assert check.estimate < 0.92
        assert check.estimate >= check.target - 3 * check.se
        assert not check.passed
        assert not report.passed

    def test_null_acceptance_rate(self):
        """Test that a true submodel is accepted at about the nominal rate."""
        spec = GenSpec(n=100, p=5, theta0=(0.0,) * 5, seed=3)
        report = null_acceptance_experiment(spec, (0, 1, 2), (), 0.05, replicates=600, seed=3)
        check = report.checks[0]
        assert report.parameters["df"] == 3
        assert abs(check.estimate - 0.95) <= 5 * check.se

    def test_noncentral_mean(self):
        """Test that the mean statistic tracks df plus the noncentrality."""
        spec = GenSpec.sparse(80, 6, (0, 1), (1.0, 0.5), 1.0, seed=4)
        report = noncentral_moment_experiment(spec, (0, 1, 2, 3), (0,), replicates=600, seed=4)
        check = report.checks[0]
        assert report.parameters["df"] == 3
        assert report.parameters["noncentrality"] > 0
        assert abs(check.estimate - check.target) <= 5 * check.se

    def test_noncentral_requires_support_inside(self):
        """Test that the true support must lie in the comprehensive model."""
        spec = GenSpec.sparse(40, 6, (0, 5), 1.0, 1.0)
        with pytest.raises(ConfigError):
            noncentral_moment_experiment(spec, (0, 1), (0,), replicates=2)

    def test_spurious_correlation_small_grid(self):
        """Test that the spurious fit shrinks with n and stays within the scaled bound."""
        report = spurious_correlation_experiment(
            n_grid=(50, 200), p_noise=60, k=5, replicates=8, seed=5
        )
        assert report.passed, report.to_record()
        assert len(report.rows) == 16
        assert report.parameters["side"] == 4

    def test_spurious_rejects_bad_k(self):
        """Test that the fibre side parameter is range-checked."""
        with pytest.raises(ConfigError):
            spurious_correlation_experiment(k=1)

    def test_replicates_thread_invariant(self):
        """Test that replicate rows do not depend on the worker count."""
        spec = GenSpec(n=60, p=4, theta0=(0.0,) * 4, seed=6)
        serial = null_acceptance_experiment(spec, (0, 1), (), replicates=20, seed=6, threads=1)
        parallel = null_acceptance_experiment(spec, (0, 1), (), replicates=20, seed=6, threads=4)
        assert serial.rows == parallel.rows


@pytest.mark.slow
class TestPipelineExperiments:
    def test_coverage_rows(self):
        """Test that the coverage experiment records one row per replicate under a hard floor."""
        report = coverage_experiment(desk_spec(seed=1, signal=2.0), replicates=6, seed=1)
        assert len(report.rows) == 6
        assert report.to_record()["experiment"] == "coverage"
        assert report.checks[0].rule == "estimate >= 0.92"
        assert report.parameters["reduction"]["holdout_fraction"] == 0.3
        assert any(check.name == "truth_kept" for check in report.checks)

    @pytest.mark.timeout(1800)
    def test_coverage_reaches_nominal_floor(self):
        """Test that the true model is covered in at least 92% of replicates that kept it."""
        report = coverage_experiment(replicates=500, seed=0, threads=4)
        coverage = report.checks[0]
        kept = next(check for check in report.checks if check.name == "truth_kept")
        assert coverage.name == "coverage_given_kept"
        assert coverage.estimate >= 0.92
        assert kept.estimate >= 0.9
        assert report.passed, report.to_record()["checks"]

    def test_retention_with_pipeline(self):
        """Test that round-one retention and isolation both clear the union bound."""
        report = retention_probability_experiment(
            5, 6, replicates=200, seed=2, pipeline_replicates=4, n=150
        )
        assert len(report.rows) == 4
        assert [c.name for c in report.checks] == ["isolation_probability", "round1_retention"]
        assert report.passed, report.to_record()["checks"]

    def test_null_acceptance_at_desk_scale(self):
        """Test that the empty submodel of pure noise is accepted at the nominal rate."""
        spec = desk_spec(seed=0, signal=0.0)
        report = null_acceptance_experiment(spec, (10, 40, 70, 100), (), replicates=2000, seed=0)
        assert report.parameters["df"] == 4
        assert report.passed, report.to_record()["checks"]

    def test_contrast_directions(self):
        """Test that the LASSO misses a correlated signal more often than Cox reduction."""
        report = comparator_contrast_experiment(replicates=100, seed=0, threads=4)
        lasso, screened = report.checks
        assert [lasso.name, screened.name] == ["lasso_misses_more", "screened_sets_larger"]
        assert lasso.estimate > lasso.target
        assert screened.estimate >= 0.5
        assert report.passed, report.to_record()["checks"]
        assert len(report.rows) == 100

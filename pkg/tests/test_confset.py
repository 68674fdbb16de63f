"""Tests for likelihood-ratio confidence sets of models and their prediction intervals."""

import logging
import math

import numpy as np
import pytest
from scipy import stats

from cox_reduce.confset import (
    ConfidenceSetConfig,
    ModelConfidenceSet,
    ModelRecord,
    PredictionInterval,
    build_confidence_set,
    enumerate_submodels,
    interval_agreement,
    model_count,
    noncentrality,
    prediction_intervals,
)
from cox_reduce.errors import BudgetExceededError, ConfigError, DataError
from cox_reduce.regression_stats import SigmaMode


@pytest.fixture(scope="module")
def signal_data():
    rng = np.random.default_rng(12)
    x = rng.standard_normal((200, 6))
    x -= x.mean(axis=0)
    y = 2.0 * x[:, 0] + 1.5 * x[:, 1] + rng.standard_normal(200)
    return y - y.mean(), x


def _set(*members, comprehensive=(0, 1, 2)):
    return ModelConfidenceSet(
        comprehensive=comprehensive,
        theta=0.05,
        s_max=4,
        records=tuple(ModelRecord(m, 0.0, 0, True) for m in members),
        tested=len(members),
        sigma_mode=SigmaMode.known(1.0),
    )


class TestEnumeration:
    def test_model_count(self):
        """Test the number of subsets up to a size cap."""
        assert model_count(4, 4) == 16
        assert model_count(5, 2) == 16
        assert model_count(3, 0) == 1
        assert model_count(2, 10) == 4

    def test_order_is_size_then_lexicographic(self):
        """Test that submodels come out by size, then in lexicographic order."""
        assert list(enumerate_submodels([3, 1], 2)) == [(), (1,), (3,), (1, 3)]
        assert list(enumerate_submodels([5, 2, 9], 1)) == [(), (2,), (5,), (9,)]

    def test_config_validation(self):
        """Test that invalid levels and caps are configuration errors."""
        with pytest.raises(ConfigError):
            ConfidenceSetConfig(theta=1.5).validate()
        with pytest.raises(ConfigError):
            ConfidenceSetConfig(s_max=-1).validate()
        with pytest.raises(ConfigError):
            ConfidenceSetConfig(level=1.0).validate()
        assert "threads" not in ConfidenceSetConfig(threads=4).to_record()


class TestBuild:
    def test_true_model_accepted_and_omissions_rejected(self, signal_data):
        """Test that the true model is kept and models missing a signal are dropped."""
        y, x = signal_data
        mcs = build_confidence_set(y, x, (0, 1, 2, 3), theta=0.001, sigma=1.0)
        assert mcs.tested == 16
        assert mcs.contains((0, 1))
        assert mcs.contains((3, 2, 1, 0))
        for record in mcs.records:
            assert {0, 1} <= set(record.members)

    def test_keep_rejected(self, signal_data):
        """Test that rejected models can be kept for auditing."""
        y, x = signal_data
        mcs = build_confidence_set(y, x, (0, 1, 2), sigma=1.0, keep_rejected=True)
        assert mcs.accepted + len(mcs.rejected) == mcs.tested == 8
        assert all(not r.accepted for r in mcs.rejected)
        assert build_confidence_set(y, x, (0, 1, 2), sigma=1.0).rejected == ()

    def test_full_model_has_zero_df(self, signal_data):
        """Test that the comprehensive model itself is accepted with w = 0."""
        y, x = signal_data
        mcs = build_confidence_set(y, x, (0, 1, 4), sigma=1.0)
        full = [r for r in mcs.records if r.members == (0, 1, 4)]
        assert full and full[0].w == 0.0 and full[0].df == 0

    def test_rank_based_df(self, signal_data):
        """Test that a submodel spanning the comprehensive space gets df = 0."""
        y, x = signal_data
        x = x.copy()
        x[:, 2] = x[:, 0] + x[:, 1]
        mcs = build_confidence_set(y, x, (0, 1, 2), sigma=1.0)
        assert mcs.contains((0, 1))
        assert [r for r in mcs.records if r.members == (0, 1)][0].df == 0

    def test_empty_comprehensive(self, signal_data):
        """Test that an empty comprehensive model gives the empty model only."""
        y, x = signal_data
        mcs = build_confidence_set(y, x, (), sigma=1.0)
        assert mcs.tested == 1
        assert mcs.contains(())

    def test_budget(self):
        """Test that enumeration above the budget is refused before any fit."""
        x = np.random.default_rng(0).standard_normal((50, 30))
        with pytest.raises(BudgetExceededError) as exc_info:
            build_confidence_set(np.zeros(50), x, range(30), s_max=4, budget=10)
        assert exc_info.value.count == model_count(30, 4)

    def test_bad_indices(self, signal_data):
        """Test that comprehensive indices must name design columns."""
        y, x = signal_data
        with pytest.raises(ConfigError):
            build_confidence_set(y, x, (0, 17))

    def test_profile_mode_and_threads(self, signal_data):
        """Test that the profile statistic works and is thread-count invariant."""
        y, x = signal_data
        serial = build_confidence_set(y, x, (0, 1, 2, 3), sigma=None, threads=1)
        parallel = build_confidence_set(y, x, (0, 1, 2, 3), sigma=None, threads=3)
        assert serial.to_record() == parallel.to_record()
        assert serial.to_record()["sigma_mode"] == "estimate"


class TestIntervals:
    def test_known_sigma_interval(self, signal_data):
        """Test the normal-quantile interval against an explicit computation."""
        y, x = signal_data
        point = np.full(6, 0.3)
        (interval,) = prediction_intervals(_set((0, 1)), y, x, point, 0.95, SigmaMode.known(1.0))
        xm = x[:, :2]
        coef = np.linalg.solve(xm.T @ xm, xm.T @ y)
        leverage = point[:2] @ np.linalg.inv(xm.T @ xm) @ point[:2]
        assert interval.centre == pytest.approx(point[:2] @ coef, rel=1e-10)
        assert interval.half_width == pytest.approx(
            stats.norm.ppf(0.975) * math.sqrt(1 + leverage), rel=1e-9
        )
        assert interval.lower < interval.centre < interval.upper

    def test_estimated_sigma_interval(self, signal_data):
        """Test that estimate mode uses sigma-hat and a t quantile with n - |S| df."""
        y, x = signal_data
        point = np.zeros(6)
        (interval,) = prediction_intervals(_set((0,)), y, x, point, 0.9, SigmaMode.estimate())
        residual = y - x[:, :1] @ np.linalg.lstsq(x[:, :1], y, rcond=None)[0]
        scale = np.linalg.norm(residual) / math.sqrt(199)
        assert interval.half_width == pytest.approx(stats.t.ppf(0.95, 199) * scale, rel=1e-9)
        assert interval.centre == 0.0

    def test_empty_model_interval(self, signal_data):
        """Test that the empty model predicts zero with half-width q sigma."""
        y, x = signal_data
        (interval,) = prediction_intervals(_set(()), y, x, np.ones(6), 0.95, SigmaMode.known(2.0))
        assert interval.centre == 0.0
        assert interval.half_width == pytest.approx(2.0 * stats.norm.ppf(0.975), rel=1e-9)

    def test_order_is_model_then_query(self, signal_data):
        """Test that intervals are ordered by model, then by query point."""
        y, x = signal_data
        points = np.zeros((2, 6))
        intervals = prediction_intervals(_set((0,), (0, 1)), y, x, points, 0.95, SigmaMode.known(1.0))
        assert [(i.members, i.query) for i in intervals] == [
            ((0,), 0),
            ((0,), 1),
            ((0, 1), 0),
            ((0, 1), 1),
        ]

    def test_rank_deficient_model_is_omitted(self, signal_data, caplog):
        """Test that a collinear model gets no interval and a reason."""
        y, x = signal_data
        x = x.copy()
        x[:, 1] = x[:, 0]
        with caplog.at_level(logging.WARNING):
            (interval,) = prediction_intervals(_set((0, 1)), y, x, np.zeros(6))
        assert interval.centre is None and interval.lower is None
        assert interval.reason
        assert "No interval" in caplog.text

    def test_point_width_checked(self, signal_data):
        """Test that query points must carry every covariate."""
        y, x = signal_data
        with pytest.raises(DataError):
            prediction_intervals(_set((0,)), y, x, np.zeros(3))

    def test_agreement(self):
        """Test common-point detection and centre spread per query."""
        intervals = [
            PredictionInterval((0,), 0, 1.0, 1.0),
            PredictionInterval((1,), 0, 2.5, 1.0),
            PredictionInterval((0,), 1, 0.0, 0.5),
            PredictionInterval((1,), 1, 2.0, 0.5),
            PredictionInterval((0, 1), 1, None, None, "rank"),
        ]
        first, second = interval_agreement(intervals)
        assert first.common_point and first.centre_spread == pytest.approx(1.5)
        assert not second.common_point and second.models == 2


class TestNoncentrality:
    def test_values(self, signal_data):
        """Test the omitted-signal noncentrality for empty, partial and full submodels."""
        _, x = signal_data
        theta0 = np.array([2.0, 1.5, 0.0])
        xc = x[:, :3]
        signal = xc @ theta0
        assert noncentrality(xc, x[:, :0], theta0, 2.0) == pytest.approx(signal @ signal / 4.0)
        assert noncentrality(xc, x[:, :2], theta0, 1.0) == pytest.approx(0.0, abs=1e-8)
        partial = noncentrality(xc, x[:, :1], theta0, 1.0)
        assert 0.0 < partial < signal @ signal

    def test_rejects_bad_sigma(self, signal_data):
        """Test that sigma must be positive."""
        _, x = signal_data
        with pytest.raises(ConfigError):
            noncentrality(x[:, :2], x[:, :1], [1.0, 1.0], 0.0)

"""Unit tests for return statistics and activity rates."""

import math

import numpy as np
import pytest

from agentlab.core.errors import DataError
from agentlab.schemas.events import Action, FillRef
from agentlab.services.diagnostics import (
    acf,
    activity_summary,
    return_histogram,
    return_series,
    stylized_report,
)


def random_walk_log(log_factory, n_steps: int, seed: int = 0, run_id: int = 0):
    """Log whose mid moves by a Gaussian step every second."""
    rng = np.random.default_rng(seed)
    mids = 100.0 + np.cumsum(rng.normal(0, 0.02, n_steps))
    snapshots = [(10.0 * i, m - 0.01, m + 0.01) for i, m in enumerate(mids)]
    return log_factory(snapshots=snapshots, horizon=10.0 * n_steps, run_id=run_id)


def test_returns_skip_unquoted_points(log_factory):
    """Verify that a return with a one-sided end is dropped, not imputed."""
    log = log_factory(
        horizon=60.0,
        snapshots=[
            (0.0, 99.9, 100.1),
            (15.0, 100.4, 100.6),
            (25.0, 100.4, math.nan),
            (40.0, 100.0, 100.2),
        ],
    )
    series = return_series(log, resolution=1.0)
    assert series.returns.tolist() == pytest.approx([0.0, 0.5, 0.0])


def test_gaussian_returns_have_no_excess_kurtosis():
    """Verify the moment fit and kurtosis on a large Gaussian sample."""
    returns = np.random.default_rng(0).normal(0.0, 2.0, 100_000)
    histogram = return_histogram(returns, bins=50)
    assert histogram.excess_kurtosis == pytest.approx(0.0, abs=0.1)
    assert histogram.fit_std == pytest.approx(2.0, rel=0.01)
    assert histogram.counts.sum() == returns.size
    assert len(histogram.edges) == 51

    frame = histogram.to_frame()
    assert frame["gaussian_fit"].sum() == pytest.approx(returns.size, rel=0.01)


def test_outliers_land_in_edge_bins():
    """Verify that counts always sum to the sample size."""
    returns = np.random.default_rng(1).normal(size=500)
    returns[0] = 1e6
    histogram = return_histogram(returns, bins=10)
    assert histogram.counts.sum() == 500
    assert histogram.counts[-1] >= 1


def test_constant_returns_are_degenerate():
    """Verify the flag and the missing kurtosis of a zero-variance series."""
    histogram = return_histogram(np.zeros(200), bins=10)
    assert histogram.degenerate
    assert math.isnan(histogram.excess_kurtosis)
    assert histogram.counts.sum() == 200
    assert histogram.to_frame()["gaussian_fit"].isna().all()


def test_histogram_needs_enough_returns():
    """Verify the minimum sample size."""
    with pytest.raises(DataError):
        return_histogram(np.ones(99))


def test_acf_of_white_noise():
    """Verify ACF(0) = 1 and small higher lags for independent draws."""
    n = 10_000
    values = acf(np.random.default_rng(2).normal(size=n), max_lag=20)
    assert values[0] == pytest.approx(1.0)
    assert np.abs(values[1:]).max() < 4 / np.sqrt(n)


def test_acf_of_alternating_series():
    """Verify the sign of lag-one autocorrelation of a zigzag."""
    values = acf(np.tile([1.0, -1.0], 50), max_lag=2)
    assert values[1] < -0.9
    assert values[2] > 0.9
    with pytest.raises(DataError):
        acf(np.ones(3), max_lag=5)


def test_activity_of_empty_log(log_factory):
    """Verify zero rates without records."""
    summary = activity_summary(log_factory(horizon=36_000.0))
    assert summary.hours == 1.0
    assert summary.trades_per_hour == 0.0
    assert summary.orders_per_hour == {}


def test_activity_counts_trading_period_only(log_factory, record_factory):
    """Verify per-class submission and fill rates after t = 0."""
    records = [
        record_factory(-5.0, class_id=1),
        record_factory(1.0, class_id=1),
        record_factory(2.0, class_id=1, action=Action.SUBMIT_MARKET, fills=(FillRef(100, 1, 1),)),
        record_factory(3.0, class_id=2),
        record_factory(4.0, class_id=2, action=Action.CANCEL),
    ]
    summary = activity_summary(log_factory(records=records, horizon=72_000.0))
    assert summary.orders_per_hour == {1: 1.0, 2: 0.5}
    assert summary.trades_per_hour == 0.5


def test_stylized_report_skips_sparse_resolutions(log_factory):
    """Verify a pooled report where only the fine resolution has enough returns."""
    logs = [random_walk_log(log_factory, 600, seed=s, run_id=s) for s in range(2)]
    report = stylized_report(logs, resolutions=(1.0, 60.0), max_lag=5, bins=20)

    assert list(report.histograms) == [1.0]
    assert report.histograms[1.0].counts.sum() == 2 * 599
    assert report.return_acf[1.0][0] == pytest.approx(1.0)
    assert report.acf_frame(1.0).columns.tolist() == ["lag", "acf_returns", "acf_abs_returns"]
    assert report.summary_frame()["resolution_s"].tolist() == [1.0]


def test_stylized_report_errors(log_factory):
    """Verify that no logs, or logs too short for any resolution, are data errors."""
    with pytest.raises(DataError):
        stylized_report([])
    with pytest.raises(DataError):
        stylized_report([random_walk_log(log_factory, 50)], resolutions=(1.0,))

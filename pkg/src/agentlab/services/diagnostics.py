"""Stylized facts of the simulated mid-price and market activity rates."""

import logging
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats
from statsmodels.tsa.stattools import acf as sm_acf

from agentlab.core.errors import DataError
from agentlab.schemas.events import EventLog
from agentlab.services.scenario import mid_series

logger = logging.getLogger(__name__)

UNITS_PER_SECOND = 10
UNITS_PER_HOUR = 36_000
MIN_RETURNS = 100


@dataclass(frozen=True)
class ReturnSeries:
    run_id: int
    resolution: float  # seconds
    returns: np.ndarray


def return_series(log: EventLog, resolution: float) -> ReturnSeries:
    """
    Mid-price differences over consecutive grid points `resolution` seconds apart.

    A return whose start or end has no quote is dropped, not imputed.
    """
    step = resolution * UNITS_PER_SECOND
    mids = mid_series(log, step)
    times = mids.index.to_numpy()
    values = mids.to_numpy()
    adjacent = np.isclose(np.diff(times), step)
    return ReturnSeries(run_id=log.run_id, resolution=resolution, returns=np.diff(values)[adjacent])


@dataclass(frozen=True)
class ReturnHistogram:
    edges: np.ndarray
    counts: np.ndarray
    fit_mean: float
    fit_std: float
    excess_kurtosis: float
    degenerate: bool = False

    def to_frame(self) -> pd.DataFrame:
        """Bins with the Gaussian fit expressed as expected counts per bin."""
        centers = (self.edges[:-1] + self.edges[1:]) / 2
        width = np.diff(self.edges)
        if self.degenerate:
            fit = np.full(centers.shape, np.nan)
        else:
            fit = stats.norm.pdf(centers, self.fit_mean, self.fit_std) * width * self.counts.sum()
        return pd.DataFrame(
            {
                "left": self.edges[:-1],
                "right": self.edges[1:],
                "count": self.counts,
                "gaussian_fit": fit,
            }
        )


def return_histogram(returns: np.ndarray, bins: int = 100, width: float = 6.0) -> ReturnHistogram:
    """
    Histogram over mean +/- width * std with a moment-matched Gaussian.

    Values beyond the range land in the edge bins, so counts sum to the sample size.
    A zero-variance series is flagged degenerate and has no kurtosis.
    """
    returns = np.asarray(returns, dtype=float)
    if returns.size < MIN_RETURNS:
        raise DataError(f"Need at least {MIN_RETURNS} returns, got {returns.size}")

    mean, std = stats.norm.fit(returns)
    if std == 0:
        edges = np.linspace(mean - 0.5, mean + 0.5, bins + 1)
        counts, _ = np.histogram(returns, bins=edges)
        return ReturnHistogram(edges, counts, float(mean), 0.0, float("nan"), degenerate=True)

    edges = np.linspace(mean - width * std, mean + width * std, bins + 1)
    counts, _ = np.histogram(np.clip(returns, edges[0], edges[-1]), bins=edges)
    kurtosis = float(stats.kurtosis(returns, fisher=True, bias=False))
    return ReturnHistogram(edges, counts, float(mean), float(std), kurtosis)


def acf(series: np.ndarray, max_lag: int = 300) -> np.ndarray:
    """Sample autocorrelation with the biased (1/n) normalization, lags 0..max_lag."""
    series = np.asarray(series, dtype=float)
    if series.size <= max_lag:
        raise DataError(f"Series of {series.size} values is too short for lag {max_lag}")
    return sm_acf(series, nlags=max_lag, adjusted=False, fft=True)


@dataclass(frozen=True)
class ActivitySummary:
    hours: float
    trades_per_hour: float
    orders_per_hour: dict[int, float]


def activity_summary(log: EventLog) -> ActivitySummary:
    """Fills and per-class submissions per simulated hour, trading period only."""
    hours = log.horizon / UNITS_PER_HOUR
    orders = Counter(
        r.class_id for r in log.records if r.time >= 0 and r.action.is_submission
    )
    return ActivitySummary(
        hours=hours,
        trades_per_hour=log.n_fills / hours if hours > 0 else 0.0,
        orders_per_hour={c: n / hours for c, n in sorted(orders.items())},
    )


@dataclass(frozen=True)
class StylizedReport:
    histograms: dict[float, ReturnHistogram]
    return_acf: dict[float, np.ndarray]
    abs_return_acf: dict[float, np.ndarray]
    trades_per_hour: float
    orders_per_hour: dict[int, float]

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for resolution, histogram in self.histograms.items():
            acf_r = self.return_acf.get(resolution)
            acf_abs = self.abs_return_acf.get(resolution)
            rows.append(
                {
                    "resolution_s": resolution,
                    "fit_mean": histogram.fit_mean,
                    "fit_std": histogram.fit_std,
                    "excess_kurtosis": histogram.excess_kurtosis,
                    "acf_lag1": float(acf_r[1]) if acf_r is not None else np.nan,
                    "abs_acf_lag1": float(acf_abs[1]) if acf_abs is not None else np.nan,
                    "trades_per_hour": self.trades_per_hour,
                }
            )
        return pd.DataFrame(rows)

    def acf_frame(self, resolution: float) -> pd.DataFrame:
        values = self.return_acf[resolution]
        return pd.DataFrame(
            {
                "lag": np.arange(values.size),
                "acf_returns": values,
                "acf_abs_returns": self.abs_return_acf[resolution],
            }
        )


def stylized_report(
    logs: Sequence[EventLog],
    resolutions: Sequence[float] = (1.0, 60.0),
    max_lag: int = 300,
    bins: int = 100,
) -> StylizedReport:
    """
    Pooled return histograms and run-averaged autocorrelations per resolution.

    Resolutions with fewer than MIN_RETURNS pooled returns are skipped; runs too short
    for `max_lag` at a resolution are left out of that ACF.
    """
    if not logs:
        raise DataError("No event logs for stylized facts")
    histograms: dict[float, ReturnHistogram] = {}
    return_acf: dict[float, np.ndarray] = {}
    abs_acf: dict[float, np.ndarray] = {}

    for resolution in resolutions:
        series = [return_series(log, resolution).returns for log in logs]
        pooled = np.concatenate(series)
        if pooled.size < MIN_RETURNS:
            logger.warning(
                "Only %d returns at %gs resolution, skipping it", pooled.size, resolution
            )
            continue
        histograms[resolution] = return_histogram(pooled, bins=bins)
        usable = [s for s in series if s.size > max_lag and np.std(s) > 0]
        if usable:
            return_acf[resolution] = np.mean([acf(s, max_lag) for s in usable], axis=0)
            abs_acf[resolution] = np.mean([acf(np.abs(s), max_lag) for s in usable], axis=0)
        else:
            logger.warning("No run is long enough for an ACF at %gs resolution", resolution)

    if not histograms:
        raise DataError(f"Runs are too short for returns at any of {tuple(resolutions)} s")

    activity = [activity_summary(log) for log in logs]
    classes = sorted({c for a in activity for c in a.orders_per_hour})
    return StylizedReport(
        histograms=histograms,
        return_acf=return_acf,
        abs_return_acf=abs_acf,
        trades_per_hour=float(np.mean([a.trades_per_hour for a in activity])),
        orders_per_hour={
            c: float(np.mean([a.orders_per_hour.get(c, 0.0) for a in activity])) for c in classes
        },
    )

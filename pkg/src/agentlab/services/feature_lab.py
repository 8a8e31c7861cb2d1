"""Per-agent features, noise merging, dataset assembly, splits and scaling.

A sample is one (agent, run) pair. Only activity at t >= 0 counts; the burn-in is
invisible to every feature.
"""

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.preprocessing import StandardScaler

from agentlab.core.errors import DataError
from agentlab.schemas.events import Action, EventLog, EventLogRecord
from agentlab.schemas.features import (
    FEATURE_NAMES,
    DatasetSplit,
    FeatureVector,
    MergeMap,
    MergeMode,
    feature_view,
)
from agentlab.services.scenario import MidSeries, step_mid

logger = logging.getLogger(__name__)

# Lookback horizons of the trend features: 10^3, 2*10^3 and 4*10^3 seconds
TREND_HORIZONS: tuple[float, ...] = (10_000.0, 20_000.0, 40_000.0)

# Horizon of the canonical scenario the profit windows are expressed in
CANONICAL_HORIZON = 720_000.0


@dataclass(frozen=True)
class ProfitWindows:
    """Time windows of the profit features, in time units."""

    window: float = 20_000.0
    short: float = 80_000.0
    long: float = 160_000.0

    def scaled(self, factor: float) -> "ProfitWindows":
        return ProfitWindows(self.window * factor, self.short * factor, self.long * factor)


def _submissions(records: Sequence[EventLogRecord]) -> list[EventLogRecord]:
    return [r for r in records if r.action.is_submission]


# ---------------------- features ----------------------


def basic_features(
    records: Sequence[EventLogRecord],
    maker_fill_sizes: Sequence[int] = (),
) -> tuple[float, ...]:
    """
    The nine activity features of one sample.

    Args:
        records: The sample's records, time-sorted
        maker_fill_sizes: Sizes of fills where one of the sample's resting orders was hit

    Returns:
        Values in BASIC_FEATURES order; all zero when the sample sent no order
    """
    orders = _submissions(records)
    n_orders = len(orders)
    taker_sizes = [f.size for r in orders for f in r.fills]
    n_trades = len(taker_sizes) + len(maker_fill_sizes)
    total_volume = sum(taker_sizes) + sum(maker_fill_sizes)
    if n_orders == 0:
        return (0.0, 0.0, float(n_trades), 0.0, 0.0, 0.0, 0.0, 0.0, float(total_volume))

    submitted = {r.order_id for r in orders}
    cancelled = {
        r.order_id
        for r in records
        if r.action in (Action.CANCEL, Action.EXPIRE) and r.order_id in submitted
    }
    times = np.array([r.time for r in orders])
    sizes = np.array([r.size for r in orders], dtype=float)
    gaps = np.diff(times)

    return (
        sum(r.side > 0 for r in orders) / n_orders,
        len(cancelled) / n_orders,
        float(n_trades),
        sum(r.action is Action.SUBMIT_MARKET for r in orders) / n_orders,
        float(gaps.mean()) if gaps.size else 0.0,
        float(gaps.std()) if gaps.size else 0.0,
        float(sizes.mean()),
        float(sizes.std()),
        float(total_volume),
    )


def _order_arrays(records: Sequence[EventLogRecord]) -> tuple[np.ndarray, ...]:
    orders = [r for r in _submissions(records) if r.mid is not None]
    return (
        np.array([r.time for r in orders], dtype=float),
        np.array([r.mid for r in orders], dtype=float),
        np.array([r.side for r in orders], dtype=float),
        np.array([r.size for r in orders], dtype=float),
    )


def trend_features(
    records: Sequence[EventLogRecord],
    mids: MidSeries,
    horizons: Sequence[float] = TREND_HORIZONS,
) -> tuple[float, ...]:
    """
    Absolute and directed mid moves preceding each order, per lookback horizon.

    Orders whose lookback starts before t = 0 or hits an undefined mid are skipped;
    a horizon with no usable order yields 0.
    """
    times, current, direction, _ = _order_arrays(records)
    values: list[float] = []
    for horizon in horizons:
        past = times - horizon
        before = mids.at(past)
        usable = (past >= 0) & ~np.isnan(before) & ~np.isnan(current)
        if not usable.any():
            values += [0.0, 0.0]
            continue
        move = current[usable] - before[usable]
        values += [float(np.abs(move).mean()), float((move * direction[usable]).mean())]
    return tuple(values)


def fundamental_profit_features(
    records: Sequence[EventLogRecord],
    mids: MidSeries,
    event_times: Sequence[float],
    horizon: float,
    windows: ProfitWindows = ProfitWindows(),
) -> tuple[float, ...]:
    """
    Relative signed return after orders sent shortly after a fundamental event.

    Only the event times are used, never the fundamental values. Orders whose
    look-forward passes the horizon are skipped.
    """
    times, current, direction, sizes = _order_arrays(records)
    eligible = np.zeros(times.shape, dtype=bool)
    for t_event in event_times:
        eligible |= (times > t_event) & (times <= t_event + windows.window)

    def profits(forward: float) -> tuple[np.ndarray, np.ndarray]:
        ahead = times + forward
        later = mids.at(ahead)
        usable = eligible & (ahead <= horizon) & ~np.isnan(later) & (current > 0)
        profit = (later[usable] - current[usable]) / current[usable] * direction[usable]
        return profit, sizes[usable]

    short, short_sizes = profits(windows.short)
    long, _ = profits(windows.long)
    return (
        float(short.mean()) if short.size else 0.0,
        float(long.mean()) if long.size else 0.0,
        float(np.average(short, weights=short_sizes)) if short.size else 0.0,
    )


# ---------------------- noise merging ----------------------


def build_merge_map(
    agent_classes: dict[int, int],
    noise_classes: Iterable[int],
    mode: MergeMode,
    seed: int,
) -> MergeMap:
    """
    Seeded matching of non-noise agents with noise traders.

    HALF folds one noise trader into each non-noise agent and keeps the rest
    standalone; TWO_THIRDS folds two and keeps none.
    """
    noise_classes = set(noise_classes)
    noise = sorted(a for a, c in agent_classes.items() if c in noise_classes)
    others = sorted(a for a, c in agent_classes.items() if c not in noise_classes)

    if mode is MergeMode.NONE:
        return MergeMap(
            mode=mode, seed=seed, pairs={a: () for a in others}, standalone_noise=tuple(noise)
        )

    per_agent = 1 if mode is MergeMode.HALF else 2
    needed = per_agent * len(others)
    if needed > len(noise):
        raise DataError(
            f"{mode} merge needs {needed} noise traders, the population has {len(noise)}"
        )
    shuffled = [int(a) for a in np.random.default_rng(seed).permutation(noise)]
    pairs = {
        agent: tuple(shuffled[i * per_agent : (i + 1) * per_agent])
        for i, agent in enumerate(others)
    }
    leftover = tuple(sorted(shuffled[needed:]))
    if mode is MergeMode.TWO_THIRDS:
        if leftover:
            logger.warning("Dropping %d unmatched noise traders", len(leftover))
        leftover = ()
    return MergeMap(mode=mode, seed=seed, pairs=pairs, standalone_noise=leftover)


def sample_keys(merge_map: MergeMap) -> dict[int, int]:
    """agent_id -> id of the sample its activity belongs to."""
    keys = {a: a for a in merge_map.standalone_noise}
    for agent, partners in merge_map.pairs.items():
        keys[agent] = agent
        for partner in partners:
            keys[partner] = agent
    return keys


def apply_merge(log: EventLog, merge_map: MergeMap) -> dict[int, list[EventLogRecord]]:
    """
    Record streams of every sample of a run, interleaved by time.

    Only records at t >= 0 are kept. Samples without activity map to empty lists.
    """
    keys = sample_keys(merge_map)
    streams: dict[int, list[EventLogRecord]] = {key: [] for key in sorted(set(keys.values()))}
    for record in log.records:
        if record.time < 0:
            continue
        key = keys.get(record.agent_id)
        if key is not None:
            streams[key].append(record)
    # Records are appended in (time, seq) order already
    return streams


def maker_fills(log: EventLog, keys: dict[int, int]) -> dict[int, list[int]]:
    """Sizes of the fills each sample received as the resting side, t >= 0 only."""
    owner = {r.order_id: r.agent_id for r in log.records if r.action.is_submission}
    fills: dict[int, list[int]] = defaultdict(list)
    for record in log.records:
        if record.time < 0:
            continue
        for fill in record.fills:
            key = keys.get(owner.get(fill.maker_order_id, -1))
            if key is not None:
                fills[key].append(fill.size)
    return fills


# ---------------------- datasets ----------------------


def extract_run(
    log: EventLog,
    merge_map: MergeMap,
    windows: ProfitWindows = ProfitWindows(),
) -> list[FeatureVector]:
    """Feature vectors of every sample of one run."""
    keys = sample_keys(merge_map)
    streams = apply_merge(log, merge_map)
    received = maker_fills(log, keys)
    mids = step_mid(log, start=0.0)
    event_times = [b for b in log.fundamental_breakpoints if 0 < b <= log.horizon]

    vectors = []
    for key, records in streams.items():
        values = (
            basic_features(records, received.get(key, ()))
            + trend_features(records, mids)
            + fundamental_profit_features(records, mids, event_times, log.horizon, windows)
        )
        vectors.append(
            FeatureVector(
                run_id=log.run_id,
                agent_id=key,
                label=log.agent_classes[key],
                values=values,
                empty=not records,
            )
        )
    n_empty = sum(v.empty for v in vectors)
    if n_empty:
        logger.debug("Run %d: %d samples without activity", log.run_id, n_empty)
    return vectors


def build_dataset(
    logs: Sequence[EventLog],
    merge_map: MergeMap,
    windows: ProfitWindows | None = None,
    jobs: int | None = None,
) -> pd.DataFrame:
    """
    Labeled feature table over a batch of runs.

    Args:
        logs: Event logs of the batch
        merge_map: Noise-merge matching applied identically to every run
        windows: Profit windows; None scales the canonical ones to the run horizon
        jobs: Parallel workers (None uses all cores)

    Returns:
        One row per sample: run_id, agent_id, label, the 18 features and `empty`
    """
    if not logs:
        raise DataError("No event logs to extract features from")
    if windows is None:
        windows = ProfitWindows().scaled(logs[0].horizon / CANONICAL_HORIZON)

    n_jobs = (jobs or -1) if len(logs) > 1 else 1
    per_run = Parallel(n_jobs=n_jobs)(delayed(extract_run)(log, merge_map, windows) for log in logs)
    rows = [
        {
            "run_id": v.run_id,
            "agent_id": v.agent_id,
            "label": v.label,
            **v.as_dict(),
            "empty": v.empty,
        }
        for vectors in per_run
        for v in vectors
    ]
    frame = pd.DataFrame(rows, columns=["run_id", "agent_id", "label", *FEATURE_NAMES, "empty"])
    logger.info(
        "Dataset: %d samples, %d classes, merge=%s",
        len(frame),
        frame["label"].nunique(),
        merge_map.mode,
    )
    return frame


def dataset_matrix(frame: pd.DataFrame, n_features: int = 18) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) of a feature table restricted to the 9- or 18-feature view."""
    columns = list(feature_view(n_features))
    return frame[columns].to_numpy(dtype=float), frame["label"].to_numpy(dtype=int)


def split_dataset(
    labels: Sequence[int] | np.ndarray,
    fractions: tuple[float, float, float] = (0.6, 0.1, 0.3),
    seed: int = 0,
) -> DatasetSplit:
    """
    Stratified train/validation/test split over sample positions.

    Per class, round(f_train * n) samples go to train, round(f_val * n) to validation
    and the rest to test.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train: list[int] = []
    val: list[int] = []
    test: list[int] = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        if members.size < 3:
            raise DataError(f"Class {label} has {members.size} samples, at least 3 are needed")
        members = rng.permutation(members)
        n_train = math.floor(fractions[0] * members.size + 0.5)
        n_val = min(math.floor(fractions[1] * members.size + 0.5), members.size - n_train)
        train += members[:n_train].tolist()
        val += members[n_train : n_train + n_val].tolist()
        test += members[n_train + n_val :].tolist()
    return DatasetSplit(
        train=tuple(sorted(train)),
        val=tuple(sorted(val)),
        test=tuple(sorted(test)),
        seed=seed,
        fractions=fractions,
    )


def standardize(
    train: np.ndarray,
    *others: np.ndarray,
) -> tuple[list[np.ndarray], StandardScaler]:
    """
    Z-score every array with statistics of the training array only.

    Constant training features are centered and left unscaled.
    """
    if len(train) == 0:
        raise DataError("Cannot standardize with an empty training set")
    scaler = StandardScaler().fit(train)
    return [scaler.transform(train), *(scaler.transform(x) for x in others)], scaler

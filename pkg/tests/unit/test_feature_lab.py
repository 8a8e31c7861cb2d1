"""Unit tests for feature extraction, noise merging, splits and scaling."""

import numpy as np
import pytest

from agentlab.core.errors import DataError
from agentlab.schemas.events import Action, FillRef
from agentlab.schemas.features import BASIC_FEATURES, FEATURE_NAMES, MergeMap, MergeMode
from agentlab.services.agent_zoo import trend_expectation, trend_limit_action
from agentlab.services.feature_lab import (
    ProfitWindows,
    apply_merge,
    basic_features,
    build_dataset,
    build_merge_map,
    dataset_matrix,
    extract_run,
    fundamental_profit_features,
    maker_fills,
    sample_keys,
    split_dataset,
    standardize,
    trend_features,
)
from agentlab.services.scenario import MidSeries

BID, ASK = 1, -1


def mids(times, values) -> MidSeries:
    return MidSeries(times=np.asarray(times, dtype=float), mids=np.asarray(values, dtype=float))


# --- Basic features ---


def test_basic_features_hand_computed(record_factory):
    """Verify the nine activity features on a small hand-made stream."""
    records = [
        record_factory(0.0, action=Action.SUBMIT_LIMIT, side=BID, size=2, order_id=1),
        record_factory(
            10.0,
            action=Action.SUBMIT_MARKET,
            side=ASK,
            size=4,
            order_id=2,
            fills=(FillRef(100.0, 3, 9),),
        ),
        record_factory(30.0, action=Action.SUBMIT_LIMIT, side=BID, size=6, order_id=3),
        record_factory(40.0, action=Action.CANCEL, order_id=1),
        # Order 99 was submitted outside this sample
        record_factory(50.0, action=Action.EXPIRE, order_id=99),
    ]
    values = dict(zip(BASIC_FEATURES, basic_features(records, maker_fill_sizes=[1]), strict=True))

    assert values["buy_ratio"] == pytest.approx(2 / 3)
    assert values["cancel_ratio"] == pytest.approx(1 / 3)
    assert values["n_trades"] == 2
    assert values["market_ratio"] == pytest.approx(1 / 3)
    assert values["creation_time_mean"] == pytest.approx(15.0)
    assert values["creation_time_std"] == pytest.approx(5.0)
    assert values["order_size_mean"] == pytest.approx(4.0)
    assert values["order_size_std"] == pytest.approx(np.sqrt(8 / 3))
    assert values["total_volume"] == 4


def test_basic_features_without_orders():
    """Verify that a silent sample only carries its maker fills."""
    assert basic_features([], maker_fill_sizes=[5]) == (0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0)


def test_single_order_has_zero_creation_spread(record_factory):
    """Verify that one order gives zero inter-order statistics."""
    values = basic_features([record_factory(7.0, size=3)])
    assert values[4] == 0.0 and values[5] == 0.0
    assert values[7] == 0.0


# --- Trend features ---


def test_trend_features_hand_computed(record_factory):
    """Verify absolute and directed moves with a skipped long lookback."""
    series = mids([0.0, 15_000.0], [100.0, 101.0])
    records = [
        record_factory(12_000.0, side=ASK, mid=100.5),
        record_factory(20_000.0, side=BID, mid=102.0),
    ]
    short, dshort, med, dmed, long, dlong = trend_features(records, series)

    assert short == pytest.approx(1.25)
    assert dshort == pytest.approx(0.75)
    assert med == pytest.approx(2.0)
    assert dmed == pytest.approx(2.0)
    assert (long, dlong) == (0.0, 0.0)


def test_trend_features_ignore_orders_without_mid(record_factory):
    """Verify that orders sent on a one-sided book are skipped."""
    series = mids([0.0], [100.0])
    records = [record_factory(30_000.0, mid=None)]
    assert trend_features(records, series) == (0.0,) * 6


@pytest.mark.parametrize(
    ("weight", "expected"), [(1.0, 1.0), (0.5, 1.0), (-1.0, -1.0), (-0.5, -1.0)]
)
def test_directed_trend_separates_momentum_from_reversion(record_factory, weight, expected):
    """Verify the sign of the directed move for orders placed by the trend rule."""
    series = mids([0.0, 10_000.0, 20_000.0, 30_000.0], [100.0, 101.0, 100.5, 102.0])
    records = []
    for t in (10_000.0, 20_000.0, 30_000.0):
        current, before = float(series.at(t)), float(series.at(t - 10_000.0))
        expected_price = current + trend_expectation(weight, current, before, 0.0)
        side = trend_limit_action(expected_price, current)
        records.append(record_factory(t, side=int(side), mid=current))

    moved, directed = trend_features(records, series, horizons=(10_000.0,))
    assert moved == pytest.approx(1.0)
    assert directed == pytest.approx(expected)


# --- Profit features ---


def test_single_buy_profit(record_factory):
    """Verify the relative signed return of one buy after a fundamental event."""
    series = mids([0.0, 1500.0, 2000.0], [100.0, 101.0, 102.0])
    windows = ProfitWindows(window=100.0, short=500.0, long=1000.0)
    records = [
        record_factory(900.0, side=ASK, mid=100.0),  # before the event
        record_factory(1050.0, side=BID, size=10, mid=100.0),
        record_factory(1200.0, side=ASK, mid=100.0),  # after the window
    ]
    profit, profit_long, weighted = fundamental_profit_features(
        records, series, [1000.0], horizon=3000.0, windows=windows
    )
    assert profit == pytest.approx(0.01)
    assert profit_long == pytest.approx(0.02)
    assert weighted == pytest.approx(0.01)


def test_profit_look_forward_past_horizon_is_skipped(record_factory):
    """Verify zero profits when every look-forward leaves the run."""
    series = mids([0.0, 1500.0], [100.0, 101.0])
    windows = ProfitWindows(window=100.0, short=500.0, long=1000.0)
    records = [record_factory(1050.0, side=BID, mid=100.0)]
    assert fundamental_profit_features(records, series, [1000.0], 1400.0, windows) == (0.0,) * 3


def test_profit_windows_scale():
    """Verify proportional scaling of the profit windows."""
    scaled = ProfitWindows().scaled(0.1)
    assert (scaled.window, scaled.short, scaled.long) == pytest.approx((2000.0, 8000.0, 16000.0))


# --- Noise merging ---


def population(n_other: int = 4, n_noise: int = 10) -> dict[int, int]:
    classes = {a: 1 for a in range(n_other)}
    classes.update({a: 9 for a in range(n_other, n_other + n_noise)})
    return classes


@pytest.mark.parametrize(
    ("mode", "per_agent", "n_standalone"),
    [(MergeMode.NONE, 0, 10), (MergeMode.HALF, 1, 6), (MergeMode.TWO_THIRDS, 2, 0)],
)
def test_merge_map_counts(mode, per_agent, n_standalone):
    """Verify partners per agent and the standalone noise traders of each mode."""
    merge_map = build_merge_map(population(), {9}, mode, seed=3)
    assert sorted(merge_map.pairs) == [0, 1, 2, 3]
    assert all(len(p) == per_agent for p in merge_map.pairs.values())
    assert len(merge_map.standalone_noise) == n_standalone

    used = [a for p in merge_map.pairs.values() for a in p] + list(merge_map.standalone_noise)
    assert len(used) == len(set(used))
    assert set(used) <= set(range(4, 14))


def test_merge_map_is_seeded():
    """Verify the same seed gives the same matching."""
    a = build_merge_map(population(), {9}, MergeMode.HALF, seed=3)
    b = build_merge_map(population(), {9}, MergeMode.HALF, seed=3)
    assert a.pairs == b.pairs


def test_merge_needs_enough_noise():
    """Verify that an unsatisfiable matching is a data error."""
    with pytest.raises(DataError):
        build_merge_map(population(n_other=6), {9}, MergeMode.TWO_THIRDS, seed=0)


def test_apply_merge_interleaves_and_drops_burn_in(log_factory, record_factory):
    """Verify merged streams keep time order and ignore the burn-in."""
    merge_map = build_merge_map(population(1, 2), {9}, MergeMode.HALF, seed=0)
    partner = merge_map.pairs[0][0]
    log = log_factory(
        records=[
            record_factory(-5.0, agent_id=0, order_id=1),
            record_factory(1.0, agent_id=partner, order_id=2),
            record_factory(2.0, agent_id=0, order_id=3),
        ],
        agent_classes=population(1, 2),
    )
    streams = apply_merge(log, merge_map)
    assert [r.order_id for r in streams[0]] == [2, 3]
    assert sample_keys(merge_map)[partner] == 0
    assert streams[merge_map.standalone_noise[0]] == []


def test_two_thirds_merge_mixes_taker_with_limit_orders(log_factory, record_factory):
    """Verify that a taker folded with two noise traders no longer looks like a pure taker."""
    classes = {1: 4, 2: 15, 3: 15}
    records = [
        record_factory(1.0, agent_id=1, action=Action.SUBMIT_MARKET, order_id=1, class_id=4),
        record_factory(2.0, agent_id=2, order_id=2, class_id=15),
        record_factory(3.0, agent_id=1, action=Action.SUBMIT_MARKET, order_id=3, class_id=4),
        record_factory(4.0, agent_id=3, order_id=4, class_id=15),
    ]
    merge_map = build_merge_map(classes, [15], MergeMode.TWO_THIRDS, seed=5)
    assert sorted(merge_map.pairs[1]) == [2, 3]

    market_ratio = BASIC_FEATURES.index("market_ratio")
    alone_map = MergeMap(mode=MergeMode.NONE, seed=0, pairs={1: ()})
    alone = apply_merge(log_factory(records, classes), alone_map)
    merged = apply_merge(log_factory(records, classes), merge_map)
    assert basic_features(alone[1])[market_ratio] == 1.0
    assert basic_features(merged[1])[market_ratio] == pytest.approx(0.5)
    assert basic_features(merged[1])[market_ratio] < 1.0


def test_apply_merge_keeps_every_trading_record_once(log_factory, record_factory):
    """Verify that the merged streams hold exactly the records of keyed agents at t >= 0."""
    classes = population(2, 4)
    merge_map = build_merge_map(classes, {9}, MergeMode.HALF, seed=1)
    rng = np.random.default_rng(8)
    times = np.sort(rng.uniform(-50.0, 100.0, size=80))
    agents = rng.integers(-1, 6, size=80)
    log = log_factory(
        [
            record_factory(float(t), agent_id=int(a), order_id=i)
            for i, (t, a) in enumerate(zip(times, agents, strict=True))
        ],
        classes,
    )
    streams = apply_merge(log, merge_map)

    kept = sorted(r.order_id for s in streams.values() for r in s)
    expected = sorted(r.order_id for r in log.records if r.time >= 0 and r.agent_id >= 0)
    assert kept == expected
    assert all([r.time for r in s] == sorted(r.time for r in s) for s in streams.values())


def test_maker_fills_credit_resting_side(log_factory, record_factory):
    """Verify that fills after t = 0 count for the maker even if it quoted in the burn-in."""
    log = log_factory(
        records=[
            record_factory(-10.0, agent_id=0, order_id=5),
            record_factory(
                5.0,
                agent_id=1,
                action=Action.SUBMIT_MARKET,
                order_id=6,
                fills=(FillRef(100.0, 2, 5),),
            ),
        ],
        agent_classes={0: 1, 1: 2},
    )
    assert maker_fills(log, {0: 0, 1: 1}) == {0: [2]}


# --- Datasets ---


def test_extract_run_labels_and_empty_samples(log_factory, record_factory):
    """Verify one vector per sample labeled with the sample owner's class."""
    classes = {0: 1, 1: 2}
    log = log_factory(
        records=[record_factory(3.0, agent_id=0, order_id=1)],
        agent_classes=classes,
        snapshots=[(0.0, 99.9, 100.1)],
    )
    merge_map = build_merge_map(classes, set(), MergeMode.NONE, seed=0)
    vectors = {v.agent_id: v for v in extract_run(log, merge_map)}
    assert vectors[0].label == 1 and not vectors[0].empty
    assert vectors[1].empty
    assert vectors[1].values == (0.0,) * 18


def test_build_dataset_columns(log_factory, record_factory):
    """Verify the dataset layout and the feature views."""
    classes = {0: 1, 1: 2}
    merge_map = build_merge_map(classes, set(), MergeMode.NONE, seed=0)
    logs = [
        log_factory(records=[record_factory(3.0, agent_id=0)], agent_classes=classes, run_id=i)
        for i in range(2)
    ]
    frame = build_dataset(logs, merge_map, jobs=1)
    assert list(frame.columns) == ["run_id", "agent_id", "label", *FEATURE_NAMES, "empty"]
    assert len(frame) == 4

    X, y = dataset_matrix(frame, 9)
    assert X.shape == (4, 9)
    assert sorted(y.tolist()) == [1, 1, 2, 2]

    with pytest.raises(DataError):
        build_dataset([], merge_map)


# --- Splits and scaling ---


def test_stratified_split_sizes():
    """Verify per-class rounding and a disjoint cover of all rows."""
    labels = np.repeat([1, 2], 400)
    split = split_dataset(labels, (0.6, 0.1, 0.3), seed=4)
    assert (len(split.train), len(split.val), len(split.test)) == (480, 80, 240)
    assert sorted(split.train + split.val + split.test) == list(range(800))
    assert np.bincount(labels[list(split.val)]).tolist() == [0, 40, 40]


def test_split_rounds_half_up():
    """Verify round-half-up per class with the remainder in test."""
    split = split_dataset(np.ones(5, dtype=int), (0.5, 0.25, 0.25), seed=0)
    assert (len(split.train), len(split.val), len(split.test)) == (3, 1, 1)


def test_split_all_train():
    """Verify that (1, 0, 0) leaves validation and test empty."""
    split = split_dataset(np.repeat([1, 2], 5), (1.0, 0.0, 0.0), seed=0)
    assert len(split.train) == 10
    assert split.val == () and split.test == ()


def test_split_rejects_tiny_classes():
    """Verify that a class with fewer than three samples is a data error."""
    with pytest.raises(DataError):
        split_dataset([1, 1, 1, 2, 2], seed=0)


def test_standardize_uses_training_statistics():
    """Verify z-scoring with train mean and std, constant columns centered only."""
    train = np.array([[3.0, 1.0], [7.0, 1.0]])
    (train_z, other_z), scaler = standardize(train, np.array([[9.0, 4.0]]))
    assert train_z[:, 0].tolist() == pytest.approx([-1.0, 1.0])
    assert other_z.tolist() == pytest.approx([[2.0, 3.0]])
    assert scaler.mean_.tolist() == pytest.approx([5.0, 1.0])

    with pytest.raises(DataError):
        standardize(np.empty((0, 2)))


def test_standardize_inverts_exactly():
    """Verify that the fitted scaler maps every split back to its raw values."""
    rng = np.random.default_rng(4)
    train = np.column_stack([rng.normal(10.0, 3.0, size=(40, 3)), np.full(40, 5.0)])
    other = np.column_stack([rng.normal(-8.0, 2.0, size=(10, 3)), np.full(10, 7.0)])
    (train_z, other_z), scaler = standardize(train, other)
    np.testing.assert_allclose(scaler.inverse_transform(train_z), train, rtol=1e-12)
    np.testing.assert_allclose(scaler.inverse_transform(other_z), other, rtol=1e-12)

"""Unit tests for scenario loading, run assembly and seeded batches."""

import math

import numpy as np
import pytest

from agentlab.core.errors import ConfigurationError, DataError
from agentlab.schemas.agents import AgentSpec, FundamentalSchedule, MarketMakerParams, ScenarioSpec
from agentlab.services.scenario import (
    SEED_AGENT_ID,
    FundamentalPrice,
    agent_classes,
    build_agents,
    load_scenario,
    mid_series,
    run_batch,
    run_scenario,
    with_horizon,
)


def test_canonical_population():
    """Verify the packaged scenario's classes and head counts."""
    spec = load_scenario()
    assert len(spec.agents) == 15
    assert spec.n_agents == 1590
    noise = spec.noise_class_ids()
    assert sum(a.count for a in spec.agents if a.class_id not in noise) == 530
    assert spec.horizon == 720000
    assert spec.burn_in == 20000


def test_fundamental_is_right_continuous():
    """Verify values inside, at and outside the breakpoints."""
    fundamental = FundamentalPrice(FundamentalSchedule(), 720000.0)
    assert fundamental(100000.0) == 100.0
    assert fundamental(180000.0) == 70.0
    assert fundamental(200000.0) == 70.0
    assert fundamental(720000.0) == 70.0
    assert fundamental.event_times() == (180000.0, 360000.0, 540000.0)
    with pytest.raises(DataError):
        fundamental(-1.0)
    with pytest.raises(DataError):
        fundamental(720001.0)


def test_with_horizon_compresses_schedule():
    """Verify proportional scaling of the fundamental breakpoints."""
    spec = with_horizon(load_scenario(), 72000.0)
    assert spec.horizon == 72000.0
    assert spec.fundamental.breakpoints == pytest.approx([0.0, 18000.0, 36000.0, 54000.0])
    assert spec.fundamental.values == [100.0, 70.0, 100.0, 70.0]


def test_load_scenario_errors(tmp_path):
    """Verify unreadable and invalid scenario files raise ConfigurationError."""
    with pytest.raises(ConfigurationError):
        load_scenario(tmp_path / "missing.yaml")

    bad = tmp_path / "bad.yaml"
    bad.write_text("agents:\n  - class_id: 0\n    name: x\n    count: 1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_scenario(bad)


def test_agent_ids_follow_class_order(scenario):
    """Verify sequential agent ids in scenario class order."""
    classes = agent_classes(scenario)
    assert len(classes) == scenario.n_agents
    assert classes[0] == 1
    assert classes[scenario.n_agents - 1] == 5
    assert list(classes) == sorted(classes)


def test_spacing_must_be_tick_multiple(market):
    """Verify that a maker spacing off the price grid is refused."""
    spec = ScenarioSpec(
        agents=[
            AgentSpec(
                class_id=1,
                name="maker",
                count=1,
                params=MarketMakerParams(update_mean=10, depth=2, spacing=0.015, order_size=1),
            )
        ]
    )
    with pytest.raises(ConfigurationError):
        build_agents(spec, market, 0, FundamentalPrice(spec.fundamental, spec.horizon))


def test_zero_agent_run_is_empty():
    """Verify that an empty population yields an empty log without seed quotes."""
    log = run_scenario(ScenarioSpec(horizon=1000.0, burn_in=100.0), seed=1)
    assert log.records == []
    assert log.snapshot_times == [0.0]
    assert math.isnan(log.snapshot_bids[0])


def test_run_respects_burn_in_and_ordering(scenario_factory):
    """Verify burn-in membership, time ordering and an uncrossed book."""
    spec = scenario_factory(horizon=3000.0, burn_in=500.0)
    log = run_scenario(spec, seed=17)

    times = [r.time for r in log.records]
    assert times == sorted(times)
    assert times[0] >= -500.0 and times[-1] <= 3000.0
    assert {r.class_id for r in log.records if r.time < 0} <= {0, 1, 5}
    assert {r.agent_id for r in log.records if r.class_id == 0} == {SEED_AGENT_ID}
    assert {3, 4} <= {r.class_id for r in log.records}

    bids = np.asarray(log.snapshot_bids)
    asks = np.asarray(log.snapshot_asks)
    both = ~np.isnan(bids) & ~np.isnan(asks)
    assert (bids[both] < asks[both]).all()


def test_batches_are_reproducible_in_parallel(scenario_factory):
    """Verify identical logs from serial and parallel execution."""
    spec = scenario_factory(horizon=2000.0, burn_in=300.0)
    serial = run_batch(spec, n_runs=2, master_seed=99, jobs=1)
    parallel = run_batch(spec, n_runs=2, master_seed=99, jobs=2)

    assert [log.run_id for log in parallel] == [0, 1]
    for a, b in zip(serial, parallel, strict=True):
        assert a.seed == b.seed
        assert a.records == b.records
        assert a.snapshot_times == b.snapshot_times
    assert serial[0].records != serial[1].records


def test_batch_needs_a_run(scenario):
    """Verify that an empty batch is a configuration error."""
    with pytest.raises(ConfigurationError):
        run_batch(scenario, n_runs=0, master_seed=1)


def test_mid_series_samples_last_known_mid(log_factory):
    """Verify step sampling and dropped one-sided samples."""
    log = log_factory(
        horizon=60.0,
        snapshots=[(0.0, 99.9, 100.1), (25.0, 99.9, math.nan), (35.0, 100.0, 100.2)],
    )
    series = mid_series(log, resolution=10.0)
    assert list(series.index) == [0.0, 10.0, 20.0, 40.0, 50.0]
    assert series.to_list() == pytest.approx([100.0, 100.0, 100.0, 100.1, 100.1])

    with pytest.raises(ConfigurationError):
        mid_series(log, resolution=0.0)


def test_mid_series_agrees_with_snapshot_deltas(scenario_factory):
    """Verify that sampled mid changes add up the book's own mid changes in between."""
    log = run_scenario(scenario_factory(horizon=3000.0, burn_in=300.0), seed=3, run_id=0)
    times = np.asarray(log.snapshot_times)
    mids = (np.asarray(log.snapshot_bids) + np.asarray(log.snapshot_asks)) / 2
    deltas = np.diff(mids, prepend=np.nan)

    series = mid_series(log, resolution=10.0)
    compared = 0
    for start, end in zip(series.index[:-1], series.index[1:], strict=True):
        if end - start != 10.0:
            continue
        moved = deltas[(times > start) & (times <= end)].sum()
        if not np.isfinite(moved):
            continue
        np.testing.assert_allclose(series[end] - series[start], moved, atol=1e-9)
        compared += 1
    assert compared > 50

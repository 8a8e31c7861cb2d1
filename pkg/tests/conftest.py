"""Pytest configuration and fixtures."""

import itertools
from collections.abc import Sequence

import pytest

from agentlab.core.config import Settings
from agentlab.schemas.agents import (
    AgentSpec,
    FundamentalSchedule,
    MarketMakerParams,
    MarketTakerParams,
    NoiseTraderParams,
    ScenarioSpec,
    TrendTraderParams,
)
from agentlab.schemas.events import Action, EventLog, EventLogRecord, FillRef
from agentlab.services.artifact_store import ArtifactStore
from agentlab.services.market import Market
from agentlab.services.simulation_kernel import Kernel

# --- Builders ---


def make_record(
    time: float,
    agent_id: int = 0,
    action: Action = Action.SUBMIT_LIMIT,
    side: int = 1,
    size: int = 1,
    order_id: int = 1,
    price: float | None = 100.0,
    fills: tuple[FillRef, ...] = (),
    mid: float | None = 100.0,
    remaining: int = 0,
    class_id: int = 1,
    seq: int = 0,
) -> EventLogRecord:
    """Event log record with defaults for the fields a test does not care about."""
    return EventLogRecord(
        time=time,
        agent_id=agent_id,
        class_id=class_id,
        action=action,
        side=side,
        price=price,
        size=size,
        fills=fills,
        mid=mid,
        order_id=order_id,
        remaining=remaining,
        seq=seq,
    )


def make_log(
    records: Sequence[EventLogRecord] = (),
    agent_classes: dict[int, int] | None = None,
    horizon: float = 1000.0,
    snapshots: Sequence[tuple[float, float, float]] = (),
    breakpoints: tuple[float, ...] = (0.0,),
    run_id: int = 0,
) -> EventLog:
    """Event log from records and (time, bid, ask) snapshots."""
    return EventLog(
        run_id=run_id,
        seed=0,
        horizon=horizon,
        tick_size=0.01,
        agent_classes=agent_classes or {},
        fundamental_breakpoints=breakpoints,
        records=list(records),
        snapshot_times=[s[0] for s in snapshots],
        snapshot_bids=[s[1] for s in snapshots],
        snapshot_asks=[s[2] for s in snapshots],
    )


def small_scenario(horizon: float = 6000.0, burn_in: float = 1000.0) -> ScenarioSpec:
    """Every strategy family on a ten-minute horizon with short waiting times."""
    trend = dict(
        limit_mean=300.0,
        market_mean=400.0,
        noise_std=0.05,
        horizon=500.0,
        order_size_mean=5.0,
        order_size_std=1.0,
    )
    return ScenarioSpec(
        name="small",
        horizon=horizon,
        burn_in=burn_in,
        fundamental=FundamentalSchedule(
            breakpoints=[0.0, horizon / 4, horizon / 2, 3 * horizon / 4],
            values=[100.0, 99.0, 100.0, 99.0],
        ),
        agents=[
            AgentSpec(
                class_id=1,
                name="market_maker",
                count=3,
                params=MarketMakerParams(update_mean=200.0, depth=3, spacing=0.05, order_size=5),
            ),
            AgentSpec(
                class_id=2,
                name="market_taker",
                count=3,
                params=MarketTakerParams(
                    large_order_mean=1500.0,
                    exit_time_mean=300.0,
                    exit_time_std=30.0,
                    large_size=20,
                    chunk_mean=5.0,
                    chunk_std=1.0,
                ),
            ),
            AgentSpec(
                class_id=3,
                name="fundamentalist",
                count=3,
                params=TrendTraderParams(kind="fundamentalist", weight=0.5, **trend),
            ),
            AgentSpec(
                class_id=4,
                name="chartist",
                count=3,
                params=TrendTraderParams(kind="chartist", weight=1.0, **trend),
            ),
            AgentSpec(
                class_id=5,
                name="noise_trader",
                count=12,
                params=NoiseTraderParams(
                    limit_mean=150.0,
                    market_mean=600.0,
                    cancel_mean=300.0,
                    price_std=0.1,
                    order_size_mean=3.0,
                    order_size_std=1.0,
                ),
            ),
        ],
    )


# --- Fixtures ---


@pytest.fixture
def kernel():
    """Kernel with a short horizon starting at t = 0."""
    return Kernel(horizon=10_000.0)


@pytest.fixture
def market(kernel):
    """Market of a three-agent run, classes 1..3 by agent id."""
    log = make_log(agent_classes={0: 1, 1: 2, 2: 3}, horizon=kernel.clock.horizon)
    return Market(kernel.clock, log)


@pytest.fixture
def scenario():
    """Small all-families scenario."""
    return small_scenario()


@pytest.fixture
def store(tmp_path):
    """Artifact store rooted in a temporary directory."""
    return ArtifactStore(tmp_path / "artifacts")


@pytest.fixture
def settings(tmp_path):
    """Settings for a short desk run writing under tmp_path."""
    return Settings(
        out_dir=tmp_path / "artifacts",
        n_runs=3,
        master_seed=5,
        jobs=1,
        svm_grid="linear",
        k_values=[2, 3],
        k_range=(2, 6),
        acf_max_lag=5,
        histogram_bins=20,
        split_fractions=(0.6, 0.2, 0.2),
    )


@pytest.fixture
def record_factory():
    """Builder of single event log records."""
    return make_record


@pytest.fixture
def log_factory():
    """Builder of hand-made event logs."""
    return make_log


@pytest.fixture
def scenario_factory():
    """Builder of small scenarios with a chosen horizon."""
    return small_scenario


@pytest.fixture
def order_ids():
    """Fresh order id counter."""
    return itertools.count(1)

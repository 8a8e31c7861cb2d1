"""Scenario assembly, fundamental price, seeded batches and mid-price series."""

import bisect
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from joblib import Parallel, delayed
from pydantic import ValidationError

from agentlab.core.config import Settings
from agentlab.core.errors import ConfigurationError, DataError
from agentlab.schemas.agents import AgentKind, FundamentalSchedule, ScenarioSpec
from agentlab.schemas.events import EventLog
from agentlab.services.agent_zoo import (
    Chartist,
    Fundamentalist,
    MarketMaker,
    MarketTaker,
    NoiseTrader,
    TradingAgent,
)
from agentlab.services.market import Market
from agentlab.services.simulation_kernel import (
    EventKind,
    Kernel,
    SimEvent,
    derive_run_seed,
    substream,
)

logger = logging.getLogger(__name__)

# Owner of the bootstrap quotes; never a real agent
SEED_AGENT_ID = -1

# Classes active during the burn-in
BURN_IN_KINDS = frozenset({AgentKind.MARKET_MAKER, AgentKind.NOISE_TRADER})


def load_scenario(path: Path | None = None) -> ScenarioSpec:
    """
    Load and validate a scenario definition file.

    Args:
        path: YAML scenario file; None loads the packaged canonical scenario

    Returns:
        The validated scenario
    """
    try:
        if path is None:
            text = resources.files("agentlab.data").joinpath("canonical_scenario.yaml").read_text(
                encoding="utf-8"
            )
        else:
            text = Path(path).read_text(encoding="utf-8")
        raw = yaml.safe_load(text)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigurationError(f"Cannot read scenario {path}: {e}") from e

    try:
        return ScenarioSpec.model_validate(raw)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid scenario {path or 'canonical'}: {e}") from e


def with_horizon(spec: ScenarioSpec, horizon: float) -> ScenarioSpec:
    """Shorten or stretch a scenario, compressing the fundamental schedule proportionally."""
    if horizon == spec.horizon:
        return spec
    factor = horizon / spec.horizon
    schedule = FundamentalSchedule(
        breakpoints=[b * factor for b in spec.fundamental.breakpoints],
        values=list(spec.fundamental.values),
    )
    return spec.model_copy(update={"horizon": horizon, "fundamental": schedule})


def scenario_from_settings(settings: Settings) -> ScenarioSpec:
    """The scenario named by the settings with their market overrides applied."""
    spec = load_scenario(settings.scenario_file)
    spec = spec.model_copy(update={"burn_in": settings.burn_in, "tick_size": settings.tick_size})
    if settings.horizon is not None:
        spec = with_horizon(spec, settings.horizon)
    return spec


class FundamentalPrice:
    """Right-continuous piecewise-constant fundamental price over (0, horizon]."""

    def __init__(self, schedule: FundamentalSchedule, horizon: float):
        """
        Initialize the price path.

        Args:
            schedule: Breakpoints and the value holding from each breakpoint on
            horizon: Last valid time
        """
        self.breakpoints = list(schedule.breakpoints)
        self.values = list(schedule.values)
        self.horizon = horizon

    def __call__(self, t: float) -> float:
        return self.at(t)

    def at(self, t: float) -> float:
        if t < 0 or t > self.horizon:
            raise DataError(f"Fundamental price requested at {t}, outside [0, {self.horizon}]")
        return self.values[bisect.bisect_right(self.breakpoints, t) - 1]

    def event_times(self) -> tuple[float, ...]:
        """Jump times after the start; the only part of the schedule features may use."""
        return tuple(b for b in self.breakpoints if 0 < b <= self.horizon)


def agent_classes(spec: ScenarioSpec) -> dict[int, int]:
    """agent_id -> class_id; ids are assigned sequentially in scenario class order."""
    classes: dict[int, int] = {}
    next_id = 0
    for agent_spec in spec.agents:
        for _ in range(agent_spec.count):
            classes[next_id] = agent_spec.class_id
            next_id += 1
    return classes


def build_agents(
    spec: ScenarioSpec,
    market: Market,
    run_seed: int,
    fundamental: FundamentalPrice,
) -> list[tuple[TradingAgent, AgentKind]]:
    """
    Instantiate the population of one run.

    Only fundamentalists receive the fundamental price accessor.
    """
    agents: list[tuple[TradingAgent, AgentKind]] = []
    agent_id = 0
    for agent_spec in spec.agents:
        params = agent_spec.params
        if params.kind is AgentKind.MARKET_MAKER:
            spacing = market.to_ticks(params.spacing)
            if spacing < 1 or abs(spacing * spec.tick_size - params.spacing) > 1e-9:
                raise ConfigurationError(
                    f"Class {agent_spec.class_id}: spacing {params.spacing} is not a tick multiple"
                )

        for _ in range(agent_spec.count):
            rng = substream(run_seed, agent_id)
            args = (agent_id, agent_spec.class_id, market, rng, params)
            match params.kind:
                case AgentKind.MARKET_MAKER:
                    agent: TradingAgent = MarketMaker(*args)
                case AgentKind.MARKET_TAKER:
                    agent = MarketTaker(*args)
                case AgentKind.CHARTIST:
                    agent = Chartist(*args)
                case AgentKind.FUNDAMENTALIST:
                    agent = Fundamentalist(*args, fundamental_at=fundamental)
                case AgentKind.NOISE_TRADER:
                    agent = NoiseTrader(*args)
            agents.append((agent, params.kind))
            agent_id += 1
    return agents


def run_scenario(spec: ScenarioSpec, seed: int, run_id: int = 0) -> EventLog:
    """
    Simulate one run: burn-in from -burn_in to 0, then trading up to the horizon.

    Args:
        spec: Validated scenario
        seed: Run seed; agent streams derive from it and the agent id
        run_id: Index of the run inside its batch

    Returns:
        The run's event log and top-of-book history
    """
    kernel = Kernel(horizon=spec.horizon, start_time=-spec.burn_in)
    log = EventLog(
        run_id=run_id,
        seed=seed,
        horizon=spec.horizon,
        tick_size=spec.tick_size,
        agent_classes=agent_classes(spec),
        fundamental_breakpoints=tuple(spec.fundamental.breakpoints),
    )
    market = Market(kernel.clock, log)
    fundamental = FundamentalPrice(spec.fundamental, spec.horizon)
    kernel.on(EventKind.ORDER_EXPIRY, market.expire)
    kernel.on(
        EventKind.FUNDAMENTAL_STEP,
        lambda event: logger.debug("Fundamental price -> %.2f at %.0f", event.value, event.time),
    )

    agents = build_agents(spec, market, seed, fundamental)
    if agents:
        market.seed_quotes(
            SEED_AGENT_ID,
            market.to_ticks(spec.initial_bid),
            market.to_ticks(spec.initial_ask),
            spec.initial_size,
        )
    for agent, kind in agents:
        kernel.add_agent(agent)
        agent.start(kernel, -spec.burn_in if kind in BURN_IN_KINDS else 0.0)
    for t in fundamental.event_times():
        kernel.schedule(SimEvent(time=t, kind=EventKind.FUNDAMENTAL_STEP, value=fundamental.at(t)))

    kernel.run(until=0.0)
    # Anchor the trading-period mid history at t = 0
    market.record_snapshot()
    kernel.run()

    logger.info(
        "Run %d finished: %d events, %d records, %d fills",
        run_id,
        kernel.dispatched,
        len(log.records),
        log.n_fills,
    )
    return log


def run_batch(
    spec: ScenarioSpec,
    n_runs: int,
    master_seed: int,
    jobs: int | None = None,
) -> list[EventLog]:
    """
    Run independent seeded simulations, in parallel when jobs allows it.

    The result order is the run index order, whatever the completion order.
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be at least 1, got {n_runs}")
    seeds = [derive_run_seed(master_seed, i) for i in range(n_runs)]
    logger.info("Running %d runs of %s (%d agents)", n_runs, spec.name, spec.n_agents)
    n_jobs = (jobs or -1) if n_runs > 1 else 1
    return Parallel(n_jobs=n_jobs)(
        delayed(run_scenario)(spec, seed, i) for i, seed in enumerate(seeds)
    )


# ---------------------- mid-price series ----------------------


@dataclass(frozen=True)
class MidSeries:
    """Step function of the mid-price; NaN where the book was one-sided."""

    times: np.ndarray
    mids: np.ndarray

    def at(self, t: np.ndarray | float) -> np.ndarray:
        """Last known mid at or before each time; NaN before the first snapshot."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        if not len(self.mids):
            return np.full(t.shape, np.nan)
        return np.where(idx >= 0, self.mids[np.maximum(idx, 0)], np.nan)


def step_mid(log: EventLog, start: float = 0.0) -> MidSeries:
    """Mid-price step function built from the snapshots taken at or after `start`."""
    times = np.asarray(log.snapshot_times, dtype=float)
    bids = np.asarray(log.snapshot_bids, dtype=float)
    asks = np.asarray(log.snapshot_asks, dtype=float)
    mids = (bids + asks) / 2
    keep = times >= start
    return MidSeries(times=times[keep], mids=mids[keep])


def mid_series(
    log: EventLog,
    resolution: float,
    start: float = 0.0,
    end: float | None = None,
) -> pd.Series:
    """
    Sample the last known mid at multiples of `resolution`.

    Args:
        log: Event log with its snapshot history
        resolution: Sampling step in time units (10 = 1 s)
        start: First sample time
        end: Exclusive end; defaults to the horizon

    Returns:
        Series indexed by sample time; samples without a defined mid are omitted
    """
    if resolution <= 0:
        raise ConfigurationError(f"resolution must be positive, got {resolution}")
    end = log.horizon if end is None else end
    grid = np.arange(start, end, resolution)
    values = step_mid(log, start=-np.inf).at(grid)
    series = pd.Series(values, index=pd.Index(grid, name="time"), name="mid")
    return series.dropna()

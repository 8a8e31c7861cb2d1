"""Agent parameter and scenario schemas.

All durations are in simulation time units (0.1 s) and all "rates" of the scenario
file are mean waiting times between events.
"""

from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, Field, model_validator


class AgentKind(StrEnum):
    MARKET_MAKER = "market_maker"
    MARKET_TAKER = "market_taker"
    FUNDAMENTALIST = "fundamentalist"
    CHARTIST = "chartist"
    NOISE_TRADER = "noise_trader"


class MarketMakerParams(BaseModel):
    """Ladder quoting: K+1 rungs per side spaced q apart."""

    kind: Literal[AgentKind.MARKET_MAKER] = AgentKind.MARKET_MAKER
    update_mean: float = Field(..., gt=0, description="Mean time between ladder rebuilds")
    depth: int = Field(..., ge=1, description="K: rungs beyond the best quote")
    spacing: float = Field(..., gt=0, description="q: rung spacing in currency units")
    order_size: int = Field(..., ge=1, description="Shares per rung")


class MarketTakerParams(BaseModel):
    """Large parent orders sliced into market-order chunks."""

    kind: Literal[AgentKind.MARKET_TAKER] = AgentKind.MARKET_TAKER
    large_order_mean: float = Field(..., gt=0, description="Mean wait between parent orders")
    exit_time_mean: float = Field(..., gt=0, description="Mean execution window")
    exit_time_std: float = Field(..., ge=0, description="Execution window std")
    large_size: int = Field(..., ge=1, description="Parent order size in shares")
    chunk_mean: float = Field(..., ge=1, description="Mean chunk size")
    chunk_std: float = Field(..., ge=0, description="Chunk size std")

    @model_validator(mode="after")
    def _chunk_fits(self) -> "MarketTakerParams":
        if self.large_size < self.chunk_mean:
            raise ValueError("large_size must be at least chunk_mean")
        return self


class TrendTraderParams(BaseModel):
    """Shared by chartists (signed weight) and fundamentalists (positive weight)."""

    kind: Literal[AgentKind.CHARTIST, AgentKind.FUNDAMENTALIST]
    weight: float = Field(..., description="w: chartist sign sets momentum vs reversion")
    limit_mean: float = Field(..., gt=0, description="Mean wait between limit-order wakeups")
    market_mean: float = Field(..., gt=0, description="Mean wait between market-order wakeups")
    noise_std: float = Field(..., ge=0, description="sigma of the expectation noise")
    horizon: float = Field(..., gt=0, description="Prediction horizon and limit-order lifetime")
    order_size_mean: float = Field(..., gt=0)
    order_size_std: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _fundamentalist_weight(self) -> "TrendTraderParams":
        if self.kind is AgentKind.FUNDAMENTALIST and self.weight <= 0:
            raise ValueError("fundamentalist weight must be positive")
        return self


class NoiseTraderParams(BaseModel):
    kind: Literal[AgentKind.NOISE_TRADER] = AgentKind.NOISE_TRADER
    limit_mean: float = Field(..., gt=0)
    market_mean: float = Field(..., gt=0)
    cancel_mean: float = Field(..., gt=0)
    price_std: float = Field(..., ge=0, description="Limit price std around the mid")
    order_size_mean: float = Field(..., gt=0)
    order_size_std: float = Field(..., ge=0)


AgentParams = Annotated[
    MarketMakerParams | MarketTakerParams | TrendTraderParams | NoiseTraderParams,
    Field(discriminator="kind"),
]


class AgentSpec(BaseModel):
    """One agent class of the scenario."""

    class_id: int = Field(..., ge=1)
    name: str
    count: int = Field(..., ge=0)
    params: AgentParams


class FundamentalSchedule(BaseModel):
    """Piecewise-constant fundamental price; value jumps at each breakpoint."""

    breakpoints: list[float] = Field(default=[0.0, 180000.0, 360000.0, 540000.0])
    values: list[float] = Field(default=[100.0, 70.0, 100.0, 70.0])

    @model_validator(mode="after")
    def _aligned(self) -> "FundamentalSchedule":
        if len(self.breakpoints) != len(self.values) or not self.breakpoints:
            raise ValueError("breakpoints and values must have the same non-zero length")
        if self.breakpoints[0] != 0 or sorted(self.breakpoints) != self.breakpoints:
            raise ValueError("breakpoints must start at 0 and increase")
        return self


class ScenarioSpec(BaseModel):
    """A full population plus market settings."""

    name: str = "canonical"
    horizon: float = Field(default=720000.0, gt=0)
    burn_in: float = Field(default=20000.0, ge=0)
    tick_size: float = Field(default=0.01, gt=0)
    initial_bid: float = Field(default=99.95, gt=0)
    initial_ask: float = Field(default=100.05, gt=0)
    initial_size: int = Field(default=5, ge=1)
    fundamental: FundamentalSchedule = Field(default_factory=FundamentalSchedule)
    agents: list[AgentSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_classes(self) -> "ScenarioSpec":
        ids = [spec.class_id for spec in self.agents]
        if len(ids) != len(set(ids)):
            raise ValueError("class ids must be unique")
        return self

    @property
    def n_agents(self) -> int:
        return sum(spec.count for spec in self.agents)

    def class_names(self) -> dict[int, str]:
        return {spec.class_id: spec.name for spec in self.agents}

    def noise_class_ids(self) -> set[int]:
        return {
            spec.class_id
            for spec in self.agents
            if spec.params.kind is AgentKind.NOISE_TRADER
        }

"""Feature and dataset schemas."""

from dataclasses import dataclass, field
from enum import StrEnum

BASIC_FEATURES: tuple[str, ...] = (
    "buy_ratio",
    "cancel_ratio",
    "n_trades",
    "market_ratio",
    "creation_time_mean",
    "creation_time_std",
    "order_size_mean",
    "order_size_std",
    "total_volume",
)

TREND_FEATURES: tuple[str, ...] = (
    "trend_short",
    "dtrend_short",
    "trend_med",
    "dtrend_med",
    "trend_long",
    "dtrend_long",
)

PROFIT_FEATURES: tuple[str, ...] = (
    "fund_profit",
    "fund_profit_long",
    "fund_profit_weighted",
)

FEATURE_NAMES: tuple[str, ...] = BASIC_FEATURES + TREND_FEATURES + PROFIT_FEATURES


class MergeMode(StrEnum):
    """How noise-trader activity is folded into the other agents' samples."""

    NONE = "none"
    HALF = "half"
    TWO_THIRDS = "twothirds"


def feature_view(n_features: int) -> tuple[str, ...]:
    """Column names of the 9- or 18-feature view."""
    if n_features == 9:
        return BASIC_FEATURES
    if n_features == 18:
        return FEATURE_NAMES
    raise ValueError(f"Unsupported feature view: {n_features}")


@dataclass(frozen=True, slots=True)
class FeatureVector:
    """Features of one (agent, run) sample."""

    run_id: int
    agent_id: int
    label: int
    values: tuple[float, ...]
    empty: bool = False

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, self.values, strict=True))


@dataclass(frozen=True, slots=True)
class MergeMap:
    """Non-noise agent id -> noise trader ids folded into its sample."""

    mode: MergeMode
    seed: int
    pairs: dict[int, tuple[int, ...]] = field(default_factory=dict)
    standalone_noise: tuple[int, ...] = ()


@dataclass(frozen=True, slots=True)
class DatasetSplit:
    """Row positions of the train/validation/test partitions.

    On disk the partitions are stored as (run_id, agent_id) pairs, so the
    positions are only meaningful against the frame they were read with.
    """

    train: tuple[int, ...]
    val: tuple[int, ...]
    test: tuple[int, ...]
    seed: int
    fractions: tuple[float, float, float]

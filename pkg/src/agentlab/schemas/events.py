"""Event log contracts: what the market records for every agent action."""

from dataclasses import dataclass, field
from enum import StrEnum

EVENT_LOG_SCHEMA_VERSION = 1

# Stable column order of persisted event logs; new columns are only ever appended.
EVENT_LOG_COLUMNS: tuple[str, ...] = (
    "time",
    "agent_id",
    "class_id",
    "action",
    "side",
    "price",
    "size",
    "fills",
    "mid",
    "order_id",
    "remaining",
    "seq",
)


class Action(StrEnum):
    SUBMIT_LIMIT = "submit_limit"
    SUBMIT_MARKET = "submit_market"
    CANCEL = "cancel"
    EXPIRE = "expire"

    @property
    def is_submission(self) -> bool:
        return self in (Action.SUBMIT_LIMIT, Action.SUBMIT_MARKET)


@dataclass(frozen=True, slots=True)
class FillRef:
    """A fill as seen from the taker's record; the maker is found via maker_order_id."""

    price: float
    size: int
    maker_order_id: int


@dataclass(frozen=True, slots=True)
class EventLogRecord:
    """
    One timestamped agent action with its outcome.

    For submissions `remaining` is the size left after matching (rested for limits,
    discarded for market orders); for cancellations it is the size removed.
    Prices and mid are in currency units; mid is the mid-price the agent saw when acting.
    """

    time: float
    agent_id: int
    class_id: int
    action: Action
    side: int
    price: float | None
    size: int
    fills: tuple[FillRef, ...]
    mid: float | None
    order_id: int
    remaining: int
    seq: int


@dataclass(slots=True)
class EventLog:
    """Everything one run produced: action records plus the top-of-book history."""

    run_id: int
    seed: int
    horizon: float
    tick_size: float
    agent_classes: dict[int, int]
    fundamental_breakpoints: tuple[float, ...]
    records: list[EventLogRecord] = field(default_factory=list)
    snapshot_times: list[float] = field(default_factory=list)
    snapshot_bids: list[float] = field(default_factory=list)
    snapshot_asks: list[float] = field(default_factory=list)

    @property
    def n_fills(self) -> int:
        return sum(len(r.fills) for r in self.records if r.time >= 0)

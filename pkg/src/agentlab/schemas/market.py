"""Order book data contracts.

These sit on the simulation hot path, so they are slotted dataclasses rather than
pydantic models. Prices are integer ticks throughout.
"""

from dataclasses import dataclass, field
from enum import IntEnum, StrEnum


class Side(IntEnum):
    """Order side; the value is the order direction used by the trend features."""

    BID = 1
    ASK = -1

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


class OrderKind(StrEnum):
    LIMIT = "limit"
    MARKET = "market"


@dataclass(slots=True, eq=False)
class Order:
    """A resting or incoming order."""

    order_id: int
    agent_id: int
    side: Side
    kind: OrderKind
    size: int
    submit_time: float
    price: int | None = None
    remaining: int = field(init=False)
    priority_seq: int = 0

    def __post_init__(self) -> None:
        self.remaining = self.size


@dataclass(frozen=True, slots=True)
class Fill:
    """One execution between an incoming (taker) and a resting (maker) order."""

    time: float
    taker_order_id: int
    maker_order_id: int
    maker_agent_id: int
    price: int
    size: int


@dataclass(frozen=True, slots=True)
class BookSnapshot:
    """Top of book. Mid and spread are in ticks and absent for a one-sided book."""

    time: float
    best_bid: int | None
    best_ask: int | None

    @property
    def mid(self) -> float | None:
        if self.best_bid is None or self.best_ask is None:
            return None
        return (self.best_ask + self.best_bid) / 2

    @property
    def spread(self) -> float | None:
        if self.best_bid is None or self.best_ask is None:
            return None
        return (self.best_ask - self.best_bid) / 2


@dataclass(frozen=True, slots=True)
class SubmitOutcome:
    """Result of a limit or market submission."""

    order: Order
    fills: tuple[Fill, ...]
    rested: bool
    discarded: int = 0


@dataclass(frozen=True, slots=True)
class CancelOutcome:
    order_id: int
    removed: bool
    remaining: int = 0
    order: Order | None = None


@dataclass(frozen=True, slots=True)
class ModifyOutcome:
    order_id: int
    modified: bool
    old_size: int = 0
    new_size: int = 0
    lost_priority: bool = False

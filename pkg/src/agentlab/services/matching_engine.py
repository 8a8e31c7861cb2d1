"""Single-asset limit order book with price-time priority matching."""

import itertools
import math
from collections import deque

from sortedcontainers import SortedDict

from agentlab.core.errors import OrderRejected
from agentlab.schemas.market import (
    BookSnapshot,
    CancelOutcome,
    Fill,
    ModifyOutcome,
    Order,
    OrderKind,
    Side,
    SubmitOutcome,
)


def to_ticks(price: float, tick_size: float) -> int:
    """Quantize a currency price to ticks, rounding half away from zero."""
    scaled = price / tick_size
    # 1e-9 absorbs binary representation error, e.g. 100.30 / 0.01 = 10029.999999999998
    return int(math.copysign(math.floor(abs(scaled) + 0.5 + 1e-9), scaled))


class OrderBook:
    """
    Price-time priority order book.

    Price levels are FIFO queues kept in two SortedDicts keyed by tick price.
    Nothing here knows about agents' strategies or time; callers pass the time.
    """

    def __init__(self) -> None:
        """Initialize an empty book."""
        self._bids: SortedDict[int, deque[Order]] = SortedDict()
        self._asks: SortedDict[int, deque[Order]] = SortedDict()
        self._resting: dict[int, Order] = {}
        self._seen_ids: set[int] = set()
        self._priority = itertools.count(1)

    # ---------------------- helpers ----------------------

    def _levels(self, side: Side) -> SortedDict:
        return self._bids if side is Side.BID else self._asks

    def _best_level(self, side: Side) -> int | None:
        levels = self._levels(side)
        if not levels:
            return None
        return levels.peekitem(-1 if side is Side.BID else 0)[0]

    def _admit(self, order: Order) -> None:
        if order.order_id in self._seen_ids:
            raise OrderRejected(f"Duplicate order id {order.order_id}")
        if order.size < 1:
            raise OrderRejected(f"Order {order.order_id} has non-positive size {order.size}")
        self._seen_ids.add(order.order_id)
        order.remaining = order.size
        order.priority_seq = next(self._priority)

    def _sweep(self, taker: Order, limit: int | None, time: float) -> list[Fill]:
        """Execute the taker against the opposite side up to an optional limit price."""
        opposite = taker.side.opposite
        levels = self._levels(opposite)
        fills: list[Fill] = []

        while taker.remaining > 0 and levels:
            price = levels.peekitem(-1 if opposite is Side.BID else 0)[0]
            if limit is not None:
                if taker.side is Side.BID and price > limit:
                    break
                if taker.side is Side.ASK and price < limit:
                    break

            queue = levels[price]
            while queue and taker.remaining > 0:
                maker = queue[0]
                size = min(taker.remaining, maker.remaining)
                taker.remaining -= size
                maker.remaining -= size
                fills.append(
                    Fill(
                        time=time,
                        taker_order_id=taker.order_id,
                        maker_order_id=maker.order_id,
                        maker_agent_id=maker.agent_id,
                        price=price,
                        size=size,
                    )
                )
                if maker.remaining == 0:
                    queue.popleft()
                    del self._resting[maker.order_id]
            if not queue:
                del levels[price]

        return fills

    def _rest(self, order: Order) -> None:
        levels = self._levels(order.side)
        queue = levels.get(order.price)
        if queue is None:
            queue = deque()
            levels[order.price] = queue
        queue.append(order)
        self._resting[order.order_id] = order

    def _unlink(self, order: Order) -> None:
        levels = self._levels(order.side)
        queue = levels[order.price]
        queue.remove(order)
        if not queue:
            del levels[order.price]

    # ---------------------- public API ----------------------

    def submit_limit(self, order: Order, time: float) -> SubmitOutcome:
        """
        Match a limit order as far as its price allows and rest the remainder.

        Args:
            order: LIMIT order with a tick price
            time: Current simulation time

        Returns:
            Fills in execution order and whether a remainder now rests
        """
        if order.kind is not OrderKind.LIMIT or order.price is None:
            raise OrderRejected(f"Order {order.order_id} is not a priced limit order")
        if order.price < 1:
            raise OrderRejected(f"Order {order.order_id} has non-positive price {order.price}")
        self._admit(order)

        fills = self._sweep(order, order.price, time)
        rested = order.remaining > 0
        if rested:
            self._rest(order)
        return SubmitOutcome(order=order, fills=tuple(fills), rested=rested)

    def submit_market(self, order: Order, time: float) -> SubmitOutcome:
        """Execute a market order immediately; the unfilled remainder is discarded."""
        if order.kind is not OrderKind.MARKET:
            raise OrderRejected(f"Order {order.order_id} is not a market order")
        self._admit(order)

        fills = self._sweep(order, None, time)
        discarded = order.remaining
        order.remaining = 0
        return SubmitOutcome(order=order, fills=tuple(fills), rested=False, discarded=discarded)

    def cancel(self, order_id: int) -> CancelOutcome:
        """Remove a resting order; unknown or already executed ids are a no-op."""
        order = self._resting.pop(order_id, None)
        if order is None:
            return CancelOutcome(order_id=order_id, removed=False)
        self._unlink(order)
        remaining = order.remaining
        order.remaining = 0
        return CancelOutcome(order_id=order_id, removed=True, remaining=remaining, order=order)

    def modify_volume(self, order_id: int, new_size: int) -> ModifyOutcome:
        """
        Change the remaining volume of a resting order.

        A decrease keeps the queue position, an increase moves the order to the back
        of its price level.
        """
        if new_size < 1:
            raise OrderRejected(f"Modify of order {order_id} to non-positive size {new_size}")
        order = self._resting.get(order_id)
        if order is None or order.remaining == new_size:
            return ModifyOutcome(order_id=order_id, modified=False)

        old = order.remaining
        order.size += new_size - old
        order.remaining = new_size
        lost_priority = new_size > old
        if lost_priority:
            self._unlink(order)
            order.priority_seq = next(self._priority)
            self._rest(order)
        return ModifyOutcome(
            order_id=order_id,
            modified=True,
            old_size=old,
            new_size=new_size,
            lost_priority=lost_priority,
        )

    def top_of_book(self, time: float) -> BookSnapshot:
        """Current best bid and ask."""
        return BookSnapshot(
            time=time,
            best_bid=self._best_level(Side.BID),
            best_ask=self._best_level(Side.ASK),
        )

    def resting(self, order_id: int) -> Order | None:
        return self._resting.get(order_id)

    def depth(self, side: Side) -> list[tuple[int, int]]:
        """(price, total remaining) per level, best level first."""
        levels = self._levels(side)
        items = reversed(levels.items()) if side is Side.BID else levels.items()
        return [(price, sum(o.remaining for o in queue)) for price, queue in items]

    def level_queue(self, side: Side, price: int) -> list[int]:
        """Order ids at one price level in time priority."""
        queue = self._levels(side).get(price)
        return [o.order_id for o in queue] if queue else []

    def __len__(self) -> int:
        return len(self._resting)

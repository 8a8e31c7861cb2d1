"""Market gateway: the recorder between the matching engine and the agents.

Agents never touch the OrderBook directly. Every action goes through `Market`, which
assigns order ids, tracks each agent's resting orders, writes EventLogRecords and
keeps the top-of-book history.
"""

import bisect
import itertools
import math
from collections import defaultdict

from agentlab.core.errors import OrderRejected
from agentlab.schemas.events import Action, EventLog, EventLogRecord, FillRef
from agentlab.schemas.market import (
    BookSnapshot,
    CancelOutcome,
    Order,
    OrderKind,
    Side,
    SubmitOutcome,
)
from agentlab.services.matching_engine import OrderBook, to_ticks
from agentlab.services.simulation_kernel import SimClock, SimEvent


class Market:
    """One asset's market as seen by the agents of a single run."""

    def __init__(self, clock: SimClock, log: EventLog):
        """
        Args:
            clock: The kernel clock; the market never advances it
            log: Event log this market appends to
        """
        self.clock = clock
        self.log = log
        self.tick_size = log.tick_size
        self.book = OrderBook()
        self._order_ids = itertools.count(1)
        self._record_seq = itertools.count()
        self._own: dict[int, dict[int, Order]] = defaultdict(dict)
        self._top: tuple[int | None, int | None] = (None, None)
        # History of defined mids for agents' lookbacks
        self._mid_times: list[float] = []
        self._mids: list[float] = []

    # ---------------------- observation ----------------------

    @property
    def now(self) -> float:
        return self.clock.now

    def top_of_book(self) -> BookSnapshot:
        return self.book.top_of_book(self.clock.now)

    def mid_price(self) -> float | None:
        """Mid-price in currency units, None for a one-sided book."""
        bid, ask = self._top
        if bid is None or ask is None:
            return None
        return (bid + ask) / 2 * self.tick_size

    def best_bid(self) -> float | None:
        return None if self._top[0] is None else self._top[0] * self.tick_size

    def best_ask(self) -> float | None:
        return None if self._top[1] is None else self._top[1] * self.tick_size

    def mid_at(self, time: float) -> float | None:
        """
        Last defined mid at or before `time`.

        Before the first recorded mid the earliest one is returned (flat extrapolation).
        """
        if not self._mids:
            return None
        idx = bisect.bisect_right(self._mid_times, time) - 1
        return self._mids[max(idx, 0)]

    def own_orders(self, agent_id: int, side: Side | None = None) -> list[Order]:
        """Resting orders of one agent in submission order."""
        orders = self._own.get(agent_id)
        if not orders:
            return []
        if side is None:
            return list(orders.values())
        return [o for o in orders.values() if o.side is side]

    def to_ticks(self, price: float) -> int:
        return to_ticks(price, self.tick_size)

    # ---------------------- actions ----------------------

    def submit_limit(self, agent_id: int, side: Side, price: int, size: int) -> SubmitOutcome:
        """Submit a limit order at a tick price on behalf of an agent."""
        mid = self.mid_price()
        order = Order(
            order_id=next(self._order_ids),
            agent_id=agent_id,
            side=side,
            kind=OrderKind.LIMIT,
            size=size,
            submit_time=self.clock.now,
            price=price,
        )
        outcome = self.book.submit_limit(order, self.clock.now)
        self._settle(outcome)
        if outcome.rested:
            self._own[agent_id][order.order_id] = order
        self._record(Action.SUBMIT_LIMIT, order, outcome, mid, order.remaining)
        self._track_top()
        return outcome

    def submit_market(self, agent_id: int, side: Side, size: int) -> SubmitOutcome:
        """Submit a market order; an unfilled remainder is discarded and logged."""
        mid = self.mid_price()
        order = Order(
            order_id=next(self._order_ids),
            agent_id=agent_id,
            side=side,
            kind=OrderKind.MARKET,
            size=size,
            submit_time=self.clock.now,
        )
        outcome = self.book.submit_market(order, self.clock.now)
        self._settle(outcome)
        self._record(Action.SUBMIT_MARKET, order, outcome, mid, outcome.discarded)
        self._track_top()
        return outcome

    def cancel(
        self,
        agent_id: int,
        order_id: int,
        action: Action = Action.CANCEL,
    ) -> CancelOutcome:
        """Cancel one of the agent's orders; a no-op if it is no longer resting."""
        resting = self.book.resting(order_id)
        if resting is None or resting.agent_id != agent_id:
            return CancelOutcome(order_id=order_id, removed=False)

        mid = self.mid_price()
        outcome = self.book.cancel(order_id)
        self._own[agent_id].pop(order_id, None)
        self._append(
            EventLogRecord(
                time=self.clock.now,
                agent_id=agent_id,
                class_id=self.log.agent_classes.get(agent_id, 0),
                action=action,
                side=int(resting.side),
                price=resting.price * self.tick_size,
                size=resting.size,
                fills=(),
                mid=mid,
                order_id=order_id,
                remaining=outcome.remaining,
                seq=next(self._record_seq),
            )
        )
        self._track_top()
        return outcome

    def cancel_all(self, agent_id: int, side: Side | None = None) -> int:
        """Cancel every resting order of an agent (optionally one side only)."""
        cancelled = 0
        for order in self.own_orders(agent_id, side):
            cancelled += self.cancel(agent_id, order.order_id).removed
        return cancelled

    def expire(self, event: SimEvent) -> None:
        """ORDER_EXPIRY handler: cancel the order if it still rests."""
        order = self.book.resting(event.order_id)
        if order is not None:
            self.cancel(order.agent_id, order.order_id, action=Action.EXPIRE)

    def seed_quotes(self, agent_id: int, bid: int, ask: int, size: int) -> None:
        """Place the bootstrap bid and ask that give the first agents a quote."""
        if bid >= ask:
            raise OrderRejected(f"Seed quotes are crossed: bid={bid} ask={ask}")
        self.submit_limit(agent_id, Side.BID, bid, size)
        self.submit_limit(agent_id, Side.ASK, ask, size)

    # ---------------------- recording ----------------------

    def _settle(self, outcome: SubmitOutcome) -> None:
        """Forget makers' orders that were fully executed."""
        for fill in outcome.fills:
            if self.book.resting(fill.maker_order_id) is None:
                self._own[fill.maker_agent_id].pop(fill.maker_order_id, None)

    def _record(
        self,
        action: Action,
        order: Order,
        outcome: SubmitOutcome,
        mid: float | None,
        remaining: int,
    ) -> None:
        tick = self.tick_size
        self._append(
            EventLogRecord(
                time=self.clock.now,
                agent_id=order.agent_id,
                class_id=self.log.agent_classes.get(order.agent_id, 0),
                action=action,
                side=int(order.side),
                price=None if order.price is None else order.price * tick,
                size=order.size,
                fills=tuple(
                    FillRef(f.price * tick, f.size, f.maker_order_id) for f in outcome.fills
                ),
                mid=mid,
                order_id=order.order_id,
                remaining=remaining,
                seq=next(self._record_seq),
            )
        )

    def _append(self, record: EventLogRecord) -> None:
        self.log.records.append(record)

    def _track_top(self) -> None:
        top = self.book.top_of_book(self.clock.now)
        current = (top.best_bid, top.best_ask)
        if current == self._top:
            return
        self._top = current
        self.record_snapshot()

    def record_snapshot(self) -> None:
        """Append the current top of book to the history."""
        bid, ask = self._top
        tick = self.tick_size
        now = self.clock.now
        self.log.snapshot_times.append(now)
        self.log.snapshot_bids.append(math.nan if bid is None else bid * tick)
        self.log.snapshot_asks.append(math.nan if ask is None else ask * tick)
        if bid is not None and ask is not None:
            self._mid_times.append(now)
            self._mids.append((bid + ask) / 2 * tick)

"""Trading strategies: market makers, market takers, chartists, fundamentalists, noise traders.

Every agent is a small state machine driven by AGENT_WAKEUP events. Agents act only
through the `Market` gateway and draw all randomness from their own substream.
"""

import logging
import math
from collections.abc import Callable
from enum import StrEnum

import numpy as np

from agentlab.schemas.agents import (
    MarketMakerParams,
    MarketTakerParams,
    NoiseTraderParams,
    TrendTraderParams,
)
from agentlab.schemas.market import Side
from agentlab.services.market import Market
from agentlab.services.simulation_kernel import (
    EventKind,
    Kernel,
    SimEvent,
    draw_exponential,
    draw_normal,
)

logger = logging.getLogger(__name__)

FundamentalAccessor = Callable[[float], float]


def draw_order_size(rng: np.random.Generator, mean: float, std: float) -> int:
    """Gaussian order size rounded half up and clamped to at least one share."""
    return max(1, math.floor(draw_normal(rng, mean, std) + 0.5))


def draw_side(rng: np.random.Generator) -> Side:
    return Side.BID if rng.random() < 0.5 else Side.ASK


# ---------------------- trend machinery ----------------------


def trend_expectation(
    weight: float,
    current: float,
    reference: float,
    noise: float,
    fundamental: bool = False,
) -> float:
    """
    Expected price change of a trend trader.

    Args:
        weight: w; chartists may use either sign, fundamentalists a positive one
        current: Current mid-price p_t
        reference: p_{t-h} for chartists, the fundamental price p* for fundamentalists
        noise: The epsilon term already drawn
        fundamental: Whether the agent is a fundamentalist

    Returns:
        The expected change r_hat; the expected price is current + r_hat
    """
    if fundamental:
        return weight * (reference - current) + noise
    return weight * (current - reference) + noise


def trend_market_action(
    expected: float,
    best_bid: float | None,
    best_ask: float | None,
) -> Side | None:
    """
    Side of the market order a trend trader sends, if any.

    The boundaries belong to the spread: only a strictly higher (lower) expected price
    than the best ask (bid) triggers a buy (sell). An absent side means no action.
    """
    if best_bid is None or best_ask is None:
        return None
    if expected > best_ask:
        return Side.BID
    if expected < best_bid:
        return Side.ASK
    return None


def trend_limit_action(expected: float, mid: float) -> Side | None:
    """Side of the limit order a trend trader places at its expected price, if any."""
    if expected > mid:
        return Side.BID
    if expected < mid:
        return Side.ASK
    return None


# ---------------------- agents ----------------------


class TradingAgent:
    """Common plumbing: identity, market access, random stream and wakeup helpers."""

    def __init__(self, agent_id: int, class_id: int, market: Market, rng: np.random.Generator):
        """
        Initialize an agent.

        Args:
            agent_id: Unique agent id within the run
            class_id: Scenario class the agent belongs to
            market: Gateway used for every order action
            rng: The agent's own random stream
        """
        self.agent_id = agent_id
        self.class_id = class_id
        self.market = market
        self.rng = rng

    def start(self, kernel: Kernel, start_time: float) -> None:
        raise NotImplementedError

    def on_wakeup(self, kernel: Kernel, tag: str) -> None:
        raise NotImplementedError

    def _wake_at(self, kernel: Kernel, time: float, tag: str) -> None:
        kernel.schedule(
            SimEvent(time=time, kind=EventKind.AGENT_WAKEUP, agent_id=self.agent_id, tag=tag)
        )

    def _wake_in(self, kernel: Kernel, mean: float, tag: str) -> None:
        kernel.wake_after(self.agent_id, draw_exponential(self.rng, mean), tag)


class MarketMaker(TradingAgent):
    """Cancels everything and rebuilds a K+1 rung ladder on both sides at every wakeup."""

    def __init__(
        self,
        agent_id: int,
        class_id: int,
        market: Market,
        rng: np.random.Generator,
        params: MarketMakerParams,
    ):
        super().__init__(agent_id, class_id, market, rng)
        self.params = params
        self.spacing_ticks = market.to_ticks(params.spacing)

    def start(self, kernel: Kernel, start_time: float) -> None:
        self._wake_at(kernel, start_time + draw_exponential(self.rng, self.params.update_mean), "")

    def on_wakeup(self, kernel: Kernel, tag: str) -> None:
        self.rebuild()
        self._wake_in(kernel, self.params.update_mean, tag)

    def rebuild(self) -> None:
        """Replace all resting orders with a fresh ladder anchored at the current quotes."""
        market = self.market
        market.cancel_all(self.agent_id)
        top = market.top_of_book()
        ask, bid = top.best_ask, top.best_bid
        rungs = range(self.params.depth + 1)

        if ask is None:
            logger.debug("Maker %d: no ask, skipping sell ladder", self.agent_id)
        else:
            for i in rungs:
                market.submit_limit(
                    self.agent_id, Side.ASK, ask + i * self.spacing_ticks, self.params.order_size
                )
        if bid is None:
            logger.debug("Maker %d: no bid, skipping buy ladder", self.agent_id)
        else:
            for i in rungs:
                price = bid - i * self.spacing_ticks
                if price < 1:
                    break
                market.submit_limit(self.agent_id, Side.BID, price, self.params.order_size)


class TakerState(StrEnum):
    WAITING = "waiting"
    EXECUTING = "executing"


class MarketTaker(TradingAgent):
    """Splits large parent orders into market-order chunks spread over an exit time."""

    def __init__(
        self,
        agent_id: int,
        class_id: int,
        market: Market,
        rng: np.random.Generator,
        params: MarketTakerParams,
    ):
        super().__init__(agent_id, class_id, market, rng)
        self.params = params
        self.state = TakerState.WAITING
        self.n_chunks = math.ceil(params.large_size / params.chunk_mean)
        self.side = Side.BID
        self.exit_time = 0.0
        self.executed = 0
        self.chunks_sent = 0

    def start(self, kernel: Kernel, start_time: float) -> None:
        delay = draw_exponential(self.rng, self.params.large_order_mean)
        self._wake_at(kernel, start_time + delay, "large")

    def on_wakeup(self, kernel: Kernel, tag: str) -> None:
        if tag == "large":
            self.begin_large_order(kernel)
        else:
            self.send_chunk(kernel)

    def begin_large_order(self, kernel: Kernel) -> None:
        p = self.params
        self.state = TakerState.EXECUTING
        exit_time = draw_normal(self.rng, p.exit_time_mean, p.exit_time_std)
        self.exit_time = max(float(self.n_chunks), exit_time)
        self.side = draw_side(self.rng)
        self.executed = 0
        self.chunks_sent = 0
        self._schedule_chunk(kernel)

    def chunk_interval(self) -> float:
        n = self.n_chunks
        return max(1.0, draw_normal(self.rng, self.exit_time / n, self.exit_time / (5 * n)))

    def next_chunk_size(self) -> int:
        p = self.params
        left = p.large_size - self.executed
        if self.chunks_sent + 1 >= self.n_chunks:
            return left
        return min(left, draw_order_size(self.rng, p.chunk_mean, p.chunk_std))

    def send_chunk(self, kernel: Kernel) -> None:
        size = self.next_chunk_size()
        self.market.submit_market(self.agent_id, self.side, size)
        self.executed += size
        self.chunks_sent += 1

        if self.executed >= self.params.large_size:
            self.state = TakerState.WAITING
            self._wake_in(kernel, self.params.large_order_mean, "large")
        else:
            self._schedule_chunk(kernel)

    def _schedule_chunk(self, kernel: Kernel) -> None:
        kernel.wake_after(self.agent_id, self.chunk_interval(), "chunk")


class TrendTrader(TradingAgent):
    """
    Shared action machinery of chartists and fundamentalists.

    Two independent wakeup streams: "market" wakeups may cross the spread with a
    market order, "limit" wakeups place an expiring limit order at the expected price.
    """

    fundamental = False

    def __init__(
        self,
        agent_id: int,
        class_id: int,
        market: Market,
        rng: np.random.Generator,
        params: TrendTraderParams,
    ):
        super().__init__(agent_id, class_id, market, rng)
        self.params = params

    def start(self, kernel: Kernel, start_time: float) -> None:
        p = self.params
        self._wake_at(kernel, start_time + draw_exponential(self.rng, p.limit_mean), "limit")
        self._wake_at(kernel, start_time + draw_exponential(self.rng, p.market_mean), "market")

    def on_wakeup(self, kernel: Kernel, tag: str) -> None:
        if tag == "limit":
            self.limit_action(kernel)
            self._wake_in(kernel, self.params.limit_mean, "limit")
        else:
            self.market_action()
            self._wake_in(kernel, self.params.market_mean, "market")

    def reference_price(self, now: float) -> float | None:
        """p_{t-h} for chartists; overridden by fundamentalists."""
        return self.market.mid_at(now - self.params.horizon)

    def expected_price(self, now: float) -> tuple[float, float] | None:
        """(p_t, p_hat) or None while the mid is undefined."""
        mid = self.market.mid_price()
        reference = self.reference_price(now)
        if mid is None or reference is None:
            return None
        noise = draw_normal(self.rng, 0.0, self.params.noise_std)
        change = trend_expectation(self.params.weight, mid, reference, noise, self.fundamental)
        return mid, mid + change

    def market_action(self) -> None:
        expectation = self.expected_price(self.market.now)
        if expectation is None:
            return
        _, expected = expectation
        side = trend_market_action(expected, self.market.best_bid(), self.market.best_ask())
        if side is None:
            return
        self.market.cancel_all(self.agent_id, side.opposite)
        size = draw_order_size(self.rng, self.params.order_size_mean, self.params.order_size_std)
        self.market.submit_market(self.agent_id, side, size)

    def limit_action(self, kernel: Kernel) -> None:
        market = self.market
        expectation = self.expected_price(market.now)
        if expectation is None:
            return
        mid, expected = expectation
        side = trend_limit_action(expected, mid)
        if side is None:
            return

        price = max(1, market.to_ticks(expected))
        # Buys above and sells below the expected price contradict the view
        for order in market.own_orders(self.agent_id):
            if (order.side is Side.BID and order.price > price) or (
                order.side is Side.ASK and order.price < price
            ):
                market.cancel(self.agent_id, order.order_id)

        size = draw_order_size(self.rng, self.params.order_size_mean, self.params.order_size_std)
        outcome = market.submit_limit(self.agent_id, side, price, size)
        if outcome.rested:
            kernel.schedule(
                SimEvent(
                    time=market.now + self.params.horizon,
                    kind=EventKind.ORDER_EXPIRY,
                    agent_id=self.agent_id,
                    order_id=outcome.order.order_id,
                )
            )


class Chartist(TrendTrader):
    """Extrapolates (w > 0) or fades (w < 0) the mid move over its horizon."""


class Fundamentalist(TrendTrader):
    """Expects the mid to move towards the fundamental price."""

    fundamental = True

    def __init__(
        self,
        agent_id: int,
        class_id: int,
        market: Market,
        rng: np.random.Generator,
        params: TrendTraderParams,
        fundamental_at: FundamentalAccessor,
    ):
        super().__init__(agent_id, class_id, market, rng, params)
        self.fundamental_at = fundamental_at

    def reference_price(self, now: float) -> float | None:
        return self.fundamental_at(now)


class NoiseTrader(TradingAgent):
    """Random side, random limit price around the mid, occasional random cancels."""

    def __init__(
        self,
        agent_id: int,
        class_id: int,
        market: Market,
        rng: np.random.Generator,
        params: NoiseTraderParams,
    ):
        super().__init__(agent_id, class_id, market, rng)
        self.params = params

    def start(self, kernel: Kernel, start_time: float) -> None:
        p = self.params
        streams = (("limit", p.limit_mean), ("market", p.market_mean), ("cancel", p.cancel_mean))
        for tag, mean in streams:
            self._wake_at(kernel, start_time + draw_exponential(self.rng, mean), tag)

    def on_wakeup(self, kernel: Kernel, tag: str) -> None:
        p = self.params
        if tag == "limit":
            self.place_limit()
            self._wake_in(kernel, p.limit_mean, tag)
        elif tag == "market":
            self.place_market()
            self._wake_in(kernel, p.market_mean, tag)
        else:
            self.cancel_random()
            self._wake_in(kernel, p.cancel_mean, tag)

    def _size(self) -> int:
        return draw_order_size(self.rng, self.params.order_size_mean, self.params.order_size_std)

    def place_limit(self) -> None:
        mid = self.market.mid_price()
        if mid is None:
            return
        side = draw_side(self.rng)
        price = max(1, self.market.to_ticks(draw_normal(self.rng, mid, self.params.price_std)))
        self.market.submit_limit(self.agent_id, side, price, self._size())

    def place_market(self) -> None:
        side = draw_side(self.rng)
        self.market.submit_market(self.agent_id, side, self._size())

    def cancel_random(self) -> None:
        orders = self.market.own_orders(self.agent_id)
        if not orders:
            return
        victim = orders[int(self.rng.integers(len(orders)))]
        self.market.cancel(self.agent_id, victim.order_id)

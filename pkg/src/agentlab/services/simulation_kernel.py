"""Event-driven scheduler and seeded random streams.

Time is a real number in units of 0.1 s. Events are dispatched in (time, seq) order,
seq being the scheduling counter, so equal-time events keep their scheduling order.
"""

import heapq
import itertools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Protocol

import numpy as np

from agentlab.core.errors import ConfigurationError, SchedulingError

logger = logging.getLogger(__name__)


class EventKind(StrEnum):
    AGENT_WAKEUP = "agent_wakeup"
    ORDER_EXPIRY = "order_expiry"
    FUNDAMENTAL_STEP = "fundamental_step"


@dataclass(slots=True)
class SimEvent:
    """A timestamped message; which payload fields matter depends on the kind."""

    time: float
    kind: EventKind
    agent_id: int = -1
    tag: str = ""
    order_id: int = -1
    value: float = math.nan
    seq: int = -1


@dataclass(slots=True)
class SimClock:
    now: float
    horizon: float

    def advance(self, time: float) -> None:
        if time < self.now:
            raise SchedulingError(f"Clock cannot move back from {self.now} to {time}")
        self.now = time


class Agent(Protocol):
    agent_id: int

    def start(self, kernel: "Kernel", start_time: float) -> None: ...

    def on_wakeup(self, kernel: "Kernel", tag: str) -> None: ...


# ---------------------- random streams ----------------------


def substream(master_seed: int, stream_id: int) -> np.random.Generator:
    """
    Independent generator for one agent.

    The stream depends only on (master_seed, stream_id), never on how many draws
    other agents made.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id,)))
    )


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """
    Seed of run `run_index` in a batch.

    Mixing: SeedSequence(master_seed, spawn_key=(2**32 + run_index,)) -> first two
    32-bit words of its state, combined into one 64-bit integer. The 2**32 offset keeps
    run keys disjoint from agent stream ids.
    """
    words = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(2**32 + run_index,)
    ).generate_state(2, np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def check_mean(name: str, mean: float) -> float:
    if not mean > 0:
        raise ConfigurationError(f"{name} must be positive, got {mean}")
    return mean


def check_std(name: str, std: float) -> float:
    if std < 0:
        raise ConfigurationError(f"{name} must be non-negative, got {std}")
    return std


def draw_exponential(rng: np.random.Generator, mean: float) -> float:
    """Exponential waiting time with the given mean."""
    return float(rng.exponential(check_mean("exponential mean", mean)))


def draw_normal(rng: np.random.Generator, mean: float, std: float) -> float:
    """Untruncated Gaussian draw; callers clamp where their rules require."""
    check_std("normal std", std)
    if std == 0:
        return float(mean)
    return float(rng.normal(mean, std))


# ---------------------- kernel ----------------------


class Kernel:
    """Priority-queue scheduler for one run. Strictly single-threaded."""

    def __init__(self, horizon: float, start_time: float = 0.0):
        """
        Args:
            horizon: Last dispatchable time
            start_time: Initial clock value (negative when a burn-in precedes t = 0)
        """
        self.clock = SimClock(now=start_time, horizon=horizon)
        self._queue: list[tuple[float, int, SimEvent]] = []
        self._seq = itertools.count()
        self._agents: dict[int, Agent] = {}
        self._handlers: dict[EventKind, Callable[[SimEvent], None]] = {}
        self.dispatched = 0

    @property
    def now(self) -> float:
        return self.clock.now

    def add_agent(self, agent: Agent) -> None:
        self._agents[agent.agent_id] = agent

    def on(self, kind: EventKind, handler: Callable[[SimEvent], None]) -> None:
        """Register the handler of a non-agent event kind."""
        self._handlers[kind] = handler

    def schedule(self, event: SimEvent) -> SimEvent:
        """Enqueue an event; events past the horizon are kept but never dispatched."""
        if event.time < self.clock.now:
            raise SchedulingError(
                f"Event {event.kind} at {event.time} is before now={self.clock.now}"
            )
        event.seq = next(self._seq)
        heapq.heappush(self._queue, (event.time, event.seq, event))
        return event

    def wake_after(self, agent_id: int, delay: float, tag: str) -> SimEvent:
        event = SimEvent(
            time=self.clock.now + delay,
            kind=EventKind.AGENT_WAKEUP,
            agent_id=agent_id,
            tag=tag,
        )
        return self.schedule(event)

    def run(self, until: float | None = None) -> int:
        """
        Dispatch events in (time, seq) order up to `until` (default: the horizon).

        Returns:
            Number of events dispatched by this call
        """
        stop = self.clock.horizon if until is None else min(until, self.clock.horizon)
        count = 0
        while self._queue and self._queue[0][0] <= stop:
            _, _, event = heapq.heappop(self._queue)
            self.clock.advance(event.time)
            if event.kind is EventKind.AGENT_WAKEUP:
                self._agents[event.agent_id].on_wakeup(self, event.tag)
            else:
                handler = self._handlers.get(event.kind)
                if handler is not None:
                    handler(event)
            count += 1
        self.clock.advance(max(self.clock.now, stop))
        self.dispatched += count
        logger.debug("Dispatched %d events, clock at %.1f", count, self.clock.now)
        return count

    def pending(self) -> int:
        return len(self._queue)

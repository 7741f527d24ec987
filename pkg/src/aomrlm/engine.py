"""Deterministic discrete-event scheduler and named random streams."""

from __future__ import annotations

import enum
import hashlib
import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable


class EventKind(enum.Enum):
    PACKET_DELIVERY = "delivery"
    TIMER_FIRE = "timer"
    MOBILITY_UPDATE = "mobility"
    TRAFFIC_TICK = "traffic"


@dataclass(frozen=True, order=True)
class Event:
    fire_time: float
    sequence: int
    kind: EventKind = field(compare=False)
    target: Any = field(default=None, compare=False)
    payload: Any = field(default=None, compare=False)


class SchedulingError(RuntimeError):
    pass


class Simulator:
    """Pops events in (fire_time, sequence) order and hands them to per-kind handlers."""

    def __init__(self):
        self.now = 0.0
        self.dispatched = 0
        self._queue: list[tuple[float, int, Event]] = []
        self._sequence = itertools.count()
        self._handlers: dict[EventKind, Callable[[Event], None]] = {}

    def on(self, kind: EventKind, handler: Callable[[Event], None]) -> None:
        self._handlers[kind] = handler

    def schedule(self, fire_time: float, kind: EventKind, target=None, payload=None) -> Event:
        if fire_time < self.now:
            raise SchedulingError(f"event at {fire_time} is in the past (now={self.now})")
        event = Event(fire_time, next(self._sequence), kind, target, payload)
        heapq.heappush(self._queue, (fire_time, event.sequence, event))
        return event

    def schedule_in(self, delay: float, kind: EventKind, target=None, payload=None) -> Event:
        return self.schedule(self.now + delay, kind, target, payload)

    def __len__(self):
        return len(self._queue)

    def run(self, until: float) -> None:
        queue = self._queue
        handlers = self._handlers
        while queue and queue[0][0] <= until:
            fire_time, _, event = heapq.heappop(queue)
            self.now = fire_time
            self.dispatched += 1
            handlers[event.kind](event)
        self.now = max(self.now, until)


class RngStreams:
    """Independent ``random.Random`` streams keyed by name, derived from one seed.

    Each stream seed is a SHA-256 digest of the run seed and the key, so adding
    draws to one concern never shifts another.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[tuple, random.Random] = {}

    def stream(self, name: str, *key) -> random.Random:
        full_key = (name, *key)
        rng = self._streams.get(full_key)
        if rng is None:
            text = ":".join([str(self.seed), *map(str, full_key)])
            digest = hashlib.sha256(text.encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[full_key] = rng
        return rng

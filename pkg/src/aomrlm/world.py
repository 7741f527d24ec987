"""Physical layer: positions, random waypoint motion, unit-disk links, a contention-free MAC."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Callable, Optional, TextIO

from .energy import RadioEnergyProfile, transmission_energy
from .engine import EventKind, Simulator


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Terrain:
    width: float = 840.0
    height: float = 840.0

    def random_position(self, rng: random.Random) -> Position:
        return Position(rng.uniform(0.0, self.width), rng.uniform(0.0, self.height))

    def contains(self, p: Position) -> bool:
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height


@dataclass(frozen=True)
class MobilityState:
    """One random-waypoint leg. ``current`` is exact at time ``updated_at``."""

    current: Position
    waypoint: Position
    speed: float
    pause_until: float = 0.0
    updated_at: float = 0.0

    def __post_init__(self):
        start = max(self.updated_at, self.pause_until)
        dist = self.current.distance_to(self.waypoint)
        if self.speed > 0.0 and dist > 0.0:
            arrival = start + dist / self.speed
            vx = (self.waypoint.x - self.current.x) * self.speed / dist
            vy = (self.waypoint.y - self.current.y) * self.speed / dist
        else:
            arrival = math.inf if self.speed <= 0.0 else start
            vx = vy = 0.0
        object.__setattr__(self, "_leg", (start, arrival, vx, vy))

    def position_at(self, t: float) -> Position:
        start, arrival, vx, vy = self._leg
        if t <= start or vx == vy == 0.0:
            return self.current
        if t >= arrival:
            return self.waypoint
        dt = t - start
        return Position(self.current.x + vx * dt, self.current.y + vy * dt)

    def arrival_time(self) -> float:
        return self._leg[1]


def draw_leg(
    start: Position, t: float, rng: random.Random, terrain: Terrain, max_speed: float,
    pause_until: float = 0.0,
) -> MobilityState:
    waypoint = terrain.random_position(rng)
    speed = rng.uniform(0.0, max_speed)
    return MobilityState(start, waypoint, speed, pause_until, t)


def waypoint_update(
    m: MobilityState,
    now: float,
    rng: random.Random,
    terrain: Terrain,
    max_speed: float,
    pause_time: float = 0.0,
) -> MobilityState:
    """Advance ``m`` to ``now``; on arrival pause, then draw a fresh waypoint and speed."""
    while True:
        arrival = m.arrival_time()
        if arrival > now:
            return replace(m, current=m.position_at(now), updated_at=max(now, m.updated_at))
        # arrived at some instant <= now: next leg starts from the waypoint
        m = draw_leg(m.waypoint, arrival, rng, terrain, max_speed, pause_until=arrival + pause_time)


@dataclass(frozen=True)
class MacProfile:
    """Contention-free MAC: airtime + fixed base + uniform jitter, optional i.i.d. loss."""

    per_hop_delay_base: float = 0.0
    per_hop_jitter: float = 0.001
    loss_probability: float = 0.0

    def __post_init__(self):
        if self.per_hop_delay_base < 0 or self.per_hop_jitter < 0:
            raise ValueError("MAC delays cannot be negative")
        if not 0.0 <= self.loss_probability < 1.0:
            raise ValueError("loss_probability must lie in [0, 1)")


class World:
    """Node positions, liveness and batteries; schedules packet deliveries on the engine.

    ``on_receive(receiver, sender, message)`` is called when a delivery event fires
    and the receiver is still alive (after the rx debit).
    """

    def __init__(
        self,
        engine: Simulator,
        mobility: list[MobilityState],
        energies: list[float],
        *,
        terrain: Terrain = Terrain(),
        range_m: float = 250.0,
        radio: RadioEnergyProfile = RadioEnergyProfile(),
        mac: MacProfile = MacProfile(),
        mac_rng: Optional[random.Random] = None,
        mobility_rngs: Optional[list[random.Random]] = None,
        max_speed: float = 5.0,
        pause_time: float = 0.0,
        sample_period: float = 0.1,
        position_trace: Optional[TextIO] = None,
    ):
        self.engine = engine
        self.mobility = list(mobility)
        self.initial = [float(e) for e in energies]
        self.residual = list(self.initial)
        self.consumed = [0.0] * len(energies)
        self.alive = [e > 0 for e in energies]
        self.exhaustions: list[tuple[int, float]] = []
        self.terrain = terrain
        self.range_m = range_m
        self.radio = radio
        self.mac = mac
        self.mac_rng = mac_rng or random.Random(0)
        self.mobility_rngs = mobility_rngs
        self.max_speed = max_speed
        self.pause_time = pause_time
        self.sample_period = sample_period
        self.position_trace = position_trace
        self.on_receive: Callable = lambda receiver, sender, message: None
        self.debit_listeners: list[Callable[[int, float, float], None]] = []
        self.exhaustion_listeners: list[Callable[[int, float], None]] = []
        self.tx_count = 0
        self.delivery_count = 0
        engine.on(EventKind.PACKET_DELIVERY, self._on_delivery)
        engine.on(EventKind.MOBILITY_UPDATE, self._on_mobility)

    def __len__(self):
        return len(self.mobility)

    def start_mobility(self) -> None:
        if self.max_speed <= 0 and self.position_trace is None:
            return
        for node in range(len(self)):
            self.engine.schedule(self.engine.now, EventKind.MOBILITY_UPDATE, node)

    def position(self, node: int, t: Optional[float] = None) -> Position:
        return self.mobility[node].position_at(self.engine.now if t is None else t)

    def in_range(self, a: int, b: int) -> bool:
        return self.position(a).distance_to(self.position(b)) <= self.range_m

    def neighbors(self, node: int) -> set[int]:
        now = self.engine.now
        here = self.mobility[node].position_at(now)
        hx, hy = here.x, here.y
        r2 = self.range_m * self.range_m
        alive = self.alive
        out = set()
        for other, m in enumerate(self.mobility):
            if other == node or not alive[other]:
                continue
            p = m.position_at(now)
            dx, dy = p.x - hx, p.y - hy
            if dx * dx + dy * dy <= r2:
                out.add(other)
        return out

    def debit(self, node: int, joules: float) -> float:
        """Take up to ``joules`` from the battery; returns the amount actually taken."""
        if not self.alive[node]:
            return 0.0
        taken = min(joules, self.residual[node])
        self.residual[node] -= taken
        self.consumed[node] += taken
        for listener in self.debit_listeners:
            listener(node, taken, self.engine.now)
        if self.residual[node] <= 0.0 or taken < joules:
            self.residual[node] = 0.0
            self.kill(node)
        return taken

    def kill(self, node: int) -> None:
        if not self.alive[node]:
            return
        self.alive[node] = False
        self.exhaustions.append((node, self.engine.now))
        for listener in self.exhaustion_listeners:
            listener(node, self.engine.now)

    def drain(self, node: int) -> None:
        """Consume the whole battery of ``node`` at once (test fixtures)."""
        self.debit(node, self.residual[node])

    def transmit(self, sender: int, message, target: Optional[int] = None) -> int:
        """Send ``message`` by broadcast (``target=None``) or unicast.

        Returns the number of deliveries scheduled.
        """
        if not self.alive[sender] or self.residual[sender] <= 0:
            return 0
        bits = message.size_bytes * 8
        self.tx_count += 1
        self.debit(sender, transmission_energy(self.radio, bits))
        receivers = self.neighbors(sender) if target is None else (
            [target] if target != sender and self.alive[target] and self.in_range(sender, target) else []
        )
        airtime = self.radio.airtime(bits)
        scheduled = 0
        for receiver in sorted(receivers):
            delay = airtime + self.mac.per_hop_delay_base
            if self.mac.per_hop_jitter > 0:
                delay += self.mac_rng.uniform(0.0, self.mac.per_hop_jitter)
            if self.mac.loss_probability > 0 and self.mac_rng.random() < self.mac.loss_probability:
                continue
            self.engine.schedule_in(delay, EventKind.PACKET_DELIVERY, receiver, (sender, message))
            scheduled += 1
        return scheduled

    def _on_delivery(self, event) -> None:
        receiver = event.target
        sender, message = event.payload
        if not self.alive[receiver]:
            return
        self.delivery_count += 1
        self.debit(receiver, transmission_energy(self.radio, message.size_bytes * 8, receive=True))
        # a packet that empties the battery is still received
        self.on_receive(receiver, sender, message)

    def _on_mobility(self, event) -> None:
        node = event.target
        now = self.engine.now
        if self.max_speed > 0:
            rng = self.mobility_rngs[node]
            self.mobility[node] = waypoint_update(
                self.mobility[node], now, rng, self.terrain, self.max_speed, self.pause_time
            )
        if self.position_trace is not None:
            p = self.mobility[node].position_at(now)
            self.position_trace.write(f"{now:.6f},{node},{p.x:.6f},{p.y:.6f}\n")
        self.engine.schedule(now + self.sample_period, EventKind.MOBILITY_UPDATE, node)

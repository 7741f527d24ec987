"""CBR flows and the lifetime / energy / delay metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class CbrFlow:
    source: int
    destination: int
    rate: float = 4.0
    payload: int = 512
    start: float = 0.0
    stop: float = 300.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.start > self.stop:
            raise ValueError("start must not exceed stop")
        if self.source == self.destination:
            raise ValueError("source and destination must differ")

    @property
    def interval(self) -> float:
        return 1.0 / self.rate

    def offered(self, first: Optional[float] = None) -> int:
        """Number of packets emitted in [start, stop) when the first leaves at ``first``."""
        t0 = self.start if first is None else first
        if t0 >= self.stop:
            return 0
        return math.ceil((self.stop - t0) * self.rate - 1e-9)


@dataclass
class MetricsLedger:
    exhaustion_times: list[tuple[int, float]] = field(default_factory=list)
    per_node_consumed: dict[int, float] = field(default_factory=dict)
    deliveries: list[tuple[float, float]] = field(default_factory=list)
    sent_count: int = 0
    delivered_count: int = 0
    energy_timeline: list[tuple[float, float]] = field(default_factory=list)

    def record_debit(self, node: int, joules: float, t: float = 0.0) -> None:
        self.per_node_consumed[node] = self.per_node_consumed.get(node, 0.0) + joules

    def record_exhaustion(self, node: int, t: float) -> None:
        self.exhaustion_times.append((node, t))

    def record_sent(self) -> None:
        self.sent_count += 1

    def record_delivery(self, sent_at: float, received_at: float) -> None:
        self.deliveries.append((sent_at, received_at))
        self.delivered_count += 1

    def total_consumed(self) -> float:
        return sum(self.per_node_consumed.values())


def network_lifetime(ledger: MetricsLedger, n: int) -> Optional[float]:
    """Time of the n-th battery exhaustion, or None if fewer than n nodes died."""
    if n < 1:
        raise ValueError("n must be at least 1")
    times = sorted(t for _, t in ledger.exhaustion_times)
    return times[n - 1] if len(times) >= n else None


@dataclass(frozen=True)
class Summary:
    lifetime: Optional[float]
    censored: bool
    mean_energy: float
    mean_delay: Optional[float]
    delivery_ratio: float
    lifetime_n: int


def summarize(ledger: MetricsLedger, lifetime_n: int, run_end: Optional[float] = None) -> Summary:
    lifetime = network_lifetime(ledger, lifetime_n)
    censored = lifetime is None
    if censored and run_end is not None:
        lifetime = run_end
    participants = [e for e in ledger.per_node_consumed.values() if e > 0]
    mean_energy = sum(participants) / len(participants) if participants else 0.0
    delays = [r - s for s, r in ledger.deliveries]
    mean_delay = sum(delays) / len(delays) if delays else None
    ratio = ledger.delivered_count / ledger.sent_count if ledger.sent_count else 0.0
    return Summary(lifetime, censored, mean_energy, mean_delay, ratio, lifetime_n)


def default_lifetime_n(node_count: int) -> int:
    return max(1, math.ceil(0.05 * node_count))

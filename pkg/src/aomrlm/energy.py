"""Residual-energy arithmetic and the alpha/beta node classification.

Everything here is a pure function over plain floats so the protocol code,
the analysis tooling and the tests can share one implementation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence


class EnergyError(ValueError):
    pass


class NodeClass(enum.IntEnum):
    LOW = 0
    AVERAGE = 1
    HIGH = 2


@dataclass(frozen=True)
class RadioEnergyProfile:
    """Radio power draw, 281.8 mW each way at 2 Mbit/s by default."""

    tx_power: float = 0.2818
    rx_power: float = 0.2818
    bitrate: float = 2_000_000.0

    def __post_init__(self):
        for name in ("tx_power", "rx_power", "bitrate"):
            if not getattr(self, name) > 0:
                raise EnergyError(f"{name} must be positive")

    def airtime(self, packet_bits: int) -> float:
        return packet_bits / self.bitrate

    def link_cost(self, packet_bits: int) -> float:
        """Symmetric per-link cost of one packet (sender plus receiver)."""
        return transmission_energy(self, packet_bits) + transmission_energy(
            self, packet_bits, receive=True
        )


def transmission_energy(
    profile: RadioEnergyProfile, packet_bits: int, *, receive: bool = False
) -> float:
    """Energy in joules to send (or, with ``receive=True``, receive) one packet."""
    if packet_bits <= 0:
        raise EnergyError("packet_bits must be positive")
    power = profile.rx_power if receive else profile.tx_power
    return power * profile.airtime(packet_bits)


@dataclass(frozen=True)
class PathEnergySummary:
    """Residual energies of the nodes of one path, source first."""

    node_energies: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "node_energies", tuple(float(e) for e in self.node_energies))
        if len(self.node_energies) < 2:
            raise EnergyError("a path has at least a source and a destination")
        if any(e < 0 for e in self.node_energies):
            raise EnergyError("residual energy cannot be negative")

    @property
    def node_count(self) -> int:
        return len(self.node_energies)


def _left_sum(values: Iterable[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total


def path_energy_sum(summary: PathEnergySummary) -> float:
    return _left_sum(summary.node_energies)


def path_energy_average(summary: PathEnergySummary) -> float:
    return path_energy_sum(summary) / summary.node_count


def average_from_sums(sums: Sequence[float], counts: Sequence[int]) -> float:
    """Network average from per-path energy sums and node counts.

    Shared nodes (source, destination, crossings) are counted once per path.
    """
    if not sums:
        raise EnergyError("no discovery paths")
    return _left_sum(sums) / sum(counts)


def discovery_energy_average(paths: Sequence[PathEnergySummary]) -> float:
    return average_from_sums(
        [path_energy_sum(p) for p in paths], [p.node_count for p in paths]
    )


def node_energy_level(residual: float, e_average_net: float) -> float:
    if e_average_net == 0:
        raise EnergyError("degenerate discovery average")
    return residual / e_average_net


def classify_node(level: float, alpha: float) -> NodeClass:
    # alpha itself is not "below alpha", so it belongs to AVERAGE
    if level < alpha:
        return NodeClass.LOW
    if level < 1.0:
        return NodeClass.AVERAGE
    return NodeClass.HIGH


def alpha_lower_bound(t_net: float, k_nodes: int) -> float:
    """Smallest admissible alpha when K forwarding nodes share participation ``t_net``."""
    if not 0 < t_net < 1:
        raise EnergyError("t_net must lie in (0, 1)")
    if k_nodes < 1:
        raise EnergyError("k_nodes must be a positive integer")
    return t_net ** (1.0 / k_nodes)


def alpha_upper_bound(beta: float, residual: float) -> float:
    if residual == 0:
        raise EnergyError("exhausted node has no bound")
    return beta / residual


@dataclass(frozen=True)
class AlphaPolicy:
    alpha: float = 0.42
    t_net: float = 2.0**-40
    k_nodes: int = 30

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise EnergyError("alpha must lie in (0, 1)")
        bound = alpha_lower_bound(self.t_net, self.k_nodes)
        if self.alpha < bound:
            raise EnergyError(
                f"alpha {self.alpha} is below t_net**(1/K) = {bound:.4f} for K={self.k_nodes}"
            )

    @property
    def lower_bound(self) -> float:
        return alpha_lower_bound(self.t_net, self.k_nodes)

    def classify(self, residual: float, beta: float) -> NodeClass:
        return classify_node(node_energy_level(residual, beta), self.alpha)

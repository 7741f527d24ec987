"""Scenario files: flat JSON objects whose absent keys take default values.

An empty object ``{}`` is a complete scenario (the full 30..190-node sweep, 20 seeds,
both protocols). Every field may be overridden.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Union

from .energy import AlphaPolicy, EnergyError
from .metrics import CbrFlow
from .protocol import PROTOCOLS

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    def __init__(self, field_name: str, problem: str):
        super().__init__(f"{field_name}: {problem}")
        self.field = field_name


@dataclass
class Scenario:
    schema: int = SCHEMA_VERSION
    node_count: Union[int, list[int]] = field(default_factory=lambda: list(range(30, 191, 20)))
    terrain_width: float = 840.0
    terrain_height: float = 840.0
    range_m: float = 250.0
    max_speed: float = 5.0
    pause_time: float = 0.0
    duration: float = 300.0
    flows: Union[str, list[dict]] = "random:1"
    rate: float = 4.0
    payload: int = 512
    protocols: list[str] = field(default_factory=lambda: list(PROTOCOLS))
    alpha: float = 0.42
    t_net: float = 2.0**-40
    k_nodes: int = 30
    rreq_wait: float = 1.0
    rrep_wait: float = 1.0
    hello_interval: float = 1.0
    route_timeout: float = 10.0
    lifetime_n: Union[int, None] = None
    seeds: Union[int, list[int]] = 20
    energy_init: list[float] = field(default_factory=lambda: [10.0, 60.0])
    tx_power: float = 0.2818
    rx_power: float = 0.2818
    bitrate: float = 2_000_000.0
    mac_jitter: float = 0.001
    loss_probability: float = 0.0
    sample_period: float = 0.1

    # ------------------------------------------------------------- access

    @property
    def node_counts(self) -> list[int]:
        return [self.node_count] if isinstance(self.node_count, int) else list(self.node_count)

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)

    @property
    def alpha_policy(self) -> AlphaPolicy:
        return AlphaPolicy(self.alpha, self.t_net, self.k_nodes)

    def explicit_flows(self) -> list[CbrFlow]:
        """Flows given literally in the file (empty when using ``random:k``)."""
        if isinstance(self.flows, str):
            return []
        return [
            CbrFlow(
                f["source"], f["destination"], f.get("rate", self.rate), f.get("payload", self.payload),
                f.get("start", 0.0), f.get("stop", self.duration),
            )
            for f in self.flows
        ]

    def random_flow_count(self) -> int:
        return int(self.flows.split(":", 1)[1]) if isinstance(self.flows, str) else 0

    # --------------------------------------------------------- validation

    def validate(self) -> "Scenario":
        if self.schema != SCHEMA_VERSION:
            raise ScenarioError("schema", f"unsupported version {self.schema}")
        counts = self.node_counts
        if not counts or any(not isinstance(n, int) or n < 2 for n in counts):
            raise ScenarioError("node_count", "every node count must be an integer >= 2")
        for name in ("terrain_width", "terrain_height", "range_m", "duration", "rate",
                     "rreq_wait", "rrep_wait", "hello_interval", "route_timeout",
                     "tx_power", "rx_power", "bitrate", "sample_period"):
            if not getattr(self, name) > 0:
                raise ScenarioError(name, "must be positive")
        for name in ("max_speed", "pause_time", "mac_jitter"):
            if getattr(self, name) < 0:
                raise ScenarioError(name, "cannot be negative")
        if not 0.0 <= self.loss_probability < 1.0:
            raise ScenarioError("loss_probability", "must lie in [0, 1)")
        if self.payload <= 0:
            raise ScenarioError("payload", "must be positive")
        if not self.protocols or any(p not in PROTOCOLS for p in self.protocols):
            raise ScenarioError("protocols", f"choose from {', '.join(PROTOCOLS)}")
        try:
            self.alpha_policy
        except EnergyError as exc:
            raise ScenarioError("alpha", str(exc)) from None
        if self.lifetime_n is not None and self.lifetime_n < 1:
            raise ScenarioError("lifetime_n", "must be at least 1")
        if not self.seed_list:
            raise ScenarioError("seeds", "need at least one seed")
        lo, hi = (self.energy_init + [None, None])[:2]
        if len(self.energy_init) != 2 or lo is None or not 0 < lo <= hi:
            raise ScenarioError("energy_init", "expected [low, high] with 0 < low <= high")
        if isinstance(self.flows, str):
            kind, _, k = self.flows.partition(":")
            if kind != "random" or not k.isdigit() or int(k) < 1:
                raise ScenarioError("flows", "expected 'random:k' or a list of flow objects")
        else:
            try:
                flows = self.explicit_flows()
            except (KeyError, TypeError, ValueError) as exc:
                raise ScenarioError("flows", f"bad flow entry ({exc})") from None
            for f in flows:
                if max(f.source, f.destination) >= min(counts) or min(f.source, f.destination) < 0:
                    raise ScenarioError("flows", f"flow {f.source}->{f.destination} names a missing node")
        return self

    # ---------------------------------------------------------------- I/O

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        if not isinstance(data, dict):
            raise ScenarioError("<root>", "scenario must be a JSON object")
        data = dict(data)
        if "protocol" in data:
            value = data.pop("protocol")
            data["protocols"] = [value] if isinstance(value, str) else value
        defaults = cls()
        known = {f.name for f in fields(cls)}
        for key, value in data.items():
            if key not in known:
                raise ScenarioError(key, "unknown field")
            default = getattr(defaults, key)
            if isinstance(default, float) and (isinstance(value, bool) or not isinstance(value, (int, float))):
                raise ScenarioError(key, f"expected a number, got {value!r}")
        return cls(**data).validate()

    @classmethod
    def loads(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ScenarioError("<file>", f"invalid JSON ({exc})") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Scenario":
        return cls.loads(Path(path).read_text())

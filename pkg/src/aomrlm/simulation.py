"""One simulation run: builds the world from a scenario and drives every router."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, TextIO

from .energy import RadioEnergyProfile
from .engine import EventKind, RngStreams, Simulator
from .metrics import CbrFlow, MetricsLedger, Summary, default_lifetime_n, summarize
from .protocol import Data, ProtocolConfig, Router
from .scenario import Scenario
from .world import MacProfile, MobilityState, Terrain, World, draw_leg

SAMPLE_PERIOD = 1.0  # energy timeline resolution, seconds


@dataclass
class RunResult:
    seed: int
    protocol: str
    node_count: int
    duration: float
    summary: Summary
    ledger: MetricsLedger
    initial: list[float]
    residual: list[float]
    consumed: list[float]
    stats: dict = field(default_factory=dict)
    observations: list = field(default_factory=list)

    def row(self) -> dict:
        s = self.summary
        return {
            "seed": self.seed,
            "protocol": self.protocol,
            "nodes": self.node_count,
            "lifetime_s": s.lifetime,
            "censored": s.censored,
            "mean_energy_J": s.mean_energy,
            "mean_delay_s": s.mean_delay,
            "delivery_ratio": s.delivery_ratio,
        }

    def curves(self) -> dict:
        """Plot-ready raw series for the ``curves`` subcommand."""
        return {
            "seed": self.seed,
            "protocol": self.protocol,
            "nodes": self.node_count,
            "duration": self.duration,
            "exhaustions": [t for _, t in sorted(self.ledger.exhaustion_times, key=lambda x: x[1])],
            "energy_timeline": self.ledger.energy_timeline,
            "mean_delay_s": self.summary.mean_delay,
        }

    def energy_conserved(self, rel_tol: float = 1e-9) -> bool:
        for init, res, used in zip(self.initial, self.residual, self.consumed):
            if abs(init - (res + used)) > rel_tol * max(init, 1e-300):
                return False
        total_world = sum(self.consumed)
        total_ledger = self.ledger.total_consumed()
        return abs(total_world - total_ledger) <= rel_tol * max(total_world, 1e-300)


class Network:
    """Glue between the engine, the physical world and one :class:`Router` per node.

    Implements the ``net`` interface the routers expect.
    """

    def __init__(
        self,
        scenario: Scenario,
        node_count: int,
        seed: int,
        protocol: str,
        *,
        flows: Optional[list[CbrFlow]] = None,
        positions=None,
        energies: Optional[list[float]] = None,
        message_trace: Optional[TextIO] = None,
        position_trace: Optional[TextIO] = None,
        instrument: bool = False,
        hello: bool = True,
    ):
        self.scenario = scenario
        self.node_count = node_count
        self.seed = seed
        self.protocol = protocol
        self.engine = Simulator()
        self.rng = RngStreams(seed)
        self.message_trace = message_trace
        self.instrument = instrument
        self.observations: list[tuple[str, dict]] = []
        self.ledger = MetricsLedger()

        terrain = Terrain(scenario.terrain_width, scenario.terrain_height)
        topo = self.rng.stream("topology")
        if positions is None:
            positions = [terrain.random_position(topo) for _ in range(node_count)]
        if energies is None:
            e_rng = self.rng.stream("energy-init")
            lo, hi = scenario.energy_init
            energies = [e_rng.uniform(lo, hi) for _ in range(node_count)]
        mobility_rngs = [self.rng.stream("mobility", i) for i in range(node_count)]
        if scenario.max_speed > 0:
            mobility = [draw_leg(p, 0.0, mobility_rngs[i], terrain, scenario.max_speed)
                        for i, p in enumerate(positions)]
        else:
            mobility = [MobilityState(p, p, 0.0) for p in positions]

        self.radio = RadioEnergyProfile(scenario.tx_power, scenario.rx_power, scenario.bitrate)
        self.world = World(
            self.engine, mobility, energies,
            terrain=terrain, range_m=scenario.range_m, radio=self.radio,
            mac=MacProfile(0.0, scenario.mac_jitter, scenario.loss_probability),
            mac_rng=self.rng.stream("mac"), mobility_rngs=mobility_rngs,
            max_speed=scenario.max_speed, pause_time=scenario.pause_time,
            sample_period=scenario.sample_period, position_trace=position_trace,
        )
        self.world.on_receive = self._receive
        self.world.debit_listeners.append(self.ledger.record_debit)
        self.world.exhaustion_listeners.append(self.ledger.record_exhaustion)

        config = ProtocolConfig(
            mode=protocol, alpha=scenario.alpha, rreq_wait=scenario.rreq_wait,
            rrep_wait=scenario.rrep_wait, hello_interval=scenario.hello_interval if hello else None,
            route_timeout=scenario.route_timeout,
        )
        self.routers = [Router(i, self, config) for i in range(node_count)]

        if flows is None:
            flows = scenario.explicit_flows()
            for _ in range(scenario.random_flow_count()):
                src, dst = topo.sample(range(node_count), 2)
                flows.append(CbrFlow(src, dst, scenario.rate, scenario.payload, 0.0, scenario.duration))
        self.flows = flows
        self.lifetime_n = scenario.lifetime_n or default_lifetime_n(node_count)

        self.engine.on(EventKind.TIMER_FIRE, self._on_timer)
        self.engine.on(EventKind.TRAFFIC_TICK, self._on_tick)
        self._started = False

    # ----------------------------------------------------------- net API

    @property
    def now(self) -> float:
        return self.engine.now

    def residual(self, node: int) -> float:
        return self.world.residual[node]

    def _trace(self, sender: int, target, message) -> None:
        if self.message_trace is None:
            return
        dest = "*" if target is None else str(target)
        self.message_trace.write(f"@{self.engine.now:.9f} {sender}->{dest}\n")
        for line in message.dump():
            self.message_trace.write(f"  {line}\n")

    def broadcast(self, sender: int, message) -> None:
        self._trace(sender, None, message)
        self.world.transmit(sender, message)

    def unicast(self, sender: int, target: int, message) -> None:
        self._trace(sender, target, message)
        self.world.transmit(sender, message, target)

    def set_timer(self, node: int, delay: float, kind: str, data) -> None:
        self.engine.schedule_in(delay, EventKind.TIMER_FIRE, node, (kind, data))

    def data_delivered(self, packet: Data) -> None:
        self.ledger.record_delivery(packet.created_at, self.engine.now)

    def observe(self, name: str, **fields) -> None:
        if not self.instrument:
            return
        fields["t"] = self.engine.now
        if name == "data_departure":
            # recompute the best held class straight from the table, independently of the router
            ps = self.routers[fields["node"]].path_sets[fields["destination"]]
            fields["held_max"] = max(r.path_class for r in ps.routes())
        self.observations.append((name, fields))

    # -------------------------------------------------------- dispatching

    def _receive(self, receiver: int, sender: int, message) -> None:
        self.routers[receiver].receive(sender, message)

    def _on_timer(self, event) -> None:
        kind, data = event.payload
        if event.target is None:
            if kind == "sample":
                self.ledger.energy_timeline.append((self.engine.now, sum(self.world.consumed)))
                self.engine.schedule_in(SAMPLE_PERIOD, EventKind.TIMER_FIRE, None, ("sample", None))
            return
        if self.world.alive[event.target]:
            self.routers[event.target].on_timer(kind, data)

    def _on_tick(self, event) -> None:
        index, number = event.payload
        flow = self.flows[index]
        now = self.engine.now
        self.ledger.record_sent()
        if self.world.alive[flow.source]:
            packet = Data(flow.source, flow.destination, index, number, now, flow.payload)
            self.routers[flow.source].send_data(packet)
        nxt = now + flow.interval
        if nxt < flow.stop:
            self.engine.schedule(nxt, EventKind.TRAFFIC_TICK, flow.source, (index, number + 1))

    # ---------------------------------------------------------------- run

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        self.world.start_mobility()
        if self.routers[0].config.hello_interval:
            h_rng = self.rng.stream("hello")
            for i in range(self.node_count):
                self.set_timer(i, h_rng.uniform(0.0, self.scenario.hello_interval), "hello", None)
        t_rng = self.rng.stream("traffic")
        for index, flow in enumerate(self.flows):
            first = flow.start + t_rng.uniform(0.0, flow.interval)
            if first < flow.stop:
                self.engine.schedule(first, EventKind.TRAFFIC_TICK, flow.source, (index, 0))
        self.engine.schedule(0.0, EventKind.TIMER_FIRE, None, ("sample", None))

    def run(self, until: Optional[float] = None) -> RunResult:
        self.start()
        end = self.scenario.duration if until is None else until
        self.engine.run(end)
        return self.result()

    def result(self) -> RunResult:
        stats: dict = {}
        for r in self.routers:
            for k, v in r.stats.items():
                stats[k] = stats.get(k, 0) + v
        stats["transmissions"] = self.world.tx_count
        stats["deliveries"] = self.world.delivery_count
        stats["events"] = self.engine.dispatched
        return RunResult(
            self.seed, self.protocol, self.node_count, self.engine.now,
            summarize(self.ledger, self.lifetime_n, run_end=self.engine.now),
            self.ledger, list(self.world.initial), list(self.world.residual),
            list(self.world.consumed), stats, self.observations,
        )


def simulate(scenario: Scenario, node_count: int, seed: int, protocol: str, **kwargs) -> RunResult:
    return Network(scenario, node_count, seed, protocol, **kwargs).run()

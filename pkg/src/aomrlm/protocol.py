"""AOMR-LM per-node routing state machine, with an AOMDV baseline mode.

A :class:`Router` never touches the event queue or the radio directly. It talks
to a ``net`` object that provides::

    net.now                         current simulation time
    net.residual(node)              battery level
    net.broadcast(sender, msg)
    net.unicast(sender, target, msg)
    net.set_timer(node, delay, kind, data)
    net.data_delivered(packet)
    net.observe(name, **fields)     instrumentation hook, may be a no-op

so the handlers can be driven by the simulator or by a recording fake in tests.
"""

from __future__ import annotations

import math
from collections import Counter, OrderedDict, deque
from dataclasses import dataclass, field, fields, replace
from typing import ClassVar, Optional

from .energy import NodeClass, average_from_sums, classify_node, node_energy_level

INF = math.inf

AOMR_LM = "aomr-lm"
AOMDV = "aomdv"
PROTOCOLS = (AOMR_LM, AOMDV)


@dataclass(frozen=True)
class ProtocolConfig:
    mode: str = AOMR_LM
    alpha: float = 0.42
    rreq_wait: float = 1.0
    rrep_wait: float = 1.0
    hello_interval: Optional[float] = 1.0
    allowed_hello_loss: int = 3
    route_timeout: float = 10.0
    # how long past rreq_wait a source waits for its first RREP before re-flooding
    discovery_timeout: float = 1.0
    buffer_size: int = 64
    rreq_cache_size: int = 100

    def __post_init__(self):
        if self.mode not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.mode!r}")


# ---------------------------------------------------------------- messages


class _Message:
    kind: ClassVar[str] = "?"
    size_bytes: ClassVar[int] = 0

    def dump(self) -> list[str]:
        """Stable one-line-per-field rendering used by the trace log."""
        lines = [f"kind={self.kind}"]
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, NodeClass):
                value = value.name
            elif isinstance(value, float):
                value = repr(value)
            elif isinstance(value, tuple):
                value = "/".join(map(str, value))
            lines.append(f"{f.name}={value}")
        return lines


@dataclass(frozen=True)
class Rreq(_Message):
    kind: ClassVar[str] = "RREQ"
    size_bytes: ClassVar[int] = 64

    source: int
    destination: int
    rreq_id: int
    source_seqnum: int
    dest_seqnum_known: int
    hopcount: int
    e_sum: float
    sender_energy: float

    def relayed(self, hopcount: int, own_energy: float) -> "Rreq":
        return replace(self, hopcount=hopcount, e_sum=self.e_sum + own_energy, sender_energy=own_energy)


@dataclass(frozen=True)
class Rrep(_Message):
    kind: ClassVar[str] = "RREP"
    size_bytes: ClassVar[int] = 64

    source: int  # discovery originator, where the reply is headed
    destination: int  # node that generated the reply
    dest_seqnum: int
    hopcount: int
    beta: float
    path_class: NodeClass
    reply_id: int

    @property
    def path_id(self) -> tuple[int, int]:
        return (self.dest_seqnum, self.reply_id)


@dataclass(frozen=True)
class Rerr(_Message):
    kind: ClassVar[str] = "RERR"
    size_bytes: ClassVar[int] = 32

    unreachable_destination: int
    broken_nexthop: int  # -1 when the relay simply had no route
    origin: int
    source: int
    path: tuple[int, int]


@dataclass(frozen=True)
class Hello(_Message):
    kind: ClassVar[str] = "HELLO"
    size_bytes: ClassVar[int] = 32

    origin: int


@dataclass(frozen=True)
class Data(_Message):
    kind: ClassVar[str] = "DATA"

    source: int
    destination: int
    flow: int
    number: int
    created_at: float
    payload_bytes: int = 512
    path: tuple[int, int] = (-1, -1)

    @property
    def size_bytes(self) -> int:
        return self.payload_bytes


# ---------------------------------------------------------- routing tables


@dataclass
class RouteListItem:
    nexthop: int
    hopcount: int
    neighbor_energy: float
    marked: bool = False
    neighbor_class: Optional[NodeClass] = None


@dataclass
class RouteEntry:
    """One routing-table entry: destination, seqnum, advertised hopcount, route list, timeout."""

    destination: int
    sequence_number: int
    advertised_hopcount: float = INF
    route_list: list[RouteListItem] = field(default_factory=list)
    expiration_timeout: float = INF

    def item(self, nexthop: int) -> Optional[RouteListItem]:
        for it in self.route_list:
            if it.nexthop == nexthop:
                return it
        return None

    def insert(self, item: RouteListItem) -> bool:
        if self.item(item.nexthop) is not None:
            return False
        self.route_list.append(item)
        return True

    def remove(self, nexthop: int) -> bool:
        before = len(self.route_list)
        self.route_list = [it for it in self.route_list if it.nexthop != nexthop]
        return len(self.route_list) != before


@dataclass
class ReverseCopy:
    nexthop: int
    hopcount: int
    e_sum: float
    node_count: int


@dataclass
class DiscoveryContext:
    """What a destination gathers from RREQ copies during its wait window."""

    source: int
    source_seqnum: int
    window_deadline: float
    collected: list[ReverseCopy] = field(default_factory=list)
    replied: bool = False

    def add(self, copy: ReverseCopy, now: float) -> bool:
        if self.replied or now > self.window_deadline:
            return False
        self.collected.append(copy)
        return True

    def beta(self) -> float:
        return average_from_sums([c.e_sum for c in self.collected], [c.node_count for c in self.collected])

    def reply_targets(self) -> list[ReverseCopy]:
        """One copy per distinct nexthop, the lowest hopcount one, in arrival order."""
        best: dict[int, ReverseCopy] = {}
        for c in self.collected:
            if c.nexthop not in best or c.hopcount < best[c.nexthop].hopcount:
                best[c.nexthop] = c
        return list(best.values())


def destination_reply(
    ctx: DiscoveryContext, destination: int, dest_seqnum: int, residual: float, alpha: float
) -> list[tuple[int, Rrep]]:
    """Close a discovery window: returns ``(nexthop, RREP)`` pairs, all sharing one beta."""
    beta = ctx.beta()
    own_class = classify_node(node_energy_level(residual, beta), alpha)
    replies = []
    for reply_id, copy in enumerate(ctx.reply_targets(), start=1):
        replies.append((copy.nexthop, Rrep(ctx.source, destination, dest_seqnum, 0, beta, own_class, reply_id)))
    return replies


def choose_reverse_hop(self_class: NodeClass, candidates: list[RouteListItem]) -> RouteListItem:
    """Pick the neighbour to carry an RREP one step closer to the source.

    Same class first, else the lowest class above, else the highest class below.
    Ties: most energy, then fewest hops, then lowest id.
    """
    same = [c for c in candidates if c.neighbor_class == self_class]
    if same:
        pool = same
    else:
        above = [c for c in candidates if c.neighbor_class > self_class]
        if above:
            target = min(c.neighbor_class for c in above)
        else:
            target = max(c.neighbor_class for c in candidates)
        pool = [c for c in candidates if c.neighbor_class == target]
    return min(pool, key=lambda c: (-c.neighbor_energy, c.hopcount, c.nexthop))


@dataclass
class PathHop:
    """Forward state for one materialized path at a relay."""

    source: int
    nexthop: int  # toward the destination
    prevhop: int  # toward the source
    hopcount: int


@dataclass
class SourceRoute:
    path_id: tuple[int, int]
    nexthop: int
    hopcount: int
    path_class: NodeClass
    order: int


@dataclass
class SourcePathSet:
    destination: int
    dest_seqnum: int = -1
    classes: dict = field(default_factory=lambda: {c: [] for c in NodeClass})
    active: Optional[SourceRoute] = None
    rrep_deadline: Optional[float] = None
    ready: bool = False
    discovering: bool = False
    generation: int = 0
    _order: int = 0

    def add(self, route: SourceRoute) -> None:
        self.classes[route.path_class].append(route)

    def next_order(self) -> int:
        self._order += 1
        return self._order

    def routes(self) -> list[SourceRoute]:
        return [r for c in NodeClass for r in self.classes[c]]

    def find(self, path_id) -> Optional[SourceRoute]:
        for r in self.routes():
            if r.path_id == path_id:
                return r
        return None

    def remove(self, path_id) -> Optional[SourceRoute]:
        for c in NodeClass:
            for r in self.classes[c]:
                if r.path_id == path_id:
                    self.classes[c].remove(r)
                    if self.active is not None and self.active.path_id == path_id:
                        self.active = None
                    return r
        return None

    def best_class(self) -> Optional[NodeClass]:
        for c in sorted(NodeClass, reverse=True):
            if self.classes[c]:
                return c
        return None

    def is_empty(self) -> bool:
        return self.best_class() is None

    def clear(self) -> None:
        self.classes = {c: [] for c in NodeClass}
        self.active = None
        self.rrep_deadline = None
        self.ready = False


def select_path(paths: SourcePathSet, mode: str = AOMR_LM) -> Optional[SourceRoute]:
    if mode == AOMDV:
        routes = paths.routes()
        return min(routes, key=lambda r: r.order) if routes else None
    best = paths.best_class()
    if best is None:
        return None
    return min(paths.classes[best], key=lambda r: (r.hopcount, r.nexthop, r.order))


# ------------------------------------------------------------------ router


class Router:
    def __init__(self, node_id: int, net, config: ProtocolConfig = ProtocolConfig()):
        self.id = node_id
        self.net = net
        self.config = config
        self.seqnum = 0
        self.rreq_id = 0
        self.routing_table: dict[int, RouteEntry] = {}
        self.paths: dict[tuple[int, tuple[int, int]], PathHop] = {}
        self.path_seq: dict[int, int] = {}
        self.discoveries: dict[tuple[int, int], DiscoveryContext] = {}
        self.path_sets: dict[int, SourcePathSet] = {}
        self.buffers: dict[int, deque] = {}
        self._seen_rreq: OrderedDict = OrderedDict()
        self._seen_rrep: OrderedDict = OrderedDict()
        self._heard: set[int] = set()
        self.misses: dict[int, int] = {}
        self.stats: Counter = Counter()

    @property
    def aomr(self) -> bool:
        return self.config.mode == AOMR_LM

    def _classify(self, energy: float, beta: float) -> NodeClass:
        return classify_node(node_energy_level(energy, beta), self.config.alpha)

    @staticmethod
    def _remember(cache: OrderedDict, key, limit: int) -> bool:
        """True if ``key`` is new."""
        if key in cache:
            return False
        cache[key] = True
        while len(cache) > limit:
            cache.popitem(last=False)
        return True

    def entry(self, destination: int) -> Optional[RouteEntry]:
        e = self.routing_table.get(destination)
        if e is not None and e.expiration_timeout < self.net.now:
            del self.routing_table[destination]
            return None
        return e

    def receive(self, sender: int, message) -> None:
        handler = {
            "RREQ": self.handle_rreq,
            "RREP": self.handle_rrep,
            "RERR": self.handle_rerr,
            "HELLO": self.handle_hello,
            "DATA": self.handle_data,
        }[message.kind]
        handler(sender, message)

    # ------------------------------------------------------------ discovery

    def start_discovery(self, destination: int) -> None:
        self.seqnum += 1
        self.rreq_id += 1
        ps = self.path_sets.setdefault(destination, SourcePathSet(destination))
        ps.clear()
        ps.discovering = True
        ps.generation += 1
        w = self.net.residual(self.id)
        msg = Rreq(self.id, destination, self.rreq_id, self.seqnum, max(ps.dest_seqnum, 0), 0, w, w)
        self._remember(self._seen_rreq, (self.id, self.rreq_id), self.config.rreq_cache_size)
        self.stats["rreq_floods"] += 1
        self.net.observe("discovery", node=self.id, destination=destination, seqnum=self.seqnum)
        self.net.broadcast(self.id, msg)
        self.net.set_timer(
            self.id, self.config.rreq_wait + self.config.discovery_timeout,
            "discovery_timeout", (destination, ps.generation),
        )

    def handle_rreq(self, sender: int, msg: Rreq) -> None:
        if msg.source == self.id:
            return
        now = self.net.now
        entry = self.entry(msg.source)
        at_destination = self.id == msg.destination
        if entry is None or entry.sequence_number < msg.source_seqnum:
            if at_destination:
                self.routing_table[msg.source] = RouteEntry(
                    msg.source, msg.source_seqnum, 0, [], now + self.config.route_timeout
                )
                self._collect(sender, msg)
                return
            entry = RouteEntry(msg.source, msg.source_seqnum, INF, [], now + self.config.route_timeout)
            self.routing_table[msg.source] = entry
            entry.insert(RouteListItem(sender, msg.hopcount + 1, msg.sender_energy))
            # re-advertising fixes the advertised hopcount for this seqnum
            entry.advertised_hopcount = msg.hopcount + 1
            if self._remember(self._seen_rreq, (msg.source, msg.rreq_id), self.config.rreq_cache_size):
                self.net.broadcast(self.id, msg.relayed(msg.hopcount + 1, self.net.residual(self.id)))
        elif entry.sequence_number == msg.source_seqnum:
            if at_destination:
                self._collect(sender, msg)
            elif entry.advertised_hopcount > msg.hopcount:
                entry.insert(RouteListItem(sender, msg.hopcount + 1, msg.sender_energy))
        # older seqnum: stale copy, dropped

    def _collect(self, sender: int, msg: Rreq) -> None:
        now = self.net.now
        key = (msg.source, msg.source_seqnum)
        ctx = self.discoveries.get(key)
        if ctx is None:
            ctx = DiscoveryContext(msg.source, msg.source_seqnum, now + self.config.rreq_wait)
            self.discoveries[key] = ctx
            self.net.set_timer(self.id, self.config.rreq_wait, "rreq_window", key)
        w = self.net.residual(self.id)
        ctx.add(ReverseCopy(sender, msg.hopcount + 1, msg.e_sum + w, msg.hopcount + 2), now)

    def _close_window(self, key) -> None:
        ctx = self.discoveries.pop(key, None)
        if ctx is None or not ctx.collected:
            return
        ctx.replied = True
        self.seqnum += 1
        replies = destination_reply(ctx, self.id, self.seqnum, self.net.residual(self.id), self.config.alpha)
        for nexthop, rrep in replies:
            self.net.observe("rrep_hop", node=self.id, nexthop=nexthop, rrep=rrep, marked_before=False)
            self.net.unicast(self.id, nexthop, rrep)

    def handle_rrep(self, sender: int, msg: Rrep) -> None:
        key = (msg.source, msg.destination, msg.dest_seqnum, msg.reply_id)
        if not self._remember(self._seen_rrep, key, self.config.rreq_cache_size):
            return
        if msg.source == self.id:
            self._file_path(sender, msg)
            return
        if msg.dest_seqnum < self.path_seq.get(msg.destination, -1):
            return
        entry = self.entry(msg.source)
        if entry is None:
            return
        candidates = [it for it in entry.route_list if not it.marked]
        if not candidates:
            self.stats["rrep_dropped"] += 1
            return
        self_class = self._classify(self.net.residual(self.id), msg.beta)
        for it in candidates:
            it.neighbor_class = self._classify(it.neighbor_energy, msg.beta)
        chosen = choose_reverse_hop(self_class, candidates) if self.aomr else candidates[0]
        self.net.observe("rrep_hop", node=self.id, nexthop=chosen.nexthop, rrep=msg, marked_before=chosen.marked)
        chosen.marked = True
        entry.expiration_timeout = self.net.now + self.config.route_timeout
        self._store_hop(msg, sender, chosen.nexthop)
        path_class = min(msg.path_class, chosen.neighbor_class, self_class)
        self.net.unicast(self.id, chosen.nexthop, replace(msg, hopcount=msg.hopcount + 1, path_class=path_class))

    def _store_hop(self, msg: Rrep, sender: int, prevhop: int) -> None:
        dest = msg.destination
        if msg.dest_seqnum > self.path_seq.get(dest, -1):
            self.path_seq[dest] = msg.dest_seqnum
            for key in [k for k in self.paths if k[0] == dest]:
                del self.paths[key]
        self.paths[(dest, msg.path_id)] = PathHop(msg.source, sender, prevhop, msg.hopcount + 1)

    def _file_path(self, sender: int, msg: Rrep) -> None:
        ps = self.path_sets.setdefault(msg.destination, SourcePathSet(msg.destination))
        if msg.dest_seqnum < ps.dest_seqnum:
            return
        if msg.dest_seqnum > ps.dest_seqnum:
            if ps.dest_seqnum >= 0 and not ps.is_empty():
                ps.clear()
            ps.dest_seqnum = msg.dest_seqnum
        path_class = min(msg.path_class, self._classify(self.net.residual(self.id), msg.beta))
        ps.add(SourceRoute(msg.path_id, sender, msg.hopcount + 1, path_class, ps.next_order()))
        self.stats["paths_filed"] += 1
        if ps.rrep_deadline is None and not ps.ready:
            ps.rrep_deadline = self.net.now + self.config.rrep_wait
            self.net.set_timer(self.id, self.config.rrep_wait, "rrep_window", (msg.destination, ps.generation))

    # ----------------------------------------------------------------- data

    def send_data(self, packet: Data) -> None:
        """Entry point for locally generated traffic."""
        dest = packet.destination
        ps = self.path_sets.get(dest)
        if ps is not None and ps.ready and self._transmit_on_best(ps, packet):
            return
        buf = self.buffers.setdefault(dest, deque())
        buf.append(packet)
        while len(buf) > self.config.buffer_size:
            buf.popleft()
            self.stats["buffer_overflow"] += 1
        if ps is None or not ps.discovering:
            self.start_discovery(dest)

    def _transmit_on_best(self, ps: SourcePathSet, packet: Data) -> bool:
        best = ps.best_class()
        if best is None:
            return False
        if ps.active is None or (self.aomr and ps.active.path_class < best):
            ps.active = select_path(ps, self.config.mode)
        route = ps.active
        self.net.observe(
            "data_departure", node=self.id, destination=ps.destination,
            path_class=route.path_class, max_class=best, path=route.path_id,
        )
        self.stats["data_sent"] += 1
        self.net.unicast(self.id, route.nexthop, replace(packet, path=route.path_id))
        return True

    def _flush(self, dest: int) -> None:
        ps = self.path_sets[dest]
        buf = self.buffers.get(dest)
        while buf and self._transmit_on_best(ps, buf[0]):
            buf.popleft()

    def handle_data(self, sender: int, packet: Data) -> None:
        if packet.destination == self.id:
            self.net.data_delivered(packet)
            return
        hop = self.paths.get((packet.destination, packet.path))
        if hop is None:
            self.stats["data_no_route"] += 1
            self.net.unicast(
                self.id, sender, Rerr(packet.destination, -1, self.id, packet.source, packet.path)
            )
            return
        self.net.unicast(self.id, hop.nexthop, packet)

    # ---------------------------------------------------------- maintenance

    def handle_rerr(self, sender: int, msg: Rerr) -> None:
        if msg.source == self.id:
            self.stats["rerr_at_source"] += 1
            self.net.observe("rerr_at_source", node=self.id, rerr=msg)
            self._lose_path(msg.unreachable_destination, msg.path)
            return
        hop = self.paths.pop((msg.unreachable_destination, msg.path), None)
        if hop is None:
            return
        self.net.unicast(self.id, hop.prevhop, msg)

    def _lose_path(self, dest: int, path_id) -> None:
        ps = self.path_sets.get(dest)
        if ps is None or ps.remove(path_id) is None:
            return
        if ps.is_empty():
            ps.clear()
            if not ps.discovering:
                self.start_discovery(dest)
        elif ps.ready and ps.active is None:
            ps.active = select_path(ps, self.config.mode)
            self.net.observe("failover", node=self.id, destination=dest, path=ps.active.path_id)

    def handle_hello(self, sender: int, msg: Hello) -> None:
        self._heard.add(sender)
        if sender in self.misses:
            self.misses[sender] = 0

    def monitored(self) -> set[int]:
        watched = set()
        for dest in list(self.routing_table):
            e = self.entry(dest)
            if e is not None:
                watched.update(it.nexthop for it in e.route_list)
        watched.update(hop.nexthop for hop in self.paths.values())
        for ps in self.path_sets.values():
            watched.update(r.nexthop for r in ps.routes())
        return watched

    def hello_tick(self) -> None:
        """Periodic HELLO plus miss counting for every neighbour we route through."""
        self.net.broadcast(self.id, Hello(self.id))
        watched = self.monitored()
        failed = []
        for k in sorted(watched):
            if k not in self.misses:
                self.misses[k] = 0  # started watching during the last interval
            elif k in self._heard:
                self.misses[k] = 0
            else:
                self.misses[k] += 1
                if self.misses[k] >= self.config.allowed_hello_loss:
                    failed.append(k)
        self.misses = {k: v for k, v in self.misses.items() if k in watched}
        self._heard.clear()
        for k in failed:
            self.link_failed(k)

    def link_failed(self, neighbor: int) -> None:
        self.stats["link_failures"] += 1
        misses = self.misses.pop(neighbor, None)
        self.net.observe("link_failure", node=self.id, neighbor=neighbor, misses=misses)
        for e in self.routing_table.values():
            e.remove(neighbor)
        for (dest, path_id), hop in list(self.paths.items()):
            if hop.nexthop == neighbor:
                del self.paths[(dest, path_id)]
                self.net.unicast(self.id, hop.prevhop, Rerr(dest, neighbor, self.id, hop.source, path_id))
        for dest, ps in list(self.path_sets.items()):
            for route in [r for r in ps.routes() if r.nexthop == neighbor]:
                self.handle_rerr(self.id, Rerr(dest, neighbor, self.id, self.id, route.path_id))

    # --------------------------------------------------------------- timers

    def on_timer(self, kind: str, data) -> None:
        if kind == "hello":
            self.hello_tick()
            if self.config.hello_interval:
                self.net.set_timer(self.id, self.config.hello_interval, "hello", None)
        elif kind == "rreq_window":
            self._close_window(data)
        elif kind == "rrep_window":
            dest, generation = data
            ps = self.path_sets.get(dest)
            if ps is None or ps.generation != generation or ps.ready:
                return
            ps.discovering = False
            ps.rrep_deadline = None
            if ps.is_empty():
                if self.buffers.get(dest):
                    self.start_discovery(dest)
                return
            ps.ready = True
            ps.active = select_path(ps, self.config.mode)
            self._flush(dest)
        elif kind == "discovery_timeout":
            dest, generation = data
            ps = self.path_sets.get(dest)
            if ps is None or ps.generation != generation or not ps.discovering:
                return
            if ps.rrep_deadline is None:
                ps.discovering = False
                if self.buffers.get(dest):
                    self.start_discovery(dest)
        else:
            raise ValueError(f"unknown timer {kind!r}")

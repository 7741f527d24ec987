"""Whole-network invariant sweeps over a finished or paused :class:`Network`.

Each function returns a list of human-readable violations; empty means clean.
"""

from __future__ import annotations

import math
from collections import defaultdict


def loop_freedom_violations(net, source: int) -> list[str]:
    """Advertised hopcounts must strictly decrease along every stored reverse hop to ``source``."""
    seq = net.routers[source].seqnum
    out = []
    for router in net.routers:
        if router.id == source:
            continue
        entry = router.routing_table.get(source)
        if entry is None or entry.sequence_number != seq or math.isinf(entry.advertised_hopcount):
            continue
        nexthops = [it.nexthop for it in entry.route_list]
        if len(set(nexthops)) != len(nexthops):
            out.append(f"node {router.id}: duplicate nexthops {nexthops}")
        for it in entry.route_list:
            if it.hopcount > entry.advertised_hopcount:
                out.append(f"node {router.id}: item via {it.nexthop} has hopcount {it.hopcount} "
                           f"> advertised {entry.advertised_hopcount}")
            if it.nexthop == source:
                neighbor_adv = 0
            else:
                other = net.routers[it.nexthop].routing_table.get(source)
                if other is None or other.sequence_number != seq:
                    out.append(f"node {router.id}: nexthop {it.nexthop} has no entry for seq {seq}")
                    continue
                neighbor_adv = other.advertised_hopcount
            if not neighbor_adv < entry.advertised_hopcount:
                out.append(f"node {router.id} (adv {entry.advertised_hopcount}) -> {it.nexthop} "
                           f"(adv {neighbor_adv}) does not decrease")
    return out


def reply_paths(observations) -> dict[tuple, list[tuple[int, int]]]:
    """Directed links walked by each RREP, keyed by (source, destination, dest_seqnum, reply_id)."""
    paths: dict[tuple, list[tuple[int, int]]] = defaultdict(list)
    for name, f in observations:
        if name == "rrep_hop":
            r = f["rrep"]
            paths[(r.source, r.destination, r.dest_seqnum, r.reply_id)].append((f["node"], f["nexthop"]))
    return paths


def link_disjointness_violations(observations) -> list[str]:
    by_discovery: dict[tuple, dict[tuple, tuple]] = defaultdict(dict)
    out = []
    for key, links in reply_paths(observations).items():
        used = by_discovery[key[:3]]
        for link in links:
            if link in used:
                out.append(f"link {link} shared by replies {used[link]} and {key[3]}")
            used[link] = key[3]
    return out


def beta_violations(observations) -> list[str]:
    betas: dict[tuple, set] = defaultdict(set)
    for name, f in observations:
        if name == "rrep_hop":
            r = f["rrep"]
            betas[(r.source, r.destination, r.dest_seqnum)].add(r.beta)
    return [f"discovery {k} carried betas {sorted(v)}" for k, v in betas.items() if len(v) > 1]


def marked_violations(observations) -> list[str]:
    return [f"node {f['node']} forwarded RREP to already-marked {f['nexthop']}"
            for name, f in observations if name == "rrep_hop" and f["marked_before"]]


def class_order_violations(observations) -> list[str]:
    return [f"t={f['t']:.3f} node {f['node']}: sent on {f['path_class'].name}, held {f['held_max'].name}"
            for name, f in observations
            if name == "data_departure" and f["path_class"] != f["held_max"]]

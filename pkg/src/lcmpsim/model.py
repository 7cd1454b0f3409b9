"""Core domain types shared by every layer: time, topology, flows, packets.

All simulated time is integer nanoseconds.  Link capacities are integer
bits per second, buffer sizes integer bytes, so every quantity the switch
logic touches stays in plain integer arithmetic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_SEC = 1_000_000_000

DEFAULT_MTU = 1000  # payload bytes per packet

HOST = "host"
LEAF = "leaf"
SPINE = "spine"
DCI = "dci"
ROLES = (HOST, LEAF, SPINE, DCI)


def tx_time_ns(nbytes: int, capacity_bps: int) -> int:
    """Serialization time of nbytes on a link, rounded up to whole ns."""
    return (nbytes * 8 * NS_PER_SEC + capacity_bps - 1) // capacity_bps


def ceil_div(a: int, b: int) -> int:
    return (a + b - 1) // b


@dataclass(frozen=True)
class Node:
    id: str
    role: str


@dataclass(frozen=True)
class Link:
    """Directed link; the egress buffer lives at `src` toward `dst`."""

    id: str
    src: str
    dst: str
    capacity: int            # bits per second
    propagation_delay: int   # one-way, ns
    buffer_capacity: int     # bytes


@dataclass(frozen=True)
class Flow:
    id: int
    src: str
    dst: str
    size: int        # bytes
    arrival: int     # ns
    src_port: int = 0
    dst_port: int = 0
    proto: int = 0


class Packet:
    """Data carrier between nodes.  `size` is payload bytes (<= MTU)."""

    __slots__ = ("flow_id", "seq", "size", "kind", "ecn")

    def __init__(self, flow_id: int, seq: int, size: int, kind: str = "data"):
        self.flow_id = flow_id
        self.seq = seq
        self.size = size
        self.kind = kind
        self.ecn = False

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"<pkt f{self.flow_id}#{self.seq} {self.size}B{' ecn' if self.ecn else ''}>"


class Topology:
    """Static world: nodes, directed links and DC membership.

    Pure value object; built once, shared read-only.  Derived indexes
    (adjacency, per-DC node lists) are computed at construction.
    """

    def __init__(self, nodes, links, dc_membership):
        self.nodes = tuple(nodes)
        self.links = tuple(links)
        self.dc_membership = dict(dc_membership)

        self.node_by_id = {n.id: n for n in self.nodes}
        self.link_by_id = {l.id: l for l in self.links}
        self.out_links: dict[str, list[Link]] = {n.id: [] for n in self.nodes}
        for l in self.links:
            if l.src in self.out_links:
                self.out_links[l.src].append(l)
        for lst in self.out_links.values():
            lst.sort(key=lambda l: l.id)

        self._dc_nodes: dict[str, list[str]] = {}
        for nid, dc in self.dc_membership.items():
            self._dc_nodes.setdefault(dc, []).append(nid)
        for lst in self._dc_nodes.values():
            lst.sort()

    # -- lookups -------------------------------------------------------

    def dc_of(self, node_id: str) -> str | None:
        return self.dc_membership.get(node_id)

    def dcs(self) -> list[str]:
        return sorted(self._dc_nodes)

    def nodes_in(self, dc: str) -> list[str]:
        return list(self._dc_nodes.get(dc, []))

    def hosts_in(self, dc: str) -> list[str]:
        return [n for n in self._dc_nodes.get(dc, [])
                if self.node_by_id[n].role == HOST]

    def dci_of(self, dc: str) -> str | None:
        for n in self._dc_nodes.get(dc, []):
            if self.node_by_id[n].role == DCI:
                return n
        return None

    def inter_dc_links(self) -> list[Link]:
        return [l for l in self.links
                if self.dc_of(l.src) != self.dc_of(l.dst)]

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.nodes == other.nodes and self.links == other.links
                and self.dc_membership == other.dc_membership)

    def __repr__(self):  # pragma: no cover
        return (f"<Topology {len(self.nodes)} nodes, {len(self.links)} links, "
                f"{len(self._dc_nodes)} DCs>")


def validate_topology(topology: Topology) -> list[str]:
    """Check Topology invariants; returns one message per violation."""
    violations = []
    for link in topology.links:
        if link.capacity <= 0:
            violations.append(f"link {link.id}: capacity must be > 0")
        if link.propagation_delay < 0:
            violations.append(f"link {link.id}: negative propagation delay")
        if link.buffer_capacity <= 0:
            violations.append(f"link {link.id}: buffer_capacity must be > 0")
        for end in (link.src, link.dst):
            if end not in topology.node_by_id:
                violations.append(f"link {link.id}: unknown endpoint {end}")
    seen = set()
    for node in topology.nodes:
        if node.role not in ROLES:
            violations.append(f"node {node.id}: unknown role {node.role}")
        if node.id in seen:
            violations.append(f"node {node.id}: duplicate id")
        seen.add(node.id)

    # Every ordered DC pair with hosts on both sides must be connected.
    dcs = [dc for dc in topology.dcs() if topology.hosts_in(dc)]
    for src_dc in dcs:
        reachable = _reachable_from(topology, topology.hosts_in(src_dc))
        for dst_dc in dcs:
            if dst_dc == src_dc:
                continue
            if not any(h in reachable for h in topology.hosts_in(dst_dc)):
                violations.append(
                    f"no path from DC {src_dc} to DC {dst_dc}")
    return violations


def shortest_prop_route(topology: Topology, src: str, dst: str):
    """Minimum propagation-delay route src -> dst over directed links.

    Returns (total_delay_ns, [Link, ...]); raises ValueError when no route
    exists.  Ties resolve deterministically (node id, then link id order).
    """
    if src == dst:
        return 0, []
    heap = [(0, src, ())]
    best: dict[str, int] = {}
    while heap:
        delay, nid, path = heapq.heappop(heap)
        if nid == dst:
            return delay, [topology.link_by_id[lid] for lid in path]
        if nid in best and best[nid] <= delay:
            continue
        best[nid] = delay
        for link in topology.out_links.get(nid, ()):
            if link.dst in best:
                continue
            heapq.heappush(heap, (delay + link.propagation_delay, link.dst,
                                  path + (link.id,)))
    raise ValueError(f"no route from {src} to {dst}")


def _reachable_from(topology: Topology, start_nodes) -> set[str]:
    seen = set(start_nodes)
    frontier = list(start_nodes)
    while frontier:
        nid = frontier.pop()
        for link in topology.out_links.get(nid, ()):
            if link.dst not in seen:
                seen.add(link.dst)
                frontier.append(link.dst)
    return seen

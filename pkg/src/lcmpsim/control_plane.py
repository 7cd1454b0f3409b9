"""Control-plane provisioning: per-path quality scores and switch tables.

Everything here runs off the hot path, once per scenario.  The output is a
set of small integer tables (thresholds + 0-255 level scores) plus one
precomputed 8-bit quality score per candidate path, installed on each DCI
switch before the simulation starts.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace

from .model import DCI, NS_PER_MS, Link, Topology, ceil_div

DELAY_SATURATION_MS = 32   # delays at or above this map to the worst score
DELAY_SHIFT = 5            # 2**DELAY_SHIFT == DELAY_SATURATION_MS


class ConfigurationError(ValueError):
    pass


def clamp_score(value: int) -> int:
    """Saturate into the 8-bit score range [0, 255]."""
    if value < 0:
        return 0
    return 255 if value > 255 else value


def _round_div(a: int, b: int) -> int:
    # round-half-up without floats
    return (2 * a + b) // (2 * b)


def calc_delay_score(one_way_delay_ms: int,
                     max_delay_ms: int = DELAY_SATURATION_MS,
                     shift: int = DELAY_SHIFT) -> int:
    """Map a one-way delay in ms to a 0-255 cost, saturating at max_delay_ms.

    On the unsaturated branch this equals floor(delay * 255 / max_delay_ms),
    computed as a right shift (max_delay_ms must stay a power of two).
    """
    if one_way_delay_ms < 0:
        raise ValueError(f"negative delay: {one_way_delay_ms}")
    if max_delay_ms != (1 << shift):
        raise ConfigurationError(
            f"max_delay_ms ({max_delay_ms}) must equal 2**shift ({1 << shift})")
    if one_way_delay_ms >= max_delay_ms:
        return 255
    return (one_way_delay_ms * 255) >> shift


@dataclass(frozen=True)
class PathQualityWeights:
    w_dl: int = 3
    w_lc: int = 1
    s_path: int = 2

    def __post_init__(self):
        if self.w_dl <= 0 or self.w_lc <= 0 or self.s_path < 0:
            raise ConfigurationError("path weights must be positive")
        if self.w_dl + self.w_lc > (1 << self.s_path):
            raise ConfigurationError(
                f"w_dl + w_lc ({self.w_dl + self.w_lc}) exceeds 2**s_path")


@dataclass(frozen=True)
class CapacityTables:
    thresholds: tuple[int, ...]   # bits per second, strictly increasing
    level_score: tuple[int, ...]  # 0-255, non-decreasing


@dataclass(frozen=True)
class QueueTables:
    q_thresh: tuple[int, ...]     # bytes, strictly increasing
    level_score: tuple[int, ...]


@dataclass(frozen=True)
class TrendTables:
    rate_bucket: int              # bits per second this table was built for
    t_thresh: tuple[int, ...]     # trend-accumulator bytes, strictly increasing
    level_score: tuple[int, ...]


def _linear_level_scores(n_levels: int) -> tuple[int, ...]:
    return tuple(_round_div(i * 255, n_levels - 1) for i in range(n_levels))


def build_capacity_tables(max_capacity: int, n_classes: int = 10) -> CapacityTables:
    """Equal partitions of max_capacity with a linear 0-255 level mapping."""
    if n_classes < 2:
        raise ConfigurationError(f"n_classes must be >= 2, got {n_classes}")
    if max_capacity <= 0:
        raise ConfigurationError("max_capacity must be positive")
    thresholds = tuple((i + 1) * max_capacity // n_classes for i in range(n_classes))
    return CapacityTables(thresholds, _linear_level_scores(n_classes))


def build_queue_tables(buffer_capacity: int, n_levels: int = 10) -> QueueTables:
    if n_levels < 2:
        raise ConfigurationError("queue levels must be >= 2")
    if buffer_capacity < n_levels:
        raise ConfigurationError("buffer too small for the level count")
    thresh = tuple((i + 1) * buffer_capacity // n_levels for i in range(n_levels))
    return QueueTables(thresh, _linear_level_scores(n_levels))


def build_trend_tables(rate_bucket: int, sample_interval_ns: int,
                       n_levels: int = 10) -> TrendTables:
    """Trend thresholds as fractions of the bytes one sampling interval can
    drain at line rate, so a trend of one interval's worth of line-rate bytes
    maps to the top level."""
    if n_levels < 2:
        raise ConfigurationError("trend levels must be >= 2")
    interval_bytes = rate_bucket * sample_interval_ns // (8 * 1_000_000_000)
    if interval_bytes < n_levels:
        raise ConfigurationError(
            f"rate bucket {rate_bucket} too slow for {n_levels} trend levels "
            f"at a {sample_interval_ns} ns sampling interval")
    thresh = tuple((j + 1) * interval_bytes // n_levels for j in range(n_levels))
    return TrendTables(rate_bucket, thresh, _linear_level_scores(n_levels))


def calc_link_cap_score(link_capacity: int, tables: CapacityTables) -> int:
    """Capacity-class lookup: higher capacity maps to a smaller cost."""
    thresholds = tables.thresholds
    for i in range(len(thresholds) - 1, -1, -1):
        if link_capacity >= thresholds[i]:
            return 255 - tables.level_score[i]
    return 255


def calc_path_quality(one_way_delay_ms: int, bottleneck_capacity: int,
                      weights: PathQualityWeights,
                      tables: CapacityTables) -> int:
    """Fuse delay and capacity scores into the 8-bit per-path cost."""
    score = (weights.w_dl * calc_delay_score(one_way_delay_ms)
             + weights.w_lc * calc_link_cap_score(bottleneck_capacity, tables))
    return clamp_score(score >> weights.s_path)


@dataclass(frozen=True)
class CandidatePath:
    path_id: str
    egress_port: int               # dense port index on the deciding switch
    hop_links: tuple[str, ...]     # link ids, deciding switch -> dst DC
    one_way_delay_ms: int
    bottleneck_capacity: int
    c_path: int
    hop_count: int = 0


@dataclass(frozen=True)
class ProvisionConfig:
    n_classes: int = 10
    n_queue_levels: int = 10
    n_trend_levels: int = 10
    weights: PathQualityWeights = field(default_factory=PathQualityWeights)
    cap_table_max: int = 400 * 10**9   # bps; top class of the capacity tables
    sample_interval_ns: int = 50_000


@dataclass(frozen=True)
class SwitchTables:
    switch_id: str
    port_links: tuple[str, ...]                       # index -> link id
    candidates: dict                                  # dst dc -> tuple[CandidatePath]
    capacity_tables: CapacityTables
    queue_tables: tuple[QueueTables, ...]             # per port index
    trend_tables: tuple[TrendTables, ...]             # per port index
    weights: PathQualityWeights


def _dci_hop_distances(topology: Topology, dst_dc: str) -> dict[str, int]:
    """Hop distance from every DC to dst_dc over the inter-DC (DCI) graph."""
    dist = {dst_dc: 0}
    frontier = [dst_dc]
    while frontier:
        nxt = []
        for dc in frontier:
            dci = topology.dci_of(dc)
            if dci is None:
                continue
            # incoming neighbours: DCs with a link toward this DC's DCI
            for link in topology.links:
                if link.dst != dci:
                    continue
                src_dc = topology.dc_of(link.src)
                if src_dc is None or src_dc == dc or src_dc in dist:
                    continue
                if topology.node_by_id[link.src].role != DCI:
                    continue
                dist[src_dc] = dist[dc] + 1
                nxt.append(src_dc)
        frontier = nxt
    return dist


def _shortest_delay_completion(topology: Topology, start_dci: str, dst_dc: str,
                               dist: dict[str, int]):
    """Min propagation-delay continuation start_dci -> dst_dc's DCI moving
    strictly downhill in hop distance (keeps composed per-switch decisions
    loop-free).  Returns (delay_ns, [links]) or None."""
    start_dc = topology.dc_of(start_dci)
    if start_dc == dst_dc:
        return 0, []
    heap = [(0, start_dci, ())]
    best: dict[str, int] = {}
    while heap:
        delay, nid, path = heapq.heappop(heap)
        dc = topology.dc_of(nid)
        if dc == dst_dc:
            return delay, list(path)
        if nid in best and best[nid] <= delay:
            continue
        best[nid] = delay
        for link in topology.out_links.get(nid, ()):
            peer_dc = topology.dc_of(link.dst)
            if peer_dc == dc or topology.node_by_id[link.dst].role != DCI:
                continue
            if dist.get(peer_dc, 1 << 30) >= dist.get(dc, 1 << 30):
                continue
            heapq.heappush(heap, (delay + link.propagation_delay, link.dst,
                                  path + (link.id,)))
    return None


def enumerate_candidate_paths(topology: Topology, switch_id: str,
                              dst_dc: str) -> list[CandidatePath]:
    """One candidate per egress port whose neighbour DC is strictly closer
    (by DCI hop count) to dst_dc, completed by the shortest-delay downhill
    continuation.  The downhill restriction keeps composed sticky
    per-switch decisions loop-free.  c_path is left at 0; provision_switch
    fills it in once the score tables exist."""
    own_dc = topology.dc_of(switch_id)
    if dst_dc == own_dc:
        return []
    dist = _dci_hop_distances(topology, dst_dc)
    if own_dc not in dist:
        return []
    out = []
    port_idx = 0
    for link in topology.out_links.get(switch_id, ()):
        peer_dc = topology.dc_of(link.dst)
        is_inter = peer_dc is not None and peer_dc != own_dc
        if not is_inter or topology.node_by_id[link.dst].role != DCI:
            continue
        this_port = port_idx
        port_idx += 1
        if dist.get(peer_dc, 1 << 30) >= dist[own_dc]:
            continue
        completion = _shortest_delay_completion(topology, link.dst, dst_dc, dist)
        if completion is None:
            continue
        tail_delay, tail_links = completion
        hop_ids = [link.id] + tail_links
        hops = [topology.link_by_id[h] for h in hop_ids]
        total_delay = link.propagation_delay + tail_delay
        out.append(CandidatePath(
            path_id=f"{switch_id}->{dst_dc} via {link.id}",
            egress_port=this_port,
            hop_links=tuple(hop_ids),
            one_way_delay_ms=ceil_div(total_delay, NS_PER_MS),
            bottleneck_capacity=min(h.capacity for h in hops),
            c_path=0,
            hop_count=len(hop_ids),
        ))
    return out


def inter_dc_ports(topology: Topology, switch_id: str) -> list[Link]:
    """Outgoing links of a DCI switch that cross a DC boundary, in id order.
    The list position is the dense egress-port index used everywhere else."""
    own_dc = topology.dc_of(switch_id)
    return [l for l in topology.out_links.get(switch_id, ())
            if topology.dc_of(l.dst) not in (None, own_dc)]


def provision_switch(topology: Topology, switch_id: str,
                     config: ProvisionConfig | None = None) -> SwitchTables:
    """Build the full table set for one DCI switch (pure function)."""
    config = config or ProvisionConfig()
    node = topology.node_by_id.get(switch_id)
    if node is None or node.role != DCI:
        raise ConfigurationError(f"{switch_id} is not a DCI switch")
    ports = inter_dc_ports(topology, switch_id)
    if not ports:
        raise ConfigurationError(f"switch {switch_id} has no inter-DC ports")

    cap_tables = build_capacity_tables(config.cap_table_max, config.n_classes)
    queue_tables = tuple(build_queue_tables(l.buffer_capacity,
                                            config.n_queue_levels)
                         for l in ports)
    trend_by_rate = {}
    for l in ports:
        if l.capacity not in trend_by_rate:
            trend_by_rate[l.capacity] = build_trend_tables(
                l.capacity, config.sample_interval_ns, config.n_trend_levels)
    trend_tables = tuple(trend_by_rate[l.capacity] for l in ports)

    own_dc = topology.dc_of(switch_id)
    candidates = {}
    for dst_dc in topology.dcs():
        if dst_dc == own_dc:
            continue
        cands = tuple(
            replace(c, c_path=calc_path_quality(c.one_way_delay_ms,
                                                c.bottleneck_capacity,
                                                config.weights, cap_tables))
            for c in enumerate_candidate_paths(topology, switch_id, dst_dc))
        if cands:
            candidates[dst_dc] = cands

    return SwitchTables(
        switch_id=switch_id,
        port_links=tuple(l.id for l in ports),
        candidates=candidates,
        capacity_tables=cap_tables,
        queue_tables=queue_tables,
        trend_tables=trend_tables,
        weights=config.weights,
    )


def dump_switch_tables(tables: SwitchTables) -> str:
    """Human-readable provisioning report, one section per table."""
    lines = [f"switch {tables.switch_id}"]
    lines.append("capacity thresholds (bps): "
                 + " ".join(str(t) for t in tables.capacity_tables.thresholds))
    lines.append("capacity level scores:     "
                 + " ".join(str(s) for s in tables.capacity_tables.level_score))
    for idx, link_id in enumerate(tables.port_links):
        qt = tables.queue_tables[idx]
        tt = tables.trend_tables[idx]
        lines.append(f"port {idx} ({link_id})")
        lines.append("  queue thresholds (B): " + " ".join(map(str, qt.q_thresh)))
        lines.append(f"  trend bucket {tt.rate_bucket} bps, thresholds (B): "
                     + " ".join(map(str, tt.t_thresh)))
    for dst_dc in sorted(tables.candidates):
        lines.append(f"candidates -> {dst_dc}")
        for c in tables.candidates[dst_dc]:
            lines.append(f"  port {c.egress_port}: delay {c.one_way_delay_ms} ms, "
                         f"bottleneck {c.bottleneck_capacity} bps, "
                         f"c_path {c.c_path} ({'/'.join(c.hop_links)})")
    return "\n".join(lines)

"""Deterministic packet-level discrete-event simulator.

One event heap ordered by (time, insertion seq), per-port FIFO egress
queues with store-and-forward serialization, a simplified rate-based
transport (ECN marking at switch queues, receiver-generated congestion
notifications that halve the sender, additive recovery), failure
injection, and per-run counters.  Two runs of the same scenario and seed
produce byte-identical results.
"""

from __future__ import annotations

import csv
import heapq
from collections import deque
from dataclasses import dataclass, field, replace

from . import data_plane
from .control_plane import ProvisionConfig, provision_switch
from .data_plane import CACHE_HIT, RoutingError, SwitchRuntime, mix64, salt64
from .model import HOST, Packet, Topology, shortest_prop_route, tx_time_ns
from .traffic import generate_flows

# event kinds
_FLOW_START = 0
_SEND = 1
_DEQUEUE = 2
_ARRIVAL = 3
_CNP = 4
_AI_TICK = 5
_MONITOR = 6
_GC = 7
_LINK_FAIL = 8
_LINK_RECOVER = 9


@dataclass(frozen=True)
class TransportConfig:
    mtu: int = 1000
    rate_interval_ns: int = 50_000
    ai_step_permille: int = 50      # additive increase, fraction of line rate
    min_rate_permille: int = 10
    ecn_divisor: int = 8            # threshold = buffer // divisor ...
    ecn_target_us: int | None = None  # ... unless a drain-time target is set


@dataclass
class TransportState:
    """Per-flow sender rate state for the simplified transport."""

    current_rate: int
    line_rate: int
    min_rate: int
    additive_step: int
    cnp_seen_this_interval: bool = False


def transport_on_cnp(state: TransportState) -> TransportState:
    """Congestion notification: halve, floored at the minimum rate."""
    state.current_rate = max(state.current_rate // 2, state.min_rate)
    state.cnp_seen_this_interval = True
    return state


def transport_on_interval(state: TransportState) -> TransportState:
    """Quiet rate-update interval: additive increase, capped at line rate."""
    state.current_rate = min(state.current_rate + state.additive_step,
                             state.line_rate)
    return state


class PortQueue:
    """Egress FIFO for one directed link."""

    __slots__ = ("link", "queue", "backlog_bytes", "capacity_bytes",
                 "ecn_threshold", "mark_ecn", "busy", "serializing_until",
                 "alive", "bytes_total", "busy_ns")

    def __init__(self, link, ecn_threshold: int, mark_ecn: bool):
        self.link = link
        self.queue = deque()
        self.backlog_bytes = 0
        self.capacity_bytes = link.buffer_capacity
        self.ecn_threshold = ecn_threshold
        self.mark_ecn = mark_ecn
        self.busy = False
        self.serializing_until = 0
        self.alive = True
        self.bytes_total = 0
        self.busy_ns = 0


class _FlowState:
    __slots__ = ("flow", "dst_dc", "ts", "bytes_queued", "seq_next",
                 "received", "completion", "status", "last_seq_rx",
                 "last_cnp_gen", "ai_active", "reverse_delay", "decisions",
                 "dropped")

    def __init__(self, flow, dst_dc, ts, reverse_delay):
        self.flow = flow
        self.dst_dc = dst_dc
        self.ts = ts
        self.bytes_queued = 0
        self.seq_next = 0
        self.received = 0
        self.completion = None
        self.status = "unfinished"
        self.last_seq_rx = -1
        self.last_cnp_gen = -(1 << 62)
        self.ai_active = False
        self.reverse_delay = reverse_delay
        self.decisions = []   # (switch_id, port_idx, link_id, kind)
        self.dropped = False


@dataclass
class FlowRecord:
    id: int
    src: str
    dst: str
    size: int
    arrival: int
    completion: int | None
    status: str
    decisions: list = field(default_factory=list)


@dataclass
class SimResult:
    flows: list
    link_bytes: dict
    link_busy_ns: dict
    drops: int = 0
    routing_errors: int = 0
    seq_violations: int = 0
    cache_evictions: int = 0
    gc_evictions: int = 0
    decision_counts: dict = field(default_factory=dict)
    failovers: int = 0
    lossless_violated: bool = False
    makespan_ns: int = 0
    seed: int = 0
    trace: list | None = None

    def counters(self) -> dict:
        return {
            "flows": len(self.flows),
            "completed": sum(1 for f in self.flows if f.completion is not None),
            "drops": self.drops,
            "routing_errors": self.routing_errors,
            "seq_violations": self.seq_violations,
            "cache_evictions": self.cache_evictions,
            "gc_evictions": self.gc_evictions,
            "failovers": self.failovers,
            "decisions": dict(sorted(self.decision_counts.items())),
            "lossless_violated": self.lossless_violated,
            "makespan_ns": self.makespan_ns,
        }


def _ecn_threshold(link, transport: TransportConfig) -> int:
    if transport.ecn_target_us is not None:
        by_target = link.capacity * transport.ecn_target_us * 1000 // (8 * 10**9)
        return max(1, min(by_target, link.buffer_capacity))
    return max(1, link.buffer_capacity // transport.ecn_divisor)


class Simulator:
    def __init__(self, scenario):
        self.scenario = scenario
        self.topology: Topology = scenario.topology
        self.routing = scenario.routing
        self.transport = scenario.transport
        self.trace = [] if scenario.trace else None

        self._heap = []
        self._seq = 0
        self.now = 0

        topo = self.topology
        self.ports = {}
        for link in topo.links:
            mark = topo.node_by_id[link.src].role != HOST
            self.ports[link.id] = PortQueue(
                link, _ecn_threshold(link, self.transport), mark)

        self._build_intra_routing()
        self._provision_switches()

        self.node_salt = {n.id: salt64(n.id) for n in topo.nodes}
        self.drops = 0
        self.routing_errors = 0
        self.seq_violations = 0
        self.lossless_violated = False
        self._gc_total = 0

        flows = generate_flows(topo, replace(scenario.traffic,
                                             seed=scenario.seed))
        self.flows = flows
        self.fs = {}
        self._rev_delay_cache = {}
        for f in flows:
            line = self._line_rate(f.src)
            ts = TransportState(
                current_rate=line, line_rate=line,
                min_rate=max(1, line * self.transport.min_rate_permille // 1000),
                additive_step=max(1, line * self.transport.ai_step_permille // 1000))
            self.fs[f.id] = _FlowState(f, topo.dc_of(f.dst), ts,
                                       self._reverse_delay(f.dst, f.src))
            self._push(f.arrival, _FLOW_START, f.id, None)
        self.flows_pending = len(flows)

        for link_id, t_fail, t_recover in scenario.failures:
            self._push(t_fail, _LINK_FAIL, link_id, None)
            if t_recover is not None:
                self._push(t_recover, _LINK_RECOVER, link_id, None)

        if flows:
            self._push(self.routing.sample_interval_ns, _MONITOR, None, None)
            self._push(self.routing.idle_timeout_ns // 2, _GC, None, None)

    # -- construction helpers -------------------------------------------

    def _build_intra_routing(self):
        topo = self.topology
        self.intra_up = {}
        self.intra_down = {}
        self.is_dci = set()
        for dc in topo.dcs():
            members = set(topo.nodes_in(dc))
            dci = topo.dci_of(dc)
            if dci is not None:
                self.is_dci.add(dci)
            intra_out = {n: [l for l in topo.out_links[n] if l.dst in members]
                         for n in members}
            if dci is not None:
                dist = self._hop_dist(intra_out, members, dci)
                for n in members:
                    if n == dci:
                        continue
                    self.intra_up[n] = [l for l in intra_out[n]
                                        if dist.get(l.dst, 1 << 30) == dist[n] - 1]
            for host in topo.hosts_in(dc):
                dist = self._hop_dist(intra_out, members, host)
                for n in members:
                    if n == host:
                        continue
                    nxt = [l for l in intra_out[n]
                           if dist.get(l.dst, 1 << 30) == dist.get(n, 1 << 30) - 1]
                    if nxt:
                        self.intra_down[(n, host)] = nxt

    @staticmethod
    def _hop_dist(intra_out, members, target):
        # BFS over reversed intra-DC links
        incoming = {n: [] for n in members}
        for n in members:
            for l in intra_out[n]:
                incoming[l.dst].append(n)
        dist = {target: 0}
        frontier = [target]
        while frontier:
            nxt = []
            for n in frontier:
                for p in incoming[n]:
                    if p not in dist:
                        dist[p] = dist[n] + 1
                        nxt.append(p)
            frontier = nxt
        return dist

    def _provision_switches(self):
        cfg = self.routing
        pcfg = ProvisionConfig(
            n_classes=cfg.n_classes, n_queue_levels=cfg.n_queue_levels,
            n_trend_levels=cfg.n_trend_levels, weights=cfg.path_weights,
            cap_table_max=cfg.cap_table_max,
            sample_interval_ns=cfg.sample_interval_ns)
        self.runtimes = {}
        self.port_owner = {}   # link id -> (runtime, port idx)
        sink = self._trace_sink if self.trace is not None else None
        for dc in self.topology.dcs():
            dci = self.topology.dci_of(dc)
            if dci is None:
                continue
            tables = provision_switch(self.topology, dci, pcfg)
            port_objs = [self.ports[lid] for lid in tables.port_links]
            runtime = SwitchRuntime(
                tables, cfg.policy, cfg.fusion, cfg.cong_weights,
                queue_bytes_fn=lambda idx, _p=port_objs: _p[idx].backlog_bytes,
                sample_interval_ns=cfg.sample_interval_ns,
                cache_capacity=cfg.cache_capacity, trace_sink=sink)
            self.runtimes[dci] = runtime
            for idx, lid in enumerate(tables.port_links):
                self.port_owner[lid] = (runtime, idx)

    def _trace_sink(self, now, switch, flow_id, costed, keep, port, kind):
        self.trace.append((now, switch, flow_id, keep, port, kind, tuple(
            (c.egress_port, c.c_path, c.c_cong, c.fused) for c in costed)))

    def _line_rate(self, host: str) -> int:
        links = self.topology.out_links[host]
        if not links:
            raise RoutingError(f"host {host} has no uplink")
        return links[0].capacity

    def _reverse_delay(self, src: str, dst: str) -> int:
        key = (src, dst)
        got = self._rev_delay_cache.get(key)
        if got is None:
            got = shortest_prop_route(self.topology, src, dst)[0]
            self._rev_delay_cache[key] = got
        return got

    # -- event plumbing --------------------------------------------------

    def _push(self, t: int, kind: int, a, b):
        heapq.heappush(self._heap, (t, self._seq, kind, a, b))
        self._seq += 1

    def run(self) -> SimResult:
        heap = self._heap
        horizon = self.scenario.horizon_ns
        while heap:
            t, _, kind, a, b = heapq.heappop(heap)
            if horizon is not None and t > horizon:
                break
            self.now = t
            if kind == _ARRIVAL:
                self._on_arrival(a, b, t)
            elif kind == _DEQUEUE:
                self._on_dequeue(a, t)
            elif kind == _SEND or kind == _FLOW_START:
                self._send_next(self.fs[a], t)
            elif kind == _CNP:
                self._on_cnp(self.fs[a], t)
            elif kind == _AI_TICK:
                self._on_ai_tick(self.fs[a], t)
            elif kind == _MONITOR:
                self._on_monitor(t)
            elif kind == _GC:
                self._on_gc(t)
            elif kind == _LINK_FAIL:
                self._set_link_alive(a, False)
            else:
                self._set_link_alive(a, True)
        return self._result()

    # -- handlers ---------------------------------------------------------

    def _send_next(self, fs: _FlowState, now: int):
        if fs.status == "error" or fs.dropped:
            return
        flow = fs.flow
        remaining = flow.size - fs.bytes_queued
        if remaining <= 0:
            return
        size = min(self.transport.mtu, remaining)
        pkt = Packet(flow.id, fs.seq_next, size)
        fs.seq_next += 1
        fs.bytes_queued += size
        self._forward(flow.src, pkt, now)
        if fs.bytes_queued < flow.size and fs.status != "error":
            gap = tx_time_ns(size, fs.ts.current_rate)
            self._push(now + gap, _SEND, flow.id, None)

    def _forward(self, node_id: str, pkt: Packet, now: int):
        fs = self.fs[pkt.flow_id]
        dst = fs.flow.dst
        if node_id == dst:
            self._receive(fs, pkt, now)
            return
        if self.topology.dc_of(node_id) == fs.dst_dc:
            links = self.intra_down.get((node_id, dst))
        elif node_id in self.is_dci:
            self._forward_inter_dc(node_id, fs, pkt, now)
            return
        else:
            links = self.intra_up.get(node_id)
        if not links:
            self._flow_error(fs)
            return
        alive = [l for l in links if self.ports[l.id].alive]
        if not alive:
            self._flow_error(fs)
            return
        if len(alive) == 1:
            link = alive[0]
        else:
            link = alive[mix64(pkt.flow_id ^ self.node_salt[node_id])
                         % len(alive)]
        self._enqueue(self.ports[link.id], pkt, now)

    def _forward_inter_dc(self, node_id: str, fs: _FlowState, pkt: Packet,
                          now: int):
        runtime = self.runtimes[node_id]
        try:
            port_idx, kind = runtime.handle_packet(pkt.flow_id, fs.dst_dc, now)
        except RoutingError:
            self._flow_error(fs)
            return
        if kind != CACHE_HIT:
            fs.decisions.append((node_id, port_idx,
                                 runtime.tables.port_links[port_idx], kind))
        self._enqueue(self.ports[runtime.tables.port_links[port_idx]],
                      pkt, now)

    def _flow_error(self, fs: _FlowState):
        self.routing_errors += 1
        if fs.status != "error":
            fs.status = "error"
            if fs.completion is None and not fs.dropped:
                self.flows_pending -= 1

    def _enqueue(self, port: PortQueue, pkt: Packet, now: int):
        if port.backlog_bytes + pkt.size > port.capacity_bytes:
            self.drops += 1
            self.lossless_violated = True
            # no retransmission path: the flow can never complete
            fs = self.fs[pkt.flow_id]
            if not fs.dropped and fs.completion is None and fs.status != "error":
                fs.dropped = True
                self.flows_pending -= 1
            return
        port.backlog_bytes += pkt.size
        if port.mark_ecn and port.backlog_bytes > port.ecn_threshold:
            pkt.ecn = True
        port.queue.append(pkt)
        if not port.busy:
            port.busy = True
            self._start_tx(port, now)

    def _start_tx(self, port: PortQueue, now: int):
        t = tx_time_ns(port.queue[0].size, port.link.capacity)
        port.serializing_until = now + t
        self._push(now + t, _DEQUEUE, port.link.id, None)

    def _on_dequeue(self, link_id: str, now: int):
        port = self.ports[link_id]
        pkt = port.queue.popleft()
        port.backlog_bytes -= pkt.size
        port.bytes_total += pkt.size
        port.busy_ns += tx_time_ns(pkt.size, port.link.capacity)
        self._push(now + port.link.propagation_delay, _ARRIVAL,
                   port.link.dst, pkt)
        if port.queue:
            self._start_tx(port, now)
        else:
            port.busy = False

    def _on_arrival(self, node_id: str, pkt: Packet, now: int):
        self._forward(node_id, pkt, now)

    def _receive(self, fs: _FlowState, pkt: Packet, now: int):
        if pkt.seq <= fs.last_seq_rx:
            self.seq_violations += 1
        else:
            fs.last_seq_rx = pkt.seq
        fs.received += pkt.size
        if pkt.ecn and now - fs.last_cnp_gen >= self.transport.rate_interval_ns:
            fs.last_cnp_gen = now
            self._push(now + fs.reverse_delay, _CNP, fs.flow.id, None)
        if fs.received >= fs.flow.size and fs.completion is None:
            fs.completion = now
            fs.status = "done"
            self.flows_pending -= 1

    def _on_cnp(self, fs: _FlowState, now: int):
        transport_on_cnp(fs.ts)
        if not fs.ai_active and fs.completion is None and fs.status != "error":
            fs.ai_active = True
            self._push(now + self.transport.rate_interval_ns, _AI_TICK,
                       fs.flow.id, None)

    def _on_ai_tick(self, fs: _FlowState, now: int):
        if fs.completion is not None or fs.status == "error":
            fs.ai_active = False
            return
        if fs.ts.cnp_seen_this_interval:
            fs.ts.cnp_seen_this_interval = False
        else:
            transport_on_interval(fs.ts)
            if fs.ts.current_rate >= fs.ts.line_rate:
                fs.ai_active = False
                return
        self._push(now + self.transport.rate_interval_ns, _AI_TICK,
                   fs.flow.id, None)

    def _on_monitor(self, now: int):
        for runtime in self.runtimes.values():
            runtime.sample_all_ports(now)
        if self.flows_pending > 0:
            self._push(now + self.routing.sample_interval_ns, _MONITOR,
                       None, None)

    def _on_gc(self, now: int):
        for runtime in self.runtimes.values():
            self._gc_total += runtime.cache.gc(now, self.routing.idle_timeout_ns)
        if self.flows_pending > 0:
            self._push(now + self.routing.idle_timeout_ns // 2, _GC,
                       None, None)

    def _set_link_alive(self, link_id: str, alive: bool):
        port = self.ports[link_id]
        port.alive = alive
        owner = self.port_owner.get(link_id)
        if owner is not None:
            runtime, idx = owner
            runtime.set_port_alive(idx, alive)

    # -- results ----------------------------------------------------------

    def _result(self) -> SimResult:
        records = []
        for f in self.flows:
            fs = self.fs[f.id]
            records.append(FlowRecord(
                id=f.id, src=f.src, dst=f.dst, size=f.size, arrival=f.arrival,
                completion=fs.completion, status=fs.status,
                decisions=fs.decisions))
        decision_counts = {}
        evictions = 0
        failovers = 0
        for runtime in self.runtimes.values():
            for kind, n in runtime.decisions.items():
                decision_counts[kind] = decision_counts.get(kind, 0) + n
            evictions += runtime.cache.evictions
            failovers += runtime.decisions[data_plane.FAILOVER]
        return SimResult(
            flows=records,
            link_bytes={l.id: self.ports[l.id].bytes_total
                        for l in self.topology.links},
            link_busy_ns={l.id: self.ports[l.id].busy_ns
                          for l in self.topology.links},
            drops=self.drops,
            routing_errors=self.routing_errors,
            seq_violations=self.seq_violations,
            cache_evictions=evictions,
            gc_evictions=self._gc_total,
            decision_counts=decision_counts,
            failovers=failovers,
            lossless_violated=self.lossless_violated,
            makespan_ns=self.now,
            seed=self.scenario.seed,
            trace=self.trace,
        )


def run(scenario) -> SimResult:
    """Run a scenario to completion (all events drained or horizon hit)."""
    return Simulator(scenario).run()


def inject_failure(scenario, link_id: str, t_fail: int,
                   t_recover: int | None = None):
    """Return a copy of the scenario with a link failure scheduled."""
    if link_id not in scenario.topology.link_by_id:
        raise ValueError(f"unknown link {link_id!r}")
    return replace(scenario,
                   failures=scenario.failures + ((link_id, t_fail, t_recover),))


# -- artifact writers ------------------------------------------------------

def write_flows_csv(result: SimResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flow_id", "src", "dst", "size_bytes", "arrival_ns",
                    "completion_ns", "status"])
        for f in result.flows:
            w.writerow([f.id, f.src, f.dst, f.size, f.arrival,
                        -1 if f.completion is None else f.completion,
                        f.status])


def write_links_csv(result: SimResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["link_id", "bytes", "busy_ns"])
        for lid in sorted(result.link_bytes):
            w.writerow([lid, result.link_bytes[lid], result.link_busy_ns[lid]])


def write_trace_csv(result: SimResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ns", "switch", "flow_id", "retained", "chosen_port",
                    "decision", "candidates"])
        for now, switch, fid, keep, port, kind, cands in result.trace or ():
            cand_s = ";".join(f"{p}:{cp}:{cc}:{fu}" for p, cp, cc, fu in cands)
            w.writerow([now, switch, fid, keep, port, kind, cand_s])


def run_summary(result: SimResult, scenario) -> dict:
    return {
        "seed": scenario.seed,
        "policy": scenario.routing.policy,
        "counters": result.counters(),
        "config": scenario.config_echo(),
    }

"""On-switch decision engine: congestion estimator, cost fusion, selection,
flow cache with GC and fast-failover.

Every operation here uses only integer add/subtract/compare/shift and table
lookups; right shifts on signed values are arithmetic (Python's native >>).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .control_plane import SwitchTables, clamp_score

MASK64 = (1 << 64) - 1


class RoutingError(RuntimeError):
    """No usable egress candidate for a destination."""


class ClockRegressionError(ValueError):
    """A port was sampled with a timestamp older than its last sample."""


def mix64(x: int) -> int:
    """64-bit avalanche mixer (multiply-xor-shift; constants in the README).

    Deterministic replacement for a hardware hash: uniform output over the
    64-bit space, so `mix64(key) % m` spreads flow keys evenly across m slots.
    """
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def salt64(text: str) -> int:
    """Stable 64-bit FNV-1a of a switch id; per-switch hash salt."""
    h = 0xCBF29CE484222325
    for b in text.encode():
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


@dataclass
class PortCongestionState:
    """Per-egress-port working set (modeled 32-bit registers + 64-bit stamp)."""

    queue_cur: int = 0
    queue_prev: int = 0
    trend: int = 0
    dur_cnt: int = 0
    last_sample: int = 0
    alive: bool = True


@dataclass(frozen=True)
class CongestionWeights:
    w_ql: int = 2
    w_tl: int = 1
    w_dp: int = 1
    s_cong: int = 2
    k: int = 3                  # trend smoothing shift
    high_water_level: int = 5   # queue level (threshold count) that arms dur_cnt
    d_shift: int = 2            # dur_cnt >> d_shift caps the persistence score
    cong_high: int = 192        # all candidates at/above this -> min-cost fallback

    def __post_init__(self):
        if min(self.w_ql, self.w_tl, self.w_dp) <= 0:
            raise ValueError("congestion weights must be positive")
        if self.w_ql + self.w_tl + self.w_dp > (1 << self.s_cong):
            raise ValueError("w_ql + w_tl + w_dp exceeds 2**s_cong")
        if self.high_water_level < 0:
            raise ValueError("high_water_level must be >= 0")


@dataclass(frozen=True)
class FusionWeights:
    alpha: int = 3
    beta: int = 1

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta < 1:
            raise ValueError("need alpha, beta >= 0 and alpha + beta >= 1")


def level_count(value: int, thresholds) -> int:
    """Number of thresholds <= value (0 for negative values)."""
    if value < thresholds[0]:
        return 0
    return bisect_right(thresholds, value)


def quantize_level(value: int, thresholds, level_score) -> int:
    """Map a raw byte count (queue or trend accumulator) to its level score.

    Values below the first threshold (including all non-positive trends)
    score 0; values at or above the last threshold saturate at the top score.
    """
    count = level_count(value, thresholds)
    if count == 0:
        return 0
    return level_score[min(count, len(level_score)) - 1]


def sample_port(state: PortCongestionState, queue_bytes_now: int, now: int,
                q_thresh, weights: CongestionWeights) -> PortCongestionState:
    """One monitor sample: shift queue history, update trend EWMA and the
    high-water duration counter."""
    if now < state.last_sample:
        raise ClockRegressionError(
            f"sample at {now} before last_sample {state.last_sample}")
    state.queue_prev = state.queue_cur
    state.queue_cur = queue_bytes_now
    delta = state.queue_cur - state.queue_prev
    state.trend = state.trend - (state.trend >> weights.k) + (delta >> weights.k)
    if level_count(state.queue_cur, q_thresh) >= weights.high_water_level:
        state.dur_cnt += 1
    elif state.dur_cnt > 0:
        state.dur_cnt -= 1
    state.last_sample = now
    return state


def calc_cong_score(state: PortCongestionState, q_tables, t_tables,
                    weights: CongestionWeights) -> int:
    """Fuse queue level, trend level and persistence into an 8-bit cost."""
    q = quantize_level(state.queue_cur, q_tables.q_thresh, q_tables.level_score)
    t = quantize_level(state.trend, t_tables.t_thresh, t_tables.level_score)
    d = min(state.dur_cnt >> weights.d_shift, 255)
    score = weights.w_ql * q + weights.w_tl * t + weights.w_dp * d
    return clamp_score(score >> weights.s_cong)


def fused_cost(c_path: int, c_cong: int, w: FusionWeights) -> int:
    """Unclamped fused candidate cost alpha*c_path + beta*c_cong."""
    return w.alpha * c_path + w.beta * c_cong


@dataclass
class CostedCandidate:
    egress_port: int
    c_path: int
    c_cong: int
    fused: int
    bottleneck_capacity: int = 0
    hop_count: int = 0


def rank_candidates(candidates) -> list[CostedCandidate]:
    return sorted(candidates, key=lambda c: (c.fused, c.egress_port))


def select_egress(candidates, flow_key: int, salt: int,
                  weights: CongestionWeights) -> int:
    """Two-stage selection: keep the cheaper half, hash the flow into it.

    If every candidate is already highly congested the randomization is
    pointless and the minimum-cost port wins outright.
    """
    if not candidates:
        raise RoutingError("no candidates")
    ranked = rank_candidates(candidates)
    if all(c.c_cong >= weights.cong_high for c in ranked):
        return ranked[0].egress_port
    keep = (len(ranked) + 1) // 2
    idx = mix64((flow_key ^ salt) & MASK64) % keep
    return ranked[idx].egress_port


@dataclass
class FlowCacheEntry:
    """flowId -> egress mapping; 8 + 4 + 8 bytes of modeled switch state."""

    flow_id: int
    out_dev_idx: int
    last_seen: int


class FlowCache:
    """Bounded flow table; overflow evicts the entry with the oldest
    last_seen timestamp."""

    def __init__(self, capacity: int = 50_000):
        self.capacity = capacity
        self.entries: dict[int, FlowCacheEntry] = {}
        self.evictions = 0

    def __len__(self):
        return len(self.entries)

    def get(self, flow_id: int) -> FlowCacheEntry | None:
        return self.entries.get(flow_id)

    def remove(self, flow_id: int) -> None:
        self.entries.pop(flow_id, None)

    def insert(self, flow_id: int, out_dev_idx: int, now: int) -> None:
        if flow_id not in self.entries and len(self.entries) >= self.capacity:
            oldest = min(self.entries.values(),
                         key=lambda e: (e.last_seen, e.flow_id))
            del self.entries[oldest.flow_id]
            self.evictions += 1
        self.entries[flow_id] = FlowCacheEntry(flow_id, out_dev_idx, now)

    def gc(self, now: int, idle_timeout: int) -> int:
        """Evict exactly the entries idle for longer than idle_timeout."""
        stale = [fid for fid, e in self.entries.items()
                 if now - e.last_seen > idle_timeout]
        for fid in stale:
            del self.entries[fid]
        return len(stale)


def gc_flow_cache(switch_state, now: int, idle_timeout: int) -> int:
    if idle_timeout <= 0:
        raise ValueError("idle_timeout must be positive")
    return switch_state.cache.gc(now, idle_timeout)


CACHE_HIT = "cache_hit"
NEW_FLOW = "new_flow"
FAILOVER = "failover_reroute"


class SwitchRuntime:
    """Mutable per-switch decision state: congestion registers, flow cache,
    policy dispatch.  Owned by exactly one engine instance; the engine feeds
    live queue depths through `queue_bytes_fn(port_idx)`."""

    def __init__(self, tables: SwitchTables, policy: str,
                 fusion: FusionWeights, cong: CongestionWeights,
                 queue_bytes_fn, sample_interval_ns: int = 50_000,
                 cache_capacity: int = 50_000, trace_sink=None):
        from . import baselines  # late import; baselines builds on this module

        self.tables = tables
        self.policy = policy
        self.fusion = fusion
        self.cong = cong
        self.queue_bytes_fn = queue_bytes_fn
        self.sample_interval_ns = sample_interval_ns
        self.salt = salt64(tables.switch_id)
        self.cache = FlowCache(cache_capacity)
        self.port_state = [PortCongestionState()
                           for _ in tables.port_links]
        self.trace_sink = trace_sink
        self.decisions = {CACHE_HIT: 0, NEW_FLOW: 0, FAILOVER: 0}
        self._baselines = baselines
        if policy not in baselines.POLICIES:
            raise ValueError(f"unknown policy {policy!r}")

    # -- congestion sampling ------------------------------------------

    def sample_all_ports(self, now: int) -> None:
        for idx, state in enumerate(self.port_state):
            sample_port(state, self.queue_bytes_fn(idx), now,
                        self.tables.queue_tables[idx].q_thresh, self.cong)

    def _sample_if_due(self, port_idx: int, now: int) -> None:
        state = self.port_state[port_idx]
        if now - state.last_sample >= self.sample_interval_ns:
            sample_port(state, self.queue_bytes_fn(port_idx), now,
                        self.tables.queue_tables[port_idx].q_thresh, self.cong)

    # -- liveness ------------------------------------------------------

    def set_port_alive(self, port_idx: int, alive: bool) -> None:
        self.port_state[port_idx].alive = alive

    def port_alive(self, port_idx: int) -> bool:
        return self.port_state[port_idx].alive

    # -- the per-packet decision path ----------------------------------

    def handle_packet(self, flow_id: int, dst_dc: str, now: int):
        """Returns (egress_port_idx, decision_kind); raises RoutingError when
        no live candidate exists."""
        entry = self.cache.get(flow_id)
        if entry is not None:
            if self.port_alive(entry.out_dev_idx):
                entry.last_seen = now
                self.decisions[CACHE_HIT] += 1
                return entry.out_dev_idx, CACHE_HIT
            self.cache.remove(flow_id)
            kind = FAILOVER
        else:
            kind = NEW_FLOW

        port, costed, keep = self._decide(flow_id, dst_dc, now)
        self.cache.insert(flow_id, port, now)
        self.decisions[kind] += 1
        if self.trace_sink is not None:
            self.trace_sink(now, self.tables.switch_id, flow_id, costed,
                            keep, port, kind)
        return port, kind

    def _decide(self, flow_id: int, dst_dc: str, now: int):
        cands = self.tables.candidates.get(dst_dc, ())
        alive = [c for c in cands if self.port_alive(c.egress_port)]
        if not alive:
            raise RoutingError(
                f"{self.tables.switch_id}: no live candidate toward {dst_dc}")

        need_cong = self.policy in ("lcmp", "min_cost")
        costed = []
        for c in alive:
            if need_cong:
                self._sample_if_due(c.egress_port, now)
                c_cong = calc_cong_score(
                    self.port_state[c.egress_port],
                    self.tables.queue_tables[c.egress_port],
                    self.tables.trend_tables[c.egress_port],
                    self.cong)
            else:
                c_cong = 0
            costed.append(CostedCandidate(
                egress_port=c.egress_port, c_path=c.c_path, c_cong=c_cong,
                fused=fused_cost(c.c_path, c_cong, self.fusion),
                bottleneck_capacity=c.bottleneck_capacity,
                hop_count=c.hop_count))

        if self.policy == "lcmp":
            port = select_egress(costed, flow_id, self.salt, self.cong)
        elif self.policy == "min_cost":
            port = rank_candidates(costed)[0].egress_port
        elif self.policy == "ecmp":
            port = self._baselines.ecmp_select(costed, flow_id, self.salt)
        else:  # ucmp
            port = self._baselines.ucmp_select(costed, flow_id, self.salt)

        keep = (len(costed) + 1) // 2 if self.policy == "lcmp" else len(costed)
        return port, costed, keep

"""Reference routing policies sharing the candidate/flow-cache machinery.

ecmp hashes obliviously over all candidates of minimal hop count.  ucmp is
a capacity-biased proxy: weighted hashing proportional to each candidate's
bottleneck capacity, with no delay term, reproducing the
high-capacity/high-latency bias it is compared against.  min_cost (always
take the cheapest fused cost, no filtering or hashing) exists to
demonstrate the herd effect.
"""

from __future__ import annotations

from .data_plane import MASK64, RoutingError, mix64, rank_candidates

POLICIES = ("lcmp", "ecmp", "ucmp", "min_cost")


def _min_hop_subset(candidates):
    """ECMP treats only minimal-hop-count candidates as equal cost."""
    min_hops = min(c.hop_count for c in candidates)
    return [c for c in candidates if c.hop_count == min_hops]


def ecmp_select(candidates, flow_key: int, salt: int) -> int:
    if not candidates:
        raise RoutingError("no candidates")
    eligible = sorted(_min_hop_subset(candidates), key=lambda c: c.egress_port)
    idx = mix64((flow_key ^ salt) & MASK64) % len(eligible)
    return eligible[idx].egress_port


def ucmp_select(candidates, flow_key: int, salt: int) -> int:
    """Weighted hash with per-candidate weight proportional to bottleneck
    capacity (integer weights in Mbps so desk-scaled capacities keep their
    exact ratios)."""
    if not candidates:
        raise RoutingError("no candidates")
    eligible = sorted(candidates, key=lambda c: c.egress_port)
    weights = [max(1, c.bottleneck_capacity // 1_000_000) for c in eligible]
    total = sum(weights)
    x = mix64((flow_key ^ salt) & MASK64) % total
    acc = 0
    for cand, w in zip(eligible, weights):
        acc += w
        if x < acc:
            return cand.egress_port
    return eligible[-1].egress_port


def min_cost_select(candidates) -> int:
    if not candidates:
        raise RoutingError("no candidates")
    return rank_candidates(candidates)[0].egress_port

"""Flow-size CDF ingestion and Poisson traffic generation.

CDF file format: ASCII lines of two whitespace-separated decimal fields,
``<size_bytes> <cumulative_percent>``, both strictly increasing, final
percent 100.  Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from importlib import resources

from .control_plane import enumerate_candidate_paths
from .model import Flow, Topology


class CdfParseError(ValueError):
    pass


@dataclass(frozen=True)
class FlowSizeCdf:
    """Piecewise-linear CDF: (size_bytes, cumulative per-mille) points."""

    points: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.points:
            raise CdfParseError("empty CDF")
        prev_s, prev_p = 0, 0
        for s, p in self.points:
            if s <= prev_s:
                raise CdfParseError(f"sizes not strictly increasing at {s}")
            if p <= prev_p:
                raise CdfParseError(f"probabilities not strictly increasing at {p}")
            prev_s, prev_p = s, p
        if self.points[-1][1] != 1000:
            raise CdfParseError("last cumulative probability must be 1000 per-mille")

    def mean_bytes(self) -> float:
        """Analytic mean (trapezoid) under linear interpolation between
        points, anchored at (first size, probability 0)."""
        total = 0.0
        prev_s, prev_p = self.points[0][0], 0
        for s, p in self.points:
            total += (p - prev_p) / 1000.0 * (prev_s + s) / 2.0
            prev_s, prev_p = s, p
        return total


def load_cdf(text: str) -> FlowSizeCdf:
    points = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CdfParseError(f"line {lineno}: expected 2 fields, got {len(parts)}")
        try:
            size = int(float(parts[0]))
            permille = round(float(parts[1]) * 10)
        except ValueError as exc:
            raise CdfParseError(f"line {lineno}: {exc}") from exc
        if points and (size <= points[-1][0] or permille <= points[-1][1]):
            raise CdfParseError(f"line {lineno}: columns must both increase")
        points.append((size, permille))
    if not points:
        raise CdfParseError("empty CDF file")
    if points[-1][1] != 1000:
        raise CdfParseError(f"final cumulative percent is {points[-1][1] / 10}, not 100")
    return FlowSizeCdf(tuple(points))


def load_builtin_cdf(name: str) -> FlowSizeCdf:
    """Load one of the packaged workload shapes (web_search, hadoop, storage)."""
    path = resources.files("lcmpsim").joinpath(f"workloads/{name}.txt")
    return load_cdf(path.read_text())


def sample_flow_size(cdf: FlowSizeCdf, rng: random.Random) -> int:
    """Inverse-transform sampling with linear interpolation between points.

    Draws below the first point return its size (the first point is a mass
    point), so a single-point CDF is exactly degenerate.
    """
    u = 1000.0 * (1.0 - rng.random())  # (0, 1000]
    prev_s, prev_p = cdf.points[0][0], 0
    for s, p in cdf.points:
        if u <= p:
            frac = (u - prev_p) / (p - prev_p)
            return max(1, round(prev_s + (s - prev_s) * frac))
        prev_s, prev_p = s, p
    return cdf.points[-1][0]


@dataclass(frozen=True)
class TrafficSpec:
    mode: str = "pair"                 # pair | all_to_all | explicit
    src_dc: str | None = None
    dst_dc: str | None = None
    load_permille: int = 300
    duration_ns: int = 100_000_000
    cdf: FlowSizeCdf | None = None
    seed: int = 1
    size_divisor: int = 1              # desk-scale divisor applied to samples
    explicit_flows: tuple[Flow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.mode not in ("pair", "all_to_all", "explicit"):
            raise ValueError(f"unknown traffic mode {self.mode!r}")
        if self.mode != "explicit" and not 0 <= self.load_permille <= 1000:
            raise ValueError("load_permille must be in [0, 1000]")


def aggregate_pair_capacity(topology: Topology, src_dc: str, dst_dc: str) -> int:
    """Sum of candidate-route bottleneck capacities between a DC pair."""
    dci = topology.dci_of(src_dc)
    if dci is None:
        raise ValueError(f"DC {src_dc} has no DCI switch")
    cands = enumerate_candidate_paths(topology, dci, dst_dc)
    return sum(c.bottleneck_capacity for c in cands)


def aggregate_all_to_all_capacity(topology: Topology) -> int:
    """Topology-wide inter-DC cut: half the summed directed inter-DC capacity."""
    return sum(l.capacity for l in topology.inter_dc_links()) // 2


def generate_flows(topology: Topology, spec: TrafficSpec) -> list[Flow]:
    """Poisson arrivals sized from the CDF, paired uniformly across DC hosts.

    The arrival rate targets load_permille of the aggregate inter-DC
    bottleneck capacity for the traffic pair.  Deterministic given the seed.
    """
    if spec.mode == "explicit":
        return sorted(spec.explicit_flows, key=lambda f: (f.arrival, f.id))
    if spec.load_permille == 0 or spec.duration_ns == 0:
        return []
    if spec.cdf is None:
        raise ValueError("traffic spec needs a flow-size CDF")

    if spec.mode == "pair":
        src_dcs = [spec.src_dc, spec.dst_dc]
        dst_dcs = src_dcs
        agg = aggregate_pair_capacity(topology, spec.src_dc, spec.dst_dc)
    else:
        dcs = [d for d in topology.dcs() if topology.hosts_in(d)]
        if len(dcs) < 2:
            raise ValueError("all_to_all needs at least two DCs with hosts")
        src_dcs = dst_dcs = dcs
        agg = aggregate_all_to_all_capacity(topology)

    if agg <= 0:
        raise ValueError("no inter-DC capacity available for the traffic pair")
    hosts = {dc: topology.hosts_in(dc) for dc in set(src_dcs) | set(dst_dcs)}
    for dc, hs in hosts.items():
        if not hs:
            raise ValueError(f"DC {dc} has no hosts")

    mean_size = spec.cdf.mean_bytes() / spec.size_divisor
    lam_per_ns = (spec.load_permille / 1000.0) * agg / (8.0 * mean_size) / 1e9

    rng = random.Random(spec.seed)
    flows = []
    t = 0.0
    fid = 1
    while True:
        t += rng.expovariate(lam_per_ns)
        arrival = int(t)
        if arrival >= spec.duration_ns:
            break
        if spec.mode == "pair":
            # senders and receivers pair in both directions across the DC pair
            if rng.random() < 0.5:
                sdc, ddc = spec.src_dc, spec.dst_dc
            else:
                sdc, ddc = spec.dst_dc, spec.src_dc
        else:
            sdc = rng.choice(src_dcs)
            ddc = rng.choice([d for d in dst_dcs if d != sdc])
        src = rng.choice(hosts[sdc])
        dst = rng.choice(hosts[ddc])
        size = max(1, sample_flow_size(spec.cdf, rng) // spec.size_divisor)
        flows.append(Flow(id=fid, src=src, dst=dst, size=size, arrival=arrival,
                          src_port=1000 + fid % 50000, dst_port=4791, proto=17))
        fid += 1
    return flows

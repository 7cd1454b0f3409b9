"""Scenario files: JSON schema, loading, dumping, config dataclasses.

Top-level keys: nodes, links, dcs, routing, transport, traffic, seed, plus
optional failures and horizon_ns.  Unknown keys anywhere are rejected.
The full schema is documented in the README.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .control_plane import PathQualityWeights
from .data_plane import CongestionWeights, FusionWeights
from .engine import TransportConfig
from .model import Flow, Link, Node, Topology
from .traffic import FlowSizeCdf, TrafficSpec, load_builtin_cdf, load_cdf


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class RoutingConfig:
    policy: str = "lcmp"
    fusion: FusionWeights = field(default_factory=FusionWeights)
    path_weights: PathQualityWeights = field(default_factory=PathQualityWeights)
    cong_weights: CongestionWeights = field(default_factory=CongestionWeights)
    n_classes: int = 10
    n_queue_levels: int = 10
    n_trend_levels: int = 10
    cap_table_max: int = 400 * 10**9
    sample_interval_ns: int = 50_000
    idle_timeout_ns: int = 100_000_000
    cache_capacity: int = 50_000

    def __post_init__(self):
        if self.policy not in ("lcmp", "ecmp", "ucmp", "min_cost"):
            raise ScenarioError(f"unknown routing policy {self.policy!r}")
        if self.cong_weights.high_water_level >= self.n_queue_levels:
            raise ScenarioError("high_water_level must be < n_queue_levels")
        if self.sample_interval_ns <= 0 or self.idle_timeout_ns <= 0:
            raise ScenarioError("sampling interval and idle timeout must be "
                                "positive")


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    transport: TransportConfig = field(default_factory=TransportConfig)
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    seed: int = 1
    failures: tuple = ()
    horizon_ns: int | None = None
    trace: bool = False

    def config_echo(self) -> dict:
        r, t = self.routing, self.transport
        return {
            "policy": r.policy,
            "alpha": r.fusion.alpha, "beta": r.fusion.beta,
            "w_dl": r.path_weights.w_dl, "w_lc": r.path_weights.w_lc,
            "s_path": r.path_weights.s_path,
            "w_ql": r.cong_weights.w_ql, "w_tl": r.cong_weights.w_tl,
            "w_dp": r.cong_weights.w_dp, "s_cong": r.cong_weights.s_cong,
            "cong_high": r.cong_weights.cong_high,
            "sample_interval_ns": r.sample_interval_ns,
            "idle_timeout_ns": r.idle_timeout_ns,
            "mtu": t.mtu,
            "traffic_mode": self.traffic.mode,
            "load_permille": self.traffic.load_permille,
            "duration_ns": self.traffic.duration_ns,
            "seed": self.seed,
        }


def _require_keys(section: dict, allowed: set, where: str):
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")


_ROUTING_KEYS = {
    "policy", "alpha", "beta", "w_dl", "w_lc", "s_path",
    "w_ql", "w_tl", "w_dp", "s_cong", "k_trend", "high_water_level",
    "d_shift", "cong_high", "n_classes", "n_queue_levels", "n_trend_levels",
    "cap_table_max_gbps", "sample_interval_us", "idle_timeout_ms",
    "cache_capacity",
}

_TRANSPORT_KEYS = {
    "mtu", "rate_interval_us", "ai_step_permille", "min_rate_permille",
    "ecn_divisor", "ecn_target_us",
}

_TRAFFIC_KEYS = {
    "mode", "src_dc", "dst_dc", "load_permille", "duration_ms", "duration_us",
    "cdf_name", "cdf_file", "cdf_inline", "size_divisor", "flows",
}

_LINK_KEYS = {"id", "src", "dst", "capacity_gbps", "delay_us", "buffer_bytes"}
_TOP_KEYS = {"nodes", "links", "dcs", "routing", "transport", "traffic",
             "seed", "failures", "horizon_ns"}


def routing_config_from_dict(d: dict) -> RoutingConfig:
    _require_keys(d, _ROUTING_KEYS, "routing")
    fusion = FusionWeights(alpha=d.get("alpha", 3), beta=d.get("beta", 1))
    path_w = PathQualityWeights(
        w_dl=d.get("w_dl", 3), w_lc=d.get("w_lc", 1),
        s_path=d.get("s_path", _auto_shift(d.get("w_dl", 3) + d.get("w_lc", 1))))
    cong_w = CongestionWeights(
        w_ql=d.get("w_ql", 2), w_tl=d.get("w_tl", 1), w_dp=d.get("w_dp", 1),
        s_cong=d.get("s_cong", _auto_shift(
            d.get("w_ql", 2) + d.get("w_tl", 1) + d.get("w_dp", 1))),
        k=d.get("k_trend", 3),
        high_water_level=d.get("high_water_level", 5),
        d_shift=d.get("d_shift", 2),
        cong_high=d.get("cong_high", 192))
    return RoutingConfig(
        policy=d.get("policy", "lcmp"),
        fusion=fusion, path_weights=path_w, cong_weights=cong_w,
        n_classes=d.get("n_classes", 10),
        n_queue_levels=d.get("n_queue_levels", 10),
        n_trend_levels=d.get("n_trend_levels", 10),
        cap_table_max=int(round(d.get("cap_table_max_gbps", 400) * 1e9)),
        sample_interval_ns=d.get("sample_interval_us", 50) * 1000,
        idle_timeout_ns=d.get("idle_timeout_ms", 100) * 1_000_000,
        cache_capacity=d.get("cache_capacity", 50_000))


def _auto_shift(weight_sum: int) -> int:
    shift = 0
    while (1 << shift) < weight_sum:
        shift += 1
    return shift


def transport_config_from_dict(d: dict) -> TransportConfig:
    _require_keys(d, _TRANSPORT_KEYS, "transport")
    return TransportConfig(
        mtu=d.get("mtu", 1000),
        rate_interval_ns=d.get("rate_interval_us", 50) * 1000,
        ai_step_permille=d.get("ai_step_permille", 50),
        min_rate_permille=d.get("min_rate_permille", 10),
        ecn_divisor=d.get("ecn_divisor", 8),
        ecn_target_us=d.get("ecn_target_us"))


def traffic_spec_from_dict(d: dict) -> TrafficSpec:
    _require_keys(d, _TRAFFIC_KEYS, "traffic")
    mode = d.get("mode", "pair")
    cdf: FlowSizeCdf | None = None
    if "cdf_inline" in d:
        cdf = load_cdf(d["cdf_inline"])
    elif "cdf_file" in d:
        with open(d["cdf_file"]) as fh:
            cdf = load_cdf(fh.read())
    elif "cdf_name" in d:
        cdf = load_builtin_cdf(d["cdf_name"])
    duration_ns = 0
    if "duration_us" in d:
        duration_ns = d["duration_us"] * 1000
    elif "duration_ms" in d:
        duration_ns = d["duration_ms"] * 1_000_000
    flows = tuple(
        Flow(id=f["id"], src=f["src"], dst=f["dst"], size=f["size"],
             arrival=f.get("arrival_ns", 0))
        for f in d.get("flows", ()))
    return TrafficSpec(
        mode=mode, src_dc=d.get("src_dc"), dst_dc=d.get("dst_dc"),
        load_permille=d.get("load_permille", 300),
        duration_ns=duration_ns or 100_000_000,
        cdf=cdf, size_divisor=d.get("size_divisor", 1),
        explicit_flows=flows)


def topology_from_dict(nodes: list, links: list, dcs: dict) -> Topology:
    node_objs = []
    for n in nodes:
        _require_keys(n, {"id", "role"}, "node")
        node_objs.append(Node(id=n["id"], role=n["role"]))
    link_objs = []
    for l in links:
        _require_keys(l, _LINK_KEYS, f"link {l.get('id', '?')}")
        link_objs.append(Link(
            id=l["id"], src=l["src"], dst=l["dst"],
            capacity=int(round(l["capacity_gbps"] * 1e9)),
            propagation_delay=int(l["delay_us"]) * 1000,
            buffer_capacity=int(l["buffer_bytes"])))
    membership = {}
    for dc, member_ids in dcs.items():
        for nid in member_ids:
            membership[nid] = dc
    return Topology(node_objs, link_objs, membership)


def scenario_from_dict(doc: dict) -> Scenario:
    _require_keys(doc, _TOP_KEYS, "scenario")
    for key in ("nodes", "links", "dcs"):
        if key not in doc:
            raise ScenarioError(f"scenario: missing required key {key!r}")
    topology = topology_from_dict(doc["nodes"], doc["links"], doc["dcs"])
    failures = []
    for f in doc.get("failures", ()):
        _require_keys(f, {"link", "t_fail_us", "t_recover_us"}, "failure")
        if f["link"] not in topology.link_by_id:
            raise ScenarioError(f"failure names unknown link {f['link']!r}")
        recover = f.get("t_recover_us")
        failures.append((f["link"], f["t_fail_us"] * 1000,
                         recover * 1000 if recover is not None else None))
    failures = tuple(failures)
    return Scenario(
        topology=topology,
        routing=routing_config_from_dict(doc.get("routing", {})),
        transport=transport_config_from_dict(doc.get("transport", {})),
        traffic=traffic_spec_from_dict(doc.get("traffic", {})),
        seed=doc.get("seed", 1),
        failures=failures,
        horizon_ns=doc.get("horizon_ns"))


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def topology_to_dict(topology: Topology) -> dict:
    dcs: dict[str, list[str]] = {}
    for nid, dc in sorted(topology.dc_membership.items()):
        dcs.setdefault(dc, []).append(nid)
    return {
        "nodes": [{"id": n.id, "role": n.role} for n in topology.nodes],
        "links": [{
            "id": l.id, "src": l.src, "dst": l.dst,
            "capacity_gbps": l.capacity / 1e9,
            "delay_us": l.propagation_delay // 1000,
            "buffer_bytes": l.buffer_capacity,
        } for l in topology.links],
        "dcs": dcs,
    }


def dump_topology_json(topology: Topology) -> str:
    return json.dumps(topology_to_dict(topology), indent=2, sort_keys=True)

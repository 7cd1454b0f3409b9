"""Scenario presets for the experiment grids.

Presets are expressed in the documented scenario-dict schema and compiled
through the normal loader, so every preset run also exercises the file
format.  Capacities and flow sizes are jointly desk-scaled by `scale`
(default 100), which preserves delays, utilization levels and slowdown
while cutting event counts ~100x.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

PRESET_NAMES = ("8dc", "herd", "ablation", "weights_global", "weights_path",
                "weights_cong", "failover")

DEFAULT_SCALE = 100


@dataclass(frozen=True)
class Variant:
    """One policy/weight configuration of a plan (a column of the grid)."""

    label: str
    routing: dict


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    scenario_doc: dict
    variants: tuple
    loads: tuple
    seeds: tuple
    trace: bool = False

    def cells(self):
        for variant in self.variants:
            for load in self.loads:
                for seed in self.seeds:
                    yield variant, load, seed

    def build_cell_doc(self, variant: Variant, load: int, seed: int) -> dict:
        doc = copy.deepcopy(self.scenario_doc)
        doc.setdefault("routing", {}).update(copy.deepcopy(variant.routing))
        traffic = doc.setdefault("traffic", {})
        if traffic.get("mode", "pair") != "explicit":
            traffic["load_permille"] = load
        doc["seed"] = seed
        return doc


def _fabric(dc: str, scale: int, n_leaves: int = 2, hosts_per_leaf: int = 4,
            n_spines: int = 2):
    """Leaf-spine DC fabric: hosts - leaves - spines - one DCI switch."""
    nodes = [{"id": f"{dc}-dci", "role": "dci"}]
    links = []
    host_gbps = 100 / scale
    up_gbps = 400 / scale
    intra_buf = 32_000_000
    host_buf = 64_000_000

    def both_ways(a, b, gbps, buf):
        links.append({"id": f"{a}:{b}", "src": a, "dst": b,
                      "capacity_gbps": gbps, "delay_us": 1,
                      "buffer_bytes": buf})
        links.append({"id": f"{b}:{a}", "src": b, "dst": a,
                      "capacity_gbps": gbps, "delay_us": 1,
                      "buffer_bytes": buf})

    for s in range(n_spines):
        spine = f"{dc}-s{s}"
        nodes.append({"id": spine, "role": "spine"})
        both_ways(spine, f"{dc}-dci", up_gbps, intra_buf)
    h = 0
    for le in range(n_leaves):
        leaf = f"{dc}-l{le}"
        nodes.append({"id": leaf, "role": "leaf"})
        for s in range(n_spines):
            both_ways(leaf, f"{dc}-s{s}", host_gbps, intra_buf)
        for _ in range(hosts_per_leaf):
            host = f"{dc}-h{h}"
            h += 1
            nodes.append({"id": host, "role": "host"})
            both_ways(host, leaf, host_gbps, host_buf)
    return nodes, links


def _inter_dc_link(a_dci: str, b_dci: str, gbps: float, delay_us: int,
                   buffer_bytes: int, suffix: str = ""):
    lid = f"{a_dci}:{b_dci}{suffix}"
    return {"id": lid, "src": a_dci, "dst": b_dci, "capacity_gbps": gbps,
            "delay_us": delay_us, "buffer_bytes": buffer_bytes}


def _bdp_buffer(gbps: float, ms: int = 250) -> int:
    return max(2_000_000, int(gbps * 1e9 * ms / 1000 / 8))


def build_8dc_doc(scale: int = DEFAULT_SCALE) -> dict:
    """DC1 <-> DC8 via six transit DCs.  Inter-DC capacity classes
    {200,200,100,100,40,40} Gbps; each class has one low-delay and one
    high-delay member: 200G {250ms, 25ms}, 100G {100ms, 10ms},
    40G {50ms, 5ms} end-to-end (split evenly across the two segments)."""
    transits = [
        ("dc2", 200, 250), ("dc3", 200, 25),
        ("dc4", 100, 100), ("dc5", 100, 10),
        ("dc6", 40, 50), ("dc7", 40, 5),
    ]
    nodes, links, dcs = [], [], {}
    for dc in ["dc1"] + [t[0] for t in transits] + ["dc8"]:
        n, l = _fabric(dc, scale)
        nodes += n
        links += l
        dcs[dc] = [x["id"] for x in n]
    for dc, gbps, route_ms in transits:
        cap = gbps / scale
        seg_us = route_ms * 1000 // 2
        buf = _bdp_buffer(cap)
        for a, b in (("dc1", dc), (dc, "dc8")):
            links.append(_inter_dc_link(f"{a}-dci", f"{b}-dci", cap, seg_us, buf))
            links.append(_inter_dc_link(f"{b}-dci", f"{a}-dci", cap, seg_us, buf))
    return {
        "nodes": nodes, "links": links, "dcs": dcs,
        "routing": {"cap_table_max_gbps": 400 / scale},
        "transport": {"ecn_target_us": 8000},
        "traffic": {"mode": "pair", "src_dc": "dc1", "dst_dc": "dc8",
                    "duration_ms": 100, "cdf_name": "web_search",
                    "size_divisor": scale},
        "seed": 1,
    }


def build_parallel_doc(scale: int, routes, traffic: dict,
                       transport: dict | None = None) -> dict:
    """Two DCs joined by parallel inter-DC links (one candidate per link).
    `routes` is a list of (suffix, gbps, delay_ms, buffer_bytes)."""
    nodes, links, dcs = [], [], {}
    for dc in ("dc1", "dc2"):
        n, l = _fabric(dc, scale)
        nodes += n
        links += l
        dcs[dc] = [x["id"] for x in n]
    for suffix, gbps, delay_ms, buf in routes:
        cap = gbps / scale
        links.append(_inter_dc_link("dc1-dci", "dc2-dci", cap,
                                    delay_ms * 1000, buf, suffix))
        links.append(_inter_dc_link("dc2-dci", "dc1-dci", cap,
                                    delay_ms * 1000, buf, suffix))
    return {
        "nodes": nodes, "links": links, "dcs": dcs,
        "routing": {"cap_table_max_gbps": 400 / scale},
        "transport": dict(transport or {}),
        "traffic": traffic,
        "seed": 1,
    }


def _explicit_flows(n: int, size: int, hosts_a: int = 8, hosts_b: int = 8):
    return [{"id": i + 1, "src": f"dc1-h{i % hosts_a}",
             "dst": f"dc2-h{i % hosts_b}", "size": size, "arrival_ns": 0}
            for i in range(n)]


def preset(name: str, scale: int = DEFAULT_SCALE) -> ExperimentPlan:
    if name == "8dc":
        return ExperimentPlan(
            name=name,
            scenario_doc=build_8dc_doc(scale),
            variants=(Variant("lcmp", {"policy": "lcmp"}),
                      Variant("ecmp", {"policy": "ecmp"}),
                      Variant("ucmp", {"policy": "ucmp"})),
            loads=(300,),
            seeds=(1, 2, 3))

    if name == "herd":
        # 6 equal routes, 200 flows arriving at t=0.  Congestion sampling is
        # frozen (one enormous interval) so every candidate keeps an equal
        # fused cost for the whole burst, isolating the selection stage.
        routes = [(f"#p{i}", 100, 5, 4_000_000) for i in range(6)]
        doc = build_parallel_doc(
            scale, routes,
            traffic={"mode": "explicit",
                     "flows": _explicit_flows(200, 10_000)})
        doc["routing"]["sample_interval_us"] = 10_000_000
        return ExperimentPlan(
            name=name, scenario_doc=doc,
            variants=(Variant("lcmp", {"policy": "lcmp"}),
                      Variant("min_cost", {"policy": "min_cost"})),
            loads=(0,), seeds=(1,))

    if name == "ablation":
        # Two cheap low-delay routes plus two higher-delay escapes with
        # spare capacity.  Equal fusion weights keep both cost terms inside
        # the congestion term's dynamic range so removing either one visibly
        # changes placement; the duration counter arms at marking-level
        # queues so sustained overload on the cheap routes opens the first
        # escape.
        routes = [("#l0", 40, 5, 12_000_000), ("#l1", 40, 5, 12_000_000),
                  ("#h0", 200, 15, 12_000_000), ("#h1", 100, 100, 12_000_000)]
        doc = build_parallel_doc(
            scale, routes,
            traffic={"mode": "pair", "src_dc": "dc1", "dst_dc": "dc2",
                     "duration_ms": 100, "cdf_name": "web_search",
                     "size_divisor": scale},
            transport={"ecn_target_us": 25_000})
        doc["routing"].update({"alpha": 1, "beta": 1, "high_water_level": 1})
        return ExperimentPlan(
            name=name, scenario_doc=doc,
            variants=(Variant("lcmp", {"alpha": 1, "beta": 1}),
                      Variant("rm-alpha", {"alpha": 0, "beta": 1}),
                      Variant("rm-beta", {"alpha": 1, "beta": 0})),
            loads=(800,), seeds=(1, 2, 3))

    if name == "weights_global":
        return _weight_sweep(name, scale, [
            ("a3b1", {"alpha": 3, "beta": 1}),
            ("a1b1", {"alpha": 1, "beta": 1}),
            ("a1b3", {"alpha": 1, "beta": 3}),
        ])

    if name == "weights_path":
        return _weight_sweep(name, scale, [
            ("dl3lc1", {"w_dl": 3, "w_lc": 1}),
            ("dl1lc1", {"w_dl": 1, "w_lc": 1}),
            ("dl1lc3", {"w_dl": 1, "w_lc": 3}),
        ])

    if name == "weights_cong":
        return _weight_sweep(name, scale, [
            ("q2t1d1", {"w_ql": 2, "w_tl": 1, "w_dp": 1}),
            ("q1t2d1", {"w_ql": 1, "w_tl": 2, "w_dp": 1}),
            ("q1t1d2", {"w_ql": 1, "w_tl": 1, "w_dp": 2}),
        ])

    if name == "failover":
        # One long flow; its cached route dies mid-transfer and the next
        # packet must re-decide onto the surviving route.
        routes = [("#a", 100, 5, 8_000_000), ("#b", 100, 7, 8_000_000)]
        doc = build_parallel_doc(
            scale, routes,
            traffic={"mode": "explicit",
                     "flows": [{"id": 7, "src": "dc1-h0", "dst": "dc2-h0",
                                "size": 1_000_000, "arrival_ns": 0}]})
        doc["failures"] = [{"link": "dc1-dci:dc2-dci#a", "t_fail_us": 4000}]
        return ExperimentPlan(
            name=name, scenario_doc=doc,
            variants=(Variant("lcmp", {"policy": "lcmp"}),),
            loads=(0,), seeds=(1,), trace=True)

    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def _weight_sweep(name: str, scale: int, items) -> ExperimentPlan:
    return ExperimentPlan(
        name=name,
        scenario_doc=build_8dc_doc(scale),
        variants=tuple(Variant(lbl, dict(overrides, policy="lcmp"))
                       for lbl, overrides in items),
        loads=(300,),
        seeds=(1,))

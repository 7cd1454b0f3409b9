import pytest

from lcmpsim import engine
from lcmpsim.analysis import (ideal_fct, largest_decile, link_utilization,
                              nearest_rank, resource_report,
                              size_bucket_percentiles, slowdown_percentiles,
                              slowdown_records, SlowdownRecord)
from lcmpsim.model import Link, Node, Topology
from lcmpsim.presets import preset
from lcmpsim.scenario import scenario_from_dict

GBPS = 10**9


def two_host_topology():
    nodes = [Node("a-h0", "host"), Node("a-dci", "dci"),
             Node("b-dci", "dci"), Node("b-h0", "host")]
    links = [
        Link("l1", "a-h0", "a-dci", 100 * GBPS, 1000, 10**8),
        Link("l2", "a-dci", "b-dci", 40 * GBPS, 5_000_000, 10**8),
        Link("l3", "b-dci", "b-h0", 100 * GBPS, 1000, 10**8),
    ]
    dcs = {"a-h0": "a", "a-dci": "a", "b-dci": "b", "b-h0": "b"}
    return Topology(nodes, links, dcs)


# -- ideal FCT ----------------------------------------------------------------

def test_ideal_fct_closed_form_without_serialization():
    t = two_host_topology()
    # 5 ms propagation (plus 2 us fabric) + 8e6 bits / 40 Gbps = 5.202 ms
    got = ideal_fct(t, "a-h0", "b-h0", 1_000_000, include_serialization=False)
    assert got == 5_002_000 + 200_000


def test_ideal_fct_one_byte_is_finite_positive():
    t = two_host_topology()
    got = ideal_fct(t, "a-h0", "b-h0", 1)
    assert got > 5_000_000


def test_ideal_fct_rejects_missing_route():
    t = two_host_topology()
    with pytest.raises(ValueError):
        ideal_fct(t, "b-h0", "a-h0", 100)  # links are one-way here


def test_ideal_fct_is_policy_independent():
    plan = preset("8dc")
    ideals = []
    for label in ("lcmp", "ecmp", "ucmp"):
        v = [x for x in plan.variants if x.label == label][0]
        sc = scenario_from_dict(plan.build_cell_doc(v, 300, 1))
        ideals.append(ideal_fct(sc.topology, "dc1-h0", "dc8-h3", 123_456))
    assert len(set(ideals)) == 1


# -- percentiles ---------------------------------------------------------------

def test_nearest_rank_on_known_list():
    values = list(range(1, 101))
    assert nearest_rank(values, 500) == 50
    assert nearest_rank(values, 990) == 99
    assert nearest_rank(values, 1000) == 100


def test_all_equal_slowdowns():
    recs = [SlowdownRecord(i, 100, 300, 100) for i in range(10)]
    assert slowdown_percentiles(recs, (500, 900, 990)) == [3.0, 3.0, 3.0]


def test_single_record_percentiles():
    recs = [SlowdownRecord(1, 100, 250, 100)]
    assert slowdown_percentiles(recs, (10, 500, 990)) == [2.5, 2.5, 2.5]


def test_empty_records_raise():
    with pytest.raises(ValueError):
        slowdown_percentiles([], (500,))


def test_percentiles_monotone_on_run():
    plan = preset("8dc")
    doc = plan.build_cell_doc(plan.variants[0], 300, 1)
    doc["traffic"]["duration_ms"] = 20
    sc = scenario_from_dict(doc)
    res = engine.run(sc)
    recs = slowdown_records(res, sc.topology, sc.transport.mtu)
    p50, p90, p99 = slowdown_percentiles(recs, (500, 900, 990))
    assert p50 <= p90 <= p99


def test_slowdown_never_below_one():
    plan = preset("8dc")
    doc = plan.build_cell_doc(plan.variants[0], 300, 1)
    doc["traffic"]["duration_ms"] = 20
    sc = scenario_from_dict(doc)
    res = engine.run(sc)
    recs = slowdown_records(res, sc.topology, sc.transport.mtu)
    assert recs
    assert all(r.slowdown >= 0.99 for r in recs)


def test_size_buckets_and_largest_decile():
    recs = [SlowdownRecord(i, size=i * 100, actual_fct=2 * i, ideal_fct=i)
            for i in range(1, 101)]
    buckets = size_bucket_percentiles(recs, (500,), n_buckets=10)
    assert len(buckets) == 10
    assert buckets[-1][0] == 10_000
    top = largest_decile(recs)
    assert len(top) == 10
    assert min(r.size for r in top) == 9_100


# -- utilization ----------------------------------------------------------------

class _FakeResult:
    def __init__(self, link_bytes):
        self.link_bytes = link_bytes


def test_link_utilization_idle_full_half():
    cap = 10 * GBPS
    dur = 10**9
    assert link_utilization(_FakeResult({"l": 0}), "l", cap, dur) == 0
    full = cap // 8  # bytes that fill the link for the whole duration
    assert link_utilization(_FakeResult({"l": full}), "l", cap, dur) == 1000
    assert link_utilization(_FakeResult({"l": full // 2}), "l", cap, dur) == 500


def test_link_utilization_requires_duration():
    with pytest.raises(ValueError):
        link_utilization(_FakeResult({"l": 1}), "l", GBPS, 0)


# -- resource report --------------------------------------------------------------

def test_resource_report_worked_values():
    r = resource_report(48, 50_000, 0, 6)
    assert r.total_port_bytes == 1152
    assert r.total_flow_cache_bytes_formula == 1_000_000
    assert r.total_flow_cache_bytes_demo == 1_200_000
    assert r.per_new_flow_ops == 105


def test_resource_report_internal_consistency():
    r = resource_report(4, 10, 10_000, 2)
    assert r.per_port_bytes == 24
    assert r.per_flow_bytes_formula == 20
    assert r.path_score_bytes == 10_000
    assert r.per_new_flow_ops == 15 * 2 + 2  # int(2 * log2(2)) == 2


def test_resource_report_rejects_bad_inputs():
    with pytest.raises(ValueError):
        resource_report(0, 1, 1, 1)


def test_resource_report_render_mentions_both_flow_figures():
    text = resource_report(48, 50_000, 0, 6).render()
    assert "1000000" in text.replace(",", "") or "1000000 B" in text
    assert "1200000" in text.replace(",", "")

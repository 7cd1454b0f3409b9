import pytest

from lcmpsim.model import (Link, Node, Topology, shortest_prop_route,
                           tx_time_ns, validate_topology)
from lcmpsim.presets import preset
from lcmpsim.scenario import scenario_from_dict, topology_from_dict, topology_to_dict


def tiny_topology(cap=10**9, delay=1000, buf=10**6):
    nodes = [Node("a-h0", "host"), Node("a-dci", "dci"),
             Node("b-dci", "dci"), Node("b-h0", "host")]
    links = [
        Link("a-h0:a-dci", "a-h0", "a-dci", cap, delay, buf),
        Link("a-dci:a-h0", "a-dci", "a-h0", cap, delay, buf),
        Link("a-dci:b-dci", "a-dci", "b-dci", cap, delay, buf),
        Link("b-dci:a-dci", "b-dci", "a-dci", cap, delay, buf),
        Link("b-dci:b-h0", "b-dci", "b-h0", cap, delay, buf),
        Link("b-h0:b-dci", "b-h0", "b-dci", cap, delay, buf),
    ]
    dcs = {"a-h0": "a", "a-dci": "a", "b-dci": "b", "b-h0": "b"}
    return Topology(nodes, links, dcs)


def test_preset_topology_is_valid():
    plan = preset("8dc")
    sc = scenario_from_dict(plan.build_cell_doc(plan.variants[0], 300, 1))
    assert validate_topology(sc.topology) == []


def test_zero_capacity_link_is_flagged():
    t = tiny_topology()
    bad = Link("bad", "a-dci", "b-dci", 0, 0, 1)
    t2 = Topology(t.nodes, t.links + (bad,), t.dc_membership)
    violations = validate_topology(t2)
    assert any("bad" in v and "capacity" in v for v in violations)


def test_dangling_endpoint_is_flagged():
    t = tiny_topology()
    bad = Link("dangle", "a-dci", "ghost", 10**9, 0, 1024)
    t2 = Topology(t.nodes, t.links + (bad,), t.dc_membership)
    violations = validate_topology(t2)
    assert any("dangle" in v and "ghost" in v for v in violations)


def test_disconnected_dcs_are_flagged():
    t = tiny_topology()
    links = [l for l in t.links if l.id != "a-dci:b-dci"]
    violations = validate_topology(Topology(t.nodes, links, t.dc_membership))
    assert any("no path" in v for v in violations)


def test_topology_round_trip_through_scenario_format():
    plan = preset("8dc")
    sc = scenario_from_dict(plan.build_cell_doc(plan.variants[0], 300, 1))
    doc = topology_to_dict(sc.topology)
    again = topology_from_dict(doc["nodes"], doc["links"], doc["dcs"])
    assert again == sc.topology


def test_shortest_prop_route_picks_min_delay():
    t = tiny_topology()
    delay, links = shortest_prop_route(t, "a-h0", "b-h0")
    assert delay == 3000
    assert [l.id for l in links] == ["a-h0:a-dci", "a-dci:b-dci", "b-dci:b-h0"]
    with pytest.raises(ValueError):
        shortest_prop_route(t, "a-h0", "nowhere")


def test_tx_time_rounds_up():
    assert tx_time_ns(1000, 10**9) == 8000
    assert tx_time_ns(1, 10**9) == 8
    assert tx_time_ns(1000, 3 * 10**9) == 2667

import random

import pytest

from lcmpsim.control_plane import (ConfigurationError, PathQualityWeights,
                                   ProvisionConfig, build_capacity_tables,
                                   build_queue_tables, build_trend_tables,
                                   calc_delay_score, calc_link_cap_score,
                                   calc_path_quality, dump_switch_tables,
                                   enumerate_candidate_paths, provision_switch)
from lcmpsim.model import Link, Node, Topology
from lcmpsim.presets import preset
from lcmpsim.scenario import scenario_from_dict

GBPS = 10**9
DEFAULT_TABLES = build_capacity_tables(400 * GBPS, 10)


# -- delay score ------------------------------------------------------------

def test_delay_score_worked_values():
    assert calc_delay_score(32) == 255
    assert calc_delay_score(0) == 0
    assert calc_delay_score(16) == 127
    assert calc_delay_score(5) == 39


def test_delay_score_matches_oracle_over_full_range():
    for d in range(0, 301):
        assert calc_delay_score(d) == min(255, d * 255 // 32)


def test_delay_score_monotone():
    scores = [calc_delay_score(d) for d in range(0, 301)]
    assert scores == sorted(scores)


def test_delay_score_rejects_negative_and_bad_config():
    with pytest.raises(ValueError):
        calc_delay_score(-1)
    with pytest.raises(ConfigurationError):
        calc_delay_score(1, max_delay_ms=48, shift=5)


# -- capacity tables --------------------------------------------------------

def test_default_capacity_tables():
    t = build_capacity_tables(400 * GBPS, 10)
    assert t.thresholds == tuple((i + 1) * 40 * GBPS for i in range(10))
    assert t.level_score == (0, 28, 57, 85, 113, 142, 170, 198, 227, 255)
    assert list(t.thresholds) == sorted(set(t.thresholds))


def test_two_class_tables():
    t = build_capacity_tables(100, 2)
    assert t.thresholds == (50, 100)
    assert t.level_score == (0, 255)


def test_capacity_tables_reject_bad_class_count():
    with pytest.raises(ConfigurationError):
        build_capacity_tables(100, 1)


def test_link_cap_score_worked_values():
    assert calc_link_cap_score(400 * GBPS, DEFAULT_TABLES) == 0
    assert calc_link_cap_score(200 * GBPS, DEFAULT_TABLES) == 142
    assert calc_link_cap_score(100 * GBPS, DEFAULT_TABLES) == 227
    assert calc_link_cap_score(40 * GBPS, DEFAULT_TABLES) == 255
    assert calc_link_cap_score(1 * GBPS, DEFAULT_TABLES) == 255


def test_link_cap_score_non_increasing_in_capacity():
    prev = 256
    for gbps in range(0, 450):
        score = calc_link_cap_score(gbps * GBPS, DEFAULT_TABLES)
        assert score <= prev
        prev = score


# -- path quality -----------------------------------------------------------

def test_path_quality_worked_value():
    w = PathQualityWeights(w_dl=3, w_lc=1, s_path=2)
    assert calc_path_quality(5, 200 * GBPS, w, DEFAULT_TABLES) == 64


def test_path_quality_saturates_worst_case():
    w = PathQualityWeights(w_dl=1, w_lc=1, s_path=1)
    assert calc_path_quality(32, 1, w, DEFAULT_TABLES) == 255


def test_path_quality_best_case_is_zero():
    w = PathQualityWeights(w_dl=3, w_lc=1, s_path=2)
    assert calc_path_quality(0, 400 * GBPS, w, DEFAULT_TABLES) == 0


def test_path_quality_clamped_under_random_valid_weights():
    rng = random.Random(7)
    for _ in range(500):
        s = rng.randint(1, 6)
        w_dl = rng.randint(1, (1 << s) - 1)
        w_lc = rng.randint(1, (1 << s) - w_dl)
        w = PathQualityWeights(w_dl=w_dl, w_lc=w_lc, s_path=s)
        d = rng.randint(0, 400)
        cap = rng.randint(1, 500) * GBPS
        assert 0 <= calc_path_quality(d, cap, w, DEFAULT_TABLES) <= 255


def test_weight_invariant_enforced():
    with pytest.raises(ConfigurationError):
        PathQualityWeights(w_dl=3, w_lc=2, s_path=2)


# -- queue / trend tables ---------------------------------------------------

def test_queue_tables_partition_buffer():
    t = build_queue_tables(10_000, 10)
    assert t.q_thresh == tuple((i + 1) * 1000 for i in range(10))
    assert t.level_score[0] == 0 and t.level_score[-1] == 255


def test_trend_tables_scale_with_rate():
    t = build_trend_tables(400 * 10**6, 50_000, 10)
    # one 50us interval at 400 Mbps drains 2500 bytes
    assert t.t_thresh == tuple((j + 1) * 250 for j in range(10))
    with pytest.raises(ConfigurationError):
        build_trend_tables(1000, 50_000, 10)


# -- candidate enumeration / provisioning -----------------------------------

def chain_topology():
    """Three DCs in a line; the middle one has one candidate toward each end."""
    nodes, links, dcs = [], [], {}
    for dc in ("a", "b", "c"):
        nodes += [Node(f"{dc}-h0", "host"), Node(f"{dc}-dci", "dci")]
        links += [Link(f"{dc}-h0:{dc}-dci", f"{dc}-h0", f"{dc}-dci",
                       GBPS, 1000, 10**6),
                  Link(f"{dc}-dci:{dc}-h0", f"{dc}-dci", f"{dc}-h0",
                       GBPS, 1000, 10**6)]
        dcs[f"{dc}-h0"] = dc
        dcs[f"{dc}-dci"] = dc
    for a, b in (("a", "b"), ("b", "c")):
        links += [Link(f"{a}-dci:{b}-dci", f"{a}-dci", f"{b}-dci",
                       GBPS, 10_000, 10**6),
                  Link(f"{b}-dci:{a}-dci", f"{b}-dci", f"{a}-dci",
                       GBPS, 10_000, 10**6)]
    return Topology(nodes, links, dcs)


def test_8dc_preset_has_six_candidates():
    plan = preset("8dc")
    sc = scenario_from_dict(plan.build_cell_doc(plan.variants[0], 300, 1))
    cands = enumerate_candidate_paths(sc.topology, "dc1-dci", "dc8")
    assert len(cands) == 6


def test_own_dc_yields_no_candidates():
    plan = preset("8dc")
    sc = scenario_from_dict(plan.build_cell_doc(plan.variants[0], 300, 1))
    assert enumerate_candidate_paths(sc.topology, "dc1-dci", "dc1") == []


def test_chain_middle_switch_has_one_candidate_each_way():
    t = chain_topology()
    assert len(enumerate_candidate_paths(t, "b-dci", "a")) == 1
    assert len(enumerate_candidate_paths(t, "b-dci", "c")) == 1


def test_candidates_never_step_away_from_destination():
    # the end switch must not route to c through a detour via itself
    t = chain_topology()
    cands = enumerate_candidate_paths(t, "a-dci", "c")
    assert len(cands) == 1
    assert cands[0].hop_links == ("a-dci:b-dci", "b-dci:c-dci")
    assert cands[0].one_way_delay_ms == 1  # 20 us rounded up
    assert cands[0].bottleneck_capacity == GBPS


def test_provision_switch_is_deterministic_and_scored():
    plan = preset("8dc")
    sc = scenario_from_dict(plan.build_cell_doc(plan.variants[0], 300, 1))
    cfg = ProvisionConfig(cap_table_max=sc.routing.cap_table_max)
    t1 = provision_switch(sc.topology, "dc1-dci", cfg)
    t2 = provision_switch(sc.topology, "dc1-dci", cfg)
    assert t1 == t2
    cands = t1.candidates["dc8"]
    assert len(cands) == 6
    assert all(0 <= c.c_path <= 255 for c in cands)
    # one trend bucket per distinct port rate
    rates = {sc.topology.link_by_id[lid].capacity for lid in t1.port_links}
    assert len({tt.rate_bucket for tt in t1.trend_tables}) == len(rates)


def test_provision_rejects_non_dci_switch():
    t = chain_topology()
    with pytest.raises(ConfigurationError):
        provision_switch(t, "a-h0")


def test_provision_rejects_dci_without_inter_dc_ports():
    nodes = [Node("a-h0", "host"), Node("a-dci", "dci")]
    links = [Link("a-h0:a-dci", "a-h0", "a-dci", GBPS, 1000, 10**6),
             Link("a-dci:a-h0", "a-dci", "a-h0", GBPS, 1000, 10**6)]
    t = Topology(nodes, links, {"a-h0": "a", "a-dci": "a"})
    with pytest.raises(ConfigurationError, match="inter-DC"):
        provision_switch(t, "a-dci")


def test_tables_dump_is_readable():
    t = chain_topology()
    text = dump_switch_tables(provision_switch(t, "b-dci"))
    assert "capacity thresholds" in text
    assert "candidates -> a" in text

"""Desk-scale packet simulator and integer routing library for cost-aware
inter-datacenter multipath (lcmp) with ecmp/ucmp/min_cost baselines."""

from .analysis import ideal_fct, resource_report, slowdown_percentiles
from .control_plane import (build_capacity_tables, calc_delay_score,
                            calc_link_cap_score, calc_path_quality,
                            enumerate_candidate_paths, provision_switch)
from .data_plane import (calc_cong_score, fused_cost, gc_flow_cache, mix64,
                         quantize_level, sample_port, select_egress)
from .engine import SimResult, inject_failure, run
from .model import Flow, Link, Node, Topology, validate_topology
from .presets import preset
from .scenario import Scenario, load_scenario, scenario_from_dict
from .traffic import generate_flows, load_cdf, sample_flow_size

__version__ = "0.1.0"

__all__ = [
    "Flow", "Link", "Node", "Scenario", "SimResult", "Topology",
    "build_capacity_tables", "calc_cong_score", "calc_delay_score",
    "calc_link_cap_score", "calc_path_quality", "enumerate_candidate_paths",
    "fused_cost", "gc_flow_cache", "generate_flows", "ideal_fct",
    "inject_failure", "load_cdf", "load_scenario", "mix64", "preset",
    "provision_switch", "quantize_level", "resource_report", "run",
    "sample_flow_size", "sample_port", "scenario_from_dict", "select_egress",
    "slowdown_percentiles", "validate_topology",
]

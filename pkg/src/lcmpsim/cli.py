"""Experiment front door: presets, sweeps, seeds and report generation.

Every (variant, load, seed) cell of a plan runs one simulation and writes
flows.csv, links.csv and summary.json under <out>/<label>/<load>/<seed>/.
A comparison table (p50/p99 slowdown per variant per load) is printed and
written next to the cells.  Exit status is nonzero when any cell violates
the lossless assumption or fails validation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis, engine, presets
from .model import validate_topology
from .presets import ExperimentPlan, Variant
from .scenario import ScenarioError, scenario_from_dict


def _run_cell(args):
    doc, label, load, seed, trace, out_root = args
    scenario = scenario_from_dict(doc)
    if trace:
        scenario = dataclasses.replace(scenario, trace=True)
    problems = validate_topology(scenario.topology)
    if problems:
        raise ScenarioError("; ".join(problems))
    result = engine.run(scenario)

    cell_dir = Path(out_root) / label / str(load) / str(seed)
    cell_dir.mkdir(parents=True, exist_ok=True)
    engine.write_flows_csv(result, cell_dir / "flows.csv")
    engine.write_links_csv(result, cell_dir / "links.csv")
    analysis.write_utilization_csv(result, scenario.topology,
                                   max(1, result.makespan_ns),
                                   cell_dir / "utilization.csv")
    if result.trace is not None:
        engine.write_trace_csv(result, cell_dir / "trace.csv")

    summary = engine.run_summary(result, scenario)
    summary.update({"label": label, "load_permille": load})
    records = analysis.slowdown_records(result, scenario.topology,
                                        scenario.transport.mtu)
    if records:
        p50, p90, p99 = analysis.slowdown_percentiles(records, (500, 900, 990))
        summary["slowdown"] = {"count": len(records), "p50": p50,
                               "p90": p90, "p99": p99}
    with open(cell_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "label": label, "load": load, "seed": seed,
        "p50": summary.get("slowdown", {}).get("p50"),
        "p99": summary.get("slowdown", {}).get("p99"),
        "failed": result.lossless_violated,
        "flows": len(result.flows),
    }


def run_plan(plan: ExperimentPlan, out_dir: str, jobs: int = 1) -> int:
    """Run every cell of the plan; returns a process exit status."""
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    cell_args = [(plan.build_cell_doc(variant, load, seed), variant.label,
                  load, seed, plan.trace, str(out_root))
                 for variant, load, seed in plan.cells()]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cell_args))
    else:
        rows = [_run_cell(a) for a in cell_args]

    table = _comparison_table(rows)
    print(table)
    (out_root / "comparison.txt").write_text(table + "\n")
    with open(out_root / "comparison.json", "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if any(r["failed"] for r in rows):
        print("FAILED: at least one cell violated the lossless assumption",
              file=sys.stderr)
        return 1
    return 0


def _comparison_table(rows) -> str:
    by_cell: dict = {}
    for r in rows:
        by_cell.setdefault((r["label"], r["load"]), []).append(r)
    lines = [f"{'variant':<12} {'load':>5} {'seeds':>5} "
             f"{'p50':>9} {'p99':>9} {'status':>7}"]
    for (label, load), cell_rows in by_cell.items():
        p50s = [r["p50"] for r in cell_rows if r["p50"] is not None]
        p99s = [r["p99"] for r in cell_rows if r["p99"] is not None]
        p50 = sum(p50s) / len(p50s) if p50s else float("nan")
        p99 = sum(p99s) / len(p99s) if p99s else float("nan")
        status = "FAIL" if any(r["failed"] for r in cell_rows) else "ok"
        lines.append(f"{label:<12} {load:>5} {len(cell_rows):>5} "
                     f"{p50:>9.3f} {p99:>9.3f} {status:>7}")
    return "\n".join(lines)


def _csv_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _csv_strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lcmpsim",
        description="cost-aware inter-DC multipath routing simulator")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=presets.PRESET_NAMES,
                     help="experiment preset to run")
    src.add_argument("--scenario", metavar="FILE",
                     help="scenario JSON file to run")
    p.add_argument("--policy", metavar="LIST",
                   help="comma-separated policies (lcmp,ecmp,ucmp,min_cost)")
    p.add_argument("--load", metavar="LIST",
                   help="comma-separated offered loads in per-mille")
    p.add_argument("--seed", metavar="LIST",
                   help="comma-separated seeds")
    for flag, key in (("--alpha", "alpha"), ("--beta", "beta"),
                      ("--wdl", "w_dl"), ("--wlc", "w_lc"),
                      ("--wql", "w_ql"), ("--wtl", "w_tl"),
                      ("--wdp", "w_dp")):
        p.add_argument(flag, dest=key, type=int, default=None,
                       help=f"override routing weight {key}")
    p.add_argument("--scale", type=int, default=presets.DEFAULT_SCALE,
                   help="desk-scale divisor for capacities and flow sizes")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent simulation processes")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--trace", action="store_true",
                   help="emit per-decision trace.csv in each cell")
    p.add_argument("--resource-report", nargs=3, type=int,
                   metavar=("PORTS", "FLOWS", "M"),
                   help="print the switch resource/compute report and exit")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.resource_report:
        ports, flows, m = args.resource_report
        try:
            report = analysis.resource_report(ports, flows, 0, m)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(report.render())
        return 0

    if not args.preset and not args.scenario:
        print("error: need --preset or --scenario (or --resource-report)",
              file=sys.stderr)
        return 2

    try:
        if args.preset:
            plan = presets.preset(args.preset, scale=args.scale)
        else:
            with open(args.scenario) as fh:
                doc = json.load(fh)
            traffic = doc.get("traffic", {})
            if traffic.get("mode", "pair") == "explicit":
                loads = (0,)
            else:
                loads = (traffic.get("load_permille", 300),)
            plan = ExperimentPlan(
                name=Path(args.scenario).stem, scenario_doc=doc,
                variants=(Variant(doc.get("routing", {}).get("policy", "lcmp"),
                                  {}),),
                loads=loads,
                seeds=(doc.get("seed", 1),))

        if args.policy:
            plan = _replace(plan, variants=tuple(
                Variant(pol, {"policy": pol}) for pol in _csv_strs(args.policy)))
        if args.load:
            plan = _replace(plan, loads=tuple(_csv_ints(args.load)))
        if args.seed:
            plan = _replace(plan, seeds=tuple(_csv_ints(args.seed)))
        overrides = {k: getattr(args, k) for k in
                     ("alpha", "beta", "w_dl", "w_lc", "w_ql", "w_tl", "w_dp")
                     if getattr(args, k) is not None}
        if overrides:
            plan = _replace(plan, variants=tuple(
                Variant(v.label, {**v.routing, **overrides})
                for v in plan.variants))
        if args.trace:
            plan = _replace(plan, trace=True)

        return run_plan(plan, args.out, jobs=args.jobs)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _replace(plan: ExperimentPlan, **kw) -> ExperimentPlan:
    base = {"name": plan.name, "scenario_doc": plan.scenario_doc,
            "variants": plan.variants, "loads": plan.loads,
            "seeds": plan.seeds, "trace": plan.trace}
    base.update(kw)
    return ExperimentPlan(**base)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

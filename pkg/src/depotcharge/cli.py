"""Command-line front end.

Five subcommands cover the whole workflow:

    generate     synthesize a fleet/depot instance and write instance.json
    optimize     solve the joint design + scheduling problem
    rule-design  size a charger park by truck-to-charger ratio
    simulate     Monte Carlo validation of a design (and optional schedule)
    experiment   the full 2x2 design/scheduling comparison matrix

Every command takes --out-dir and writes fixed, documented file names so
runs are scriptable. Flags override --config (a flat JSON object keyed by
flag name); unset values fall back to built-in defaults. Outputs carry no
timestamps: identical inputs and seeds give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

from .design import InfrastructureDesign, load_design, load_schedule, rule_design, save_design, save_schedule
from .domain import OptimizationParams, ProblemInstance
from .experiments import run_experiment_matrix
from .generator import GeneratorConfig, generate_instance
from .instance_io import load_instance, save_instance
from .metrics import aggregate, render_report, write_power_curves_csv, write_report_csv
from .milp.mps import write_mps
from .optimize import InfeasibleError, OptimizationError, PlanResult, plan
from .sim import SimulationError, StochasticConfig, simulate_many
from .sim.montecarlo import mean_power_curves

_GENERATE_FIELDS = {
    # flag dest -> GeneratorConfig field
    "seed": "seed",
    "rigid": "rigid_trucks",
    "euro": "euro_trucks",
    "city": "city_trucks",
    "locations": "location_count",
    "days": "horizon_days",
    "tau": "slot_minutes",
    "legs_per_day": "legs_per_truck_per_day",
    "deliveries": "avg_deliveries_per_day",
    "tonnage": "avg_daily_tonnage",
    "radius": "disc_radius_km",
    "price_min": "price_min",
    "price_max": "price_max",
    "peak_rate": "peak_cost_rate",
    "contracted_kw": "depot_contracted_kw",
    "cold_share": "cold_tour_share",
    "charger_types": "charger_type_ids",
}


def _load_config(path: Optional[str]) -> dict[str, Any]:
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path!r} must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _pick(args: argparse.Namespace, config: dict[str, Any], name: str, default: Any = None) -> Any:
    """Flag > config file > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip() != "")


def _csv_names(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip() != "")


def _out_path(args: argparse.Namespace, name: str) -> str:
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _resolve_params(
    instance: ProblemInstance, args: argparse.Namespace, config: dict[str, Any]
) -> OptimizationParams:
    base = instance.params
    beta_minutes = _pick(args, config, "beta_slack")
    if beta_minutes is None:
        slack = base.slack_slots
    else:
        slack = int(math.ceil(float(beta_minutes) / (instance.time_grid.slot_hours * 60.0)))
    return OptimizationParams(
        peak_factor=float(_pick(args, config, "alpha_peak", base.peak_factor)),
        slack_slots=slack,
        energy_factor=float(_pick(args, config, "gamma_energy", base.energy_factor)),
        mip_gap=float(_pick(args, config, "gap", base.mip_gap)),
    )


def _resolve_stoch(args: argparse.Namespace, config: dict[str, Any]) -> StochasticConfig:
    return StochasticConfig.uniform(
        float(_pick(args, config, "delta", 0.05)),
        run_count=int(_pick(args, config, "runs", 1000)),
        master_seed=int(_pick(args, config, "seed", 0)),
    )


def _write_solve_json(path: str, result: PlanResult) -> None:
    summary = result.schedule.summary
    doc = {
        "status": result.solution.status,
        "objective": result.solution.objective,
        "best_bound": result.solution.best_bound,
        "gap": result.solution.gap,
        "nodes": result.solution.nodes,
        "iterations": result.solution.iterations,
        "energy_cost": summary["energy_cost"],
        "infrastructure_cost": summary["infrastructure_cost"],
        "peak_cost": summary["peak_cost"],
        "peak_kw": summary["peak_kw"],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_costs(result: PlanResult) -> None:
    summary = result.schedule.summary
    print(f"energy cost          {summary['energy_cost']:.4f} (weight {summary['energy_factor']:g})")
    print(f"infrastructure cost  {summary['infrastructure_cost']:.4f}")
    print(f"peak cost            {summary['peak_cost']:.4f} (weight {summary['peak_factor']:g})")
    print(f"objective            {summary['objective']:.4f}")
    gap = result.solution.gap
    print(f"gap                  {gap:.4%}" if gap is not None else "gap                  n/a")
    for loc, kw in summary["peak_kw"].items():
        print(f"peak power {loc}      {kw:.1f} kW")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    kwargs: dict[str, Any] = {}
    for dest, field in _GENERATE_FIELDS.items():
        value = _pick(args, config, dest)
        if value is not None:
            kwargs[field] = value
    if "charger_type_ids" in kwargs and isinstance(kwargs["charger_type_ids"], str):
        kwargs["charger_type_ids"] = _csv_names(kwargs["charger_type_ids"])
    if "charger_type_ids" in kwargs and isinstance(kwargs["charger_type_ids"], list):
        kwargs["charger_type_ids"] = tuple(kwargs["charger_type_ids"])
    instance = generate_instance(GeneratorConfig(**kwargs))
    path = _out_path(args, "instance.json")
    save_instance(instance, path)
    legs = sum(len(v.legs) for v in instance.vehicles)
    print(f"wrote {path}")
    print(f"trucks     {len(instance.vehicles)}")
    print(f"legs       {legs}")
    print(f"locations  {len(instance.locations)}")
    print(f"slots      {instance.time_grid.slots} x {instance.time_grid.slot_hours * 60:.0f} min")
    return 0


def cmd_optimize(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    instance = load_instance(args.instance)
    params = _resolve_params(instance, args, config)
    fixed = load_design(args.design) if args.design else None
    time_limit = _pick(args, config, "time_limit")
    result = plan(
        instance,
        params=params,
        fixed_design=fixed,
        time_limit=float(time_limit) if time_limit is not None else None,
        node_limit=int(_pick(args, config, "node_limit", 1_000_000)),
    )
    save_design(result.design, _out_path(args, "design.json"))
    save_schedule(result.schedule, _out_path(args, "schedule.json"))
    _write_solve_json(_out_path(args, "solve.json"), result)
    if _pick(args, config, "export_mps", False):
        write_mps(result.model, _out_path(args, "model.mps"))
    counts = ", ".join(
        f"{loc}:{ct}={n}"
        for loc, per_type in sorted(result.design.counts.items())
        for ct, n in sorted(per_type.items())
    )
    print(f"design               {counts or 'none'}")
    _print_costs(result)
    return 0


def cmd_rule_design(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    instance = load_instance(args.instance)
    mix = _pick(args, config, "power_mix")
    if isinstance(mix, str):
        mix = _csv_ints(mix)
    design = rule_design(
        instance,
        ratio=float(_pick(args, config, "ratio", 5.0)),
        power_mix=tuple(mix) if mix is not None else None,
    )
    path = _out_path(args, "design.json")
    save_design(design, path)
    print(f"wrote {path}")
    print(f"chargers     {design.total_chargers()}")
    print(f"total power  {design.total_power_kw(instance.charger_types):.0f} kW")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    instance = load_instance(args.instance)
    design = load_design(args.design)
    schedule = load_schedule(args.schedule) if args.schedule else None
    stoch = _resolve_stoch(args, config)
    # Connection limit defaults to the planned peak when a schedule is given,
    # otherwise to each location's contracted power.
    override = dict(schedule.summary.get("peak_kw", {})) if schedule is not None else {}
    results = simulate_many(
        instance,
        design,
        schedules=schedule,
        stoch=stoch,
        pmax_override=override,
        jobs=int(_pick(args, config, "jobs", 1)),
    )
    predicted = schedule.summary.get("energy_cost") if schedule is not None else None
    report = aggregate(
        [r.metrics for r in results],
        label="scheduled" if schedule is not None else "rule",
        predicted_energy_cost=predicted,
    )
    text = render_report([report])
    with open(_out_path(args, "report.txt"), "w") as fh:
        fh.write(text)
    write_report_csv(_out_path(args, "report.csv"), [report])
    write_power_curves_csv(
        _out_path(args, "power_curves.csv"),
        mean_power_curves(results),
        instance.time_grid.slot_hours,
    )
    print(text, end="")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    instance = load_instance(args.instance)
    params = _resolve_params(instance, args, config)
    stoch = _resolve_stoch(args, config)
    mix = _pick(args, config, "power_mix")
    if isinstance(mix, str):
        mix = _csv_ints(mix)
    outcome = run_experiment_matrix(
        instance,
        params=params,
        stoch=stoch,
        ratio=float(_pick(args, config, "ratio", 5.0)),
        power_mix=tuple(mix) if mix is not None else None,
        jobs=int(_pick(args, config, "jobs", 1)),
    )
    save_design(outcome.optimized.design, _out_path(args, "design_optimized.json"))
    save_schedule(outcome.optimized.schedule, _out_path(args, "schedule_optimized.json"))
    save_design(outcome.rule_based_design, _out_path(args, "design_rule.json"))
    save_schedule(outcome.rule_schedule_solve.schedule, _out_path(args, "schedule_rule.json"))
    _write_solve_json(_out_path(args, "solve.json"), outcome.optimized)
    reports = [row.report for row in outcome.rows]
    text = render_report(reports)
    with open(_out_path(args, "comparison.txt"), "w") as fh:
        fh.write(text)
    write_report_csv(_out_path(args, "comparison.csv"), reports)
    for row in outcome.rows:
        write_power_curves_csv(
            _out_path(args, f"power_{row.label}.csv"), row.mean_power, instance.time_grid.slot_hours
        )
    print(text, end="")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out-dir", default=".", help="directory for output files")
    sub.add_argument("--config", help="JSON file with default flag values")


def _add_opt_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha-peak", type=float, help="weight on peak power cost (default 2)")
    sub.add_argument("--beta-slack", type=float, help="schedule slack in minutes (default 15)")
    sub.add_argument("--gamma-energy", type=float, help="weight on energy cost (default 1)")
    sub.add_argument("--gap", type=float, help="relative optimality gap target (default 0.01)")
    sub.add_argument("--node-limit", type=int, help="branch and bound node budget")
    sub.add_argument("--time-limit", type=float, help="solver wall-clock budget in seconds")


def _add_sim_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--runs", type=int, help="number of Monte Carlo runs (default 1000)")
    sub.add_argument("--seed", type=int, help="master random seed (default 0)")
    sub.add_argument("--delta", type=float, help="coefficient of variation (default 0.05)")
    sub.add_argument("--jobs", type=int, help="parallel simulation workers (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depotcharge",
        description="Joint depot charging infrastructure and schedule planning.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="synthesize an instance (writes instance.json)")
    gen.add_argument("--seed", type=int, help="generator seed (default 0)")
    gen.add_argument("--rigid", type=int, help="number of rigid trucks (default 20)")
    gen.add_argument("--euro", type=int, help="number of euro trucks (default 50)")
    gen.add_argument("--city", type=int, help="number of city trucks (default 30)")
    gen.add_argument("--locations", type=int, help="number of delivery locations (default 356)")
    gen.add_argument("--days", type=int, help="planning horizon in days (default 7)")
    gen.add_argument("--tau", type=int, help="slot length in minutes (default 15)")
    gen.add_argument("--legs-per-day", type=int, help="fixed legs per truck per day")
    gen.add_argument("--deliveries", type=float, help="mean deliveries per truck per day")
    gen.add_argument("--tonnage", type=float, help="mean daily tonnage per truck")
    gen.add_argument("--radius", type=float, help="delivery disc radius in km")
    gen.add_argument("--price-min", type=float, help="floor of the energy price range")
    gen.add_argument("--price-max", type=float, help="cap of the energy price range")
    gen.add_argument("--peak-rate", type=float, help="peak power tariff per kW")
    gen.add_argument("--contracted-kw", type=float, help="depot grid connection limit")
    gen.add_argument("--cold-share", type=float, help="fraction of cooled tours")
    gen.add_argument("--charger-types", help="comma-separated charger catalog subset")
    _add_common(gen)
    gen.set_defaults(func=cmd_generate)

    opt = subs.add_parser(
        "optimize", help="solve design + schedule (writes design.json, schedule.json, solve.json)"
    )
    opt.add_argument("--instance", required=True)
    opt.add_argument("--design", help="pin charger counts to an existing design file")
    opt.add_argument("--export-mps", action="store_true", default=None, help="also write model.mps")
    _add_opt_flags(opt)
    _add_common(opt)
    opt.set_defaults(func=cmd_optimize)

    rule = subs.add_parser("rule-design", help="ratio-based design (writes design.json)")
    rule.add_argument("--instance", required=True)
    rule.add_argument("--ratio", type=float, help="trucks per charger (default 5)")
    rule.add_argument("--power-mix", help="comma-separated unit counts per charger type")
    _add_common(rule)
    rule.set_defaults(func=cmd_rule_design)

    sim = subs.add_parser(
        "simulate",
        help="Monte Carlo validation (writes report.txt, report.csv, power_curves.csv)",
    )
    sim.add_argument("--instance", required=True)
    sim.add_argument("--design", required=True)
    sim.add_argument("--schedule", help="follow this charging schedule instead of the arrival rule")
    _add_sim_flags(sim)
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    exp = subs.add_parser(
        "experiment",
        help="2x2 design/scheduling matrix (writes comparison.txt/.csv and power curves)",
    )
    exp.add_argument("--instance", required=True)
    exp.add_argument("--ratio", type=float, help="trucks per charger for the rule design")
    exp.add_argument("--power-mix", help="comma-separated unit counts per charger type")
    _add_opt_flags(exp)
    _add_sim_flags(exp)
    _add_common(exp)
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OptimizationError, SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

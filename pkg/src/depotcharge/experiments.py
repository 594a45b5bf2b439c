"""The four design/scheduling experiments compared by the toolkit.

Designs come either from the optimizer (O) or from the operator sizing rule
(R), crossed with either optimized schedules (O) or the on-arrival charging
rule (R), giving the labels OO, OR, RO and RR (design first, scheduling
second). One solve supplies the optimized design and schedule; the RO row
re-solves only the schedule with charger counts pinned to the rule design.

The power cap each simulation enforces follows the design source: rows using
an optimized solve cap at that solve's peak power, while the rule design
under rule scheduling keeps the instance's contracted power.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .design import ChargingSchedule, InfrastructureDesign, rule_design
from .domain import OptimizationParams, ProblemInstance
from .metrics import DEFAULT_THRESHOLDS, AggregateReport, aggregate
from .optimize import PlanResult, plan
from .sim.engine import StochasticConfig
from .sim.montecarlo import mean_power_curves, simulate_many

EXPERIMENT_LABELS = ("OO", "OR", "RO", "RR")


@dataclass(frozen=True)
class ExperimentRow:
    label: str
    design: InfrastructureDesign
    schedule: Optional[ChargingSchedule]
    pmax_override: Mapping[str, float]
    report: AggregateReport
    mean_power: Mapping[str, Mapping[str, Sequence[float]]]


@dataclass(frozen=True)
class ExperimentOutcome:
    rows: tuple[ExperimentRow, ...]
    optimized: PlanResult
    rule_schedule_solve: PlanResult
    rule_based_design: InfrastructureDesign

    def row(self, label: str) -> ExperimentRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def run_experiment_matrix(
    instance: ProblemInstance,
    params: Optional[OptimizationParams] = None,
    stoch: Optional[StochasticConfig] = None,
    ratio: float = 5.0,
    power_mix: Optional[Sequence[int]] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    jobs: int = 1,
    gap: Optional[float] = None,
    node_limit: int = 1_000_000,
    time_limit: Optional[float] = None,
) -> ExperimentOutcome:
    """Solve, size, and simulate all four experiments.

    Cost deltas in every row are measured against the optimized solve's
    planned energy cost, so the OO row shows the stochastic drift of the plan
    itself and the other rows show what their strategy gives up on top.
    """
    stoch = stoch or StochasticConfig()
    optimized = plan(instance, params, gap=gap, node_limit=node_limit, time_limit=time_limit)
    rule_d = rule_design(instance, ratio=ratio, power_mix=power_mix)
    rule_s = plan(
        instance, params, fixed_design=rule_d, gap=gap, node_limit=node_limit, time_limit=time_limit
    )

    predicted = float(optimized.schedule.summary["energy_cost"])
    peaks_opt = dict(optimized.schedule.summary["peak_kw"])
    peaks_rule = dict(rule_s.schedule.summary["peak_kw"])

    matrix = (
        ("OO", optimized.design, optimized.schedule, peaks_opt),
        ("OR", optimized.design, None, peaks_opt),
        ("RO", rule_d, rule_s.schedule, peaks_rule),
        ("RR", rule_d, None, {}),
    )
    rows = []
    for label, design, schedule, pmax in matrix:
        results = simulate_many(
            instance,
            design,
            schedule,
            stoch,
            pmax_override=pmax,
            thresholds=thresholds,
            jobs=jobs,
        )
        report = aggregate(
            [r.metrics for r in results], label=label, predicted_energy_cost=predicted
        )
        rows.append(
            ExperimentRow(label, design, schedule, pmax, report, mean_power_curves(results))
        )
    return ExperimentOutcome(tuple(rows), optimized, rule_s, rule_d)

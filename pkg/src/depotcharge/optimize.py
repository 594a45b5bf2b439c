"""End-to-end planning pipeline: build the MILP, solve, verify, extract.

Thin orchestration over the milp subpackage so the CLI, the experiment
driver and the tests all solve through one code path. Every incumbent is
re-checked with the independent feasibility verifier before extraction;
a violation there means a solver bug and raises instead of returning a
plan the optimizer never certified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .design import ChargingSchedule, InfrastructureDesign
from .domain import OptimizationParams, ProblemInstance
from .milp.branch_and_bound import Solution, branch_and_bound
from .milp.builder import build_model
from .milp.extract import extract_design_and_schedule
from .milp.feasibility import check_feasibility
from .milp.heuristics import make_charging_rounder
from .milp.model import MilpModel


class OptimizationError(RuntimeError):
    pass


class InfeasibleError(OptimizationError):
    def __init__(self, detail: str):
        super().__init__(f"instance is infeasible: {detail}")
        self.detail = detail


@dataclass(frozen=True)
class PlanResult:
    design: InfrastructureDesign
    schedule: ChargingSchedule
    solution: Solution
    model: MilpModel


def plan(
    instance: ProblemInstance,
    params: Optional[OptimizationParams] = None,
    fixed_design: Optional[InfrastructureDesign] = None,
    gap: Optional[float] = None,
    node_limit: int = 1_000_000,
    time_limit: Optional[float] = None,
) -> PlanResult:
    """Solve the joint design and scheduling problem for ``instance``.

    ``fixed_design`` pins the charger counts, leaving only the schedule to
    optimize. ``gap`` defaults to the instance parameters' mip_gap.
    """
    params = params if params is not None else instance.params
    if gap is None:
        gap = params.mip_gap
    model = build_model(instance, params=params, fixed_design=fixed_design)
    rounder = make_charging_rounder(model)
    solution = branch_and_bound(
        model,
        gap=gap,
        node_limit=node_limit,
        time_limit=time_limit,
        heuristic=rounder,
    )
    if solution.status == "infeasible":
        names = [model.rows[i].name for i in solution.bad_rows]
        raise InfeasibleError(
            "unsatisfiable constraints: " + ", ".join(names)
            if names
            else (solution.detail or "no feasible schedule exists")
        )
    if solution.status == "unbounded":
        raise OptimizationError(f"model is unbounded: {solution.detail}")
    if solution.x is None:
        raise OptimizationError(
            f"solver stopped ({solution.status}) without a feasible plan: {solution.detail}"
        )
    report = check_feasibility(model, solution.x)
    if not report.ok:
        raise OptimizationError(
            "solver returned an infeasible incumbent: " + "; ".join(report.violations[:3])
        )
    design, schedule = extract_design_and_schedule(
        model, solution.x, instance, solution.objective, solution.gap
    )
    return PlanResult(design=design, schedule=schedule, solution=solution, model=model)

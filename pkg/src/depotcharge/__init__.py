"""Joint design of depot charging infrastructure and truck charge schedules,
with a discrete-event simulation to stress the results under uncertainty."""

__version__ = "0.1.0"

from .design import (
    ChargingSchedule,
    ChargingSession,
    InfrastructureDesign,
    LegPlan,
    load_design,
    load_schedule,
    rule_design,
    save_design,
    save_schedule,
)
from .domain import (
    ChargerType,
    Location,
    OptimizationParams,
    ProblemInstance,
    TimeGrid,
    TripLeg,
    Vehicle,
    compute_leg_energy,
    charging_window,
    validate_instance,
)
from .experiments import ExperimentOutcome, ExperimentRow, run_experiment_matrix
from .generator import GeneratorConfig, GeneratorError, generate_instance
from .instance_io import load_instance, save_instance
from .metrics import AggregateReport, MetricsError, RunMetrics, aggregate, compute_run_metrics
from .optimize import InfeasibleError, OptimizationError, PlanResult, plan
from .sim import (
    EventLog,
    SimulationError,
    StochasticConfig,
    load_event_log,
    run_simulation,
    save_event_log,
    simulate_many,
)

__all__ = [
    "AggregateReport",
    "EventLog",
    "ExperimentOutcome",
    "ExperimentRow",
    "MetricsError",
    "RunMetrics",
    "SimulationError",
    "StochasticConfig",
    "aggregate",
    "compute_run_metrics",
    "load_event_log",
    "run_experiment_matrix",
    "run_simulation",
    "save_event_log",
    "simulate_many",
    "GeneratorConfig",
    "GeneratorError",
    "InfeasibleError",
    "OptimizationError",
    "PlanResult",
    "generate_instance",
    "plan",
    "ChargerType",
    "ChargingSchedule",
    "ChargingSession",
    "InfrastructureDesign",
    "LegPlan",
    "Location",
    "OptimizationParams",
    "ProblemInstance",
    "TimeGrid",
    "TripLeg",
    "Vehicle",
    "compute_leg_energy",
    "charging_window",
    "load_design",
    "load_instance",
    "load_schedule",
    "rule_design",
    "save_design",
    "save_instance",
    "save_schedule",
    "validate_instance",
    "__version__",
]

"""Discrete-event fleet simulation: agents, queues, policies and run logs."""

from .engine import SimulationError, StochasticConfig, run_simulation
from .events import (
    ArrivalRecord,
    ChargeSession,
    EventLog,
    FailureRecord,
    QueueEvent,
    SessionSegment,
    StateChange,
    iter_slot_overlaps,
    load_event_log,
    save_event_log,
)
from .montecarlo import RunResult, mean_power_curves, simulate_many
from .policies import (
    SessionDirective,
    build_directives,
    charger_choice,
    rule_charge_amount,
    rule_lookahead_kwh,
    sample_perturbation,
)

__all__ = [
    "ArrivalRecord",
    "ChargeSession",
    "EventLog",
    "FailureRecord",
    "QueueEvent",
    "RunResult",
    "SessionDirective",
    "SessionSegment",
    "SimulationError",
    "StateChange",
    "StochasticConfig",
    "build_directives",
    "charger_choice",
    "iter_slot_overlaps",
    "load_event_log",
    "mean_power_curves",
    "rule_charge_amount",
    "rule_lookahead_kwh",
    "run_simulation",
    "sample_perturbation",
    "save_event_log",
    "simulate_many",
]

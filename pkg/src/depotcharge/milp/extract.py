"""Turn a solved model vector back into design and schedule artifacts."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..design import ChargingSchedule, ChargingSession, InfrastructureDesign, LegPlan
from ..domain import ProblemInstance
from .model import MilpModel, decode_symbol

INTEGRALITY_HARD = 1e-5


class ExtractionError(RuntimeError):
    pass


def extract_design_and_schedule(
    model: MilpModel,
    x: np.ndarray,
    instance: ProblemInstance,
    objective: Optional[float] = None,
    gap: Optional[float] = None,
) -> tuple[InfrastructureDesign, ChargingSchedule]:
    """Decode installed charger counts and per-truck charge plans from ``x``.

    Integer variables further than ``INTEGRALITY_HARD`` from an integer are a
    hard error: silently rounding those would hand the simulation a plan the
    optimizer never certified.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.n_variables:
        raise ExtractionError(
            f"solution has {x.shape[0]} values for {model.n_variables} variables"
        )
    for var in model.variables:
        if var.integer:
            v = x[var.index]
            if abs(v - round(v)) > INTEGRALITY_HARD:
                raise ExtractionError(
                    f"variable {var.name} = {v!r} is not integral within {INTEGRALITY_HARD}"
                )

    grid = instance.time_grid
    tau = grid.slot_hours
    eff = {ct.id: ct.efficiency for ct in instance.charger_types}
    rated = {ct.id: ct.rated_kw for ct in instance.charger_types}
    catalog = list(instance.charger_types)
    slot_rated: dict[str, dict[int, float]] = {}

    counts: dict[str, dict[str, int]] = {}
    for var in model.variables_of_kind("X"):
        kind, keys = decode_symbol(var.name)
        loc, ct = keys
        n = int(round(x[var.index]))
        if n:
            counts.setdefault(loc, {})[ct] = n
    design = InfrastructureDesign(counts=counts)

    price_of = {loc.id: loc.energy_price_per_slot for loc in instance.locations}

    # Y names carry (vehicle, leg, charger, slot); bucket the active ones
    active: dict[tuple[str, str], list[tuple[str, int]]] = {}
    for var in model.variables_of_kind("Y"):
        if x[var.index] < 0.5:
            continue
        _, keys = decode_symbol(var.name)
        active.setdefault((keys[0], keys[1]), []).append((keys[2], int(keys[3])))

    legs: dict[str, tuple[LegPlan, ...]] = {}
    energy_cost = 0.0
    total_charged = 0.0
    for veh in instance.vehicles:
        plans = []
        for li, leg in enumerate(veh.legs):
            sessions = []
            for ct_id, t in active.get((veh.id, str(li)), ()):
                power = float(x[model.variable_index(f"Pr({veh.id},{li},{ct_id},{t})")])
                sessions.append(ChargingSession(slot=t, charger_type=ct_id, power_kw=power))
                energy_cost += tau * (power / eff[ct_id]) * price_of[leg.origin][t]
                by_slot = slot_rated.setdefault(leg.origin, {})
                by_slot[t] = by_slot.get(t, 0.0) + rated[ct_id]
            sessions.sort(key=lambda s: s.slot)
            e_ch = float(x[model.variable_index(f"Ech({veh.id},{li})")])
            total_charged += e_ch
            plans.append(
                LegPlan(
                    leg_index=li,
                    sessions=tuple(sessions),
                    depart_slot=float(x[model.variable_index(f"dep({veh.id},{li})")]),
                    arrive_slot=float(x[model.variable_index(f"arr({veh.id},{li})")]),
                    energy_depart_kwh=float(x[model.variable_index(f"Edep({veh.id},{li})")]),
                    energy_arrive_kwh=float(x[model.variable_index(f"Earr({veh.id},{li})")]),
                    energy_charged_kwh=e_ch,
                )
            )
        legs[veh.id] = tuple(plans)

    peak_kw: dict[str, float] = {}
    peak_cost = 0.0
    for var in model.variables_of_kind("Cpk"):
        _, keys = decode_symbol(var.name)
        loc_id = keys[0]
        rate = instance.location(loc_id).peak_cost_rate
        peak_cost += float(x[var.index])
        priced = float(x[var.index]) / rate if rate > 0 else 0.0
        # the epigraph value can sit a float hair below the committed rated
        # power; report whichever is larger so downstream caps never reject
        # the very plan this solve certified
        realized = max(slot_rated.get(loc_id, {}).values(), default=0.0)
        peak_kw[loc_id] = max(priced, realized)

    params = instance.params
    summary = {
        "objective": float(objective) if objective is not None else model.evaluate_objective(x),
        "energy_cost": energy_cost,
        "infrastructure_cost": design.capital_cost(catalog),
        "peak_cost": peak_cost,
        "peak_kw": {k: peak_kw[k] for k in sorted(peak_kw)},
        "total_energy_kwh": total_charged,
        "energy_factor": params.energy_factor,
        "peak_factor": params.peak_factor,
    }
    if gap is not None:
        summary["gap"] = float(gap)
    return design, ChargingSchedule(legs=legs, summary=summary)


def solution_dump(model: MilpModel, x: np.ndarray, tol: float = 1e-9) -> str:
    """Readable listing of the nonzero solution entries, one per line."""
    x = np.asarray(x, dtype=float)
    lines = []
    for var in model.variables:
        v = x[var.index]
        if abs(v) > tol:
            lines.append(f"{var.name} = {v:.10g}")
    return "\n".join(lines) + ("\n" if lines else "")

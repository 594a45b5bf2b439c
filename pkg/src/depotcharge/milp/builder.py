"""Assembles the joint infrastructure-and-scheduling program.

Decision variables, per truck k and leg l (0-indexed):

* ``X(i,r)``      integer charger counts per charger-capable location and type
* ``Y(k,l,r,t)``  binary: truck k charges for leg l with type r during slot t
* ``Pt(k,l,t)``   total battery-side charging power in slot t
* ``Pr(k,l,r,t)`` per-type share of that power (keeps the efficiency-weighted
                  energy cost linear)
* ``u/v(k,l,t)``  transition indicators between consecutive window slots
* ``Ech/Edep/Earr(k,l)`` charged energy and the departure/arrival energy ledger
* ``dep/arr(k,l)`` actual departure and arrival times, in slot units
* ``Cpk(i)``      peak-power epigraph per location

Constraint families (row name prefixes):

* ``energy_def``        Ech = tau * sum_t Pt
* ``power_agg``         Pt = sum_r Pr
* ``power_cap``         Pr <= rated_r * Y
* ``energy_min``        Edep + Ech - Econs >= Emin
* ``soe_arrival``       Earr <= Edep + Ech - Econs
* ``soe_chain``         Earr_{l-1} = Edep_l
* ``battery_cap``       Edep + Ech <= Emax
* ``charge_before_dep`` (t+1) * sum_r Y <= dep   (a slot-t block ends at t+1)
* ``charge_after_arr``  arr_{l-1} <= t when any Y(t) is active (big-M on the
                        arrival bound; a truck cannot plug in before it is back,
                        which also stops consecutive overlapping windows from
                        charging one truck on two plugs at once)
* ``travel_time``       dep_l + travel_l + slack <= arr_l   (legs with a successor)
* ``service_time``      arr_{l-1} + load_{l-1} + unload_{l-1} <= dep_l
* ``charger_count``     sum_{k,l} Y <= X per (location, type, slot)
* ``single_type``       sum_r Y <= 1 per (truck, leg, slot)
* ``switch_up/down``    Y_{t-1} - Y_t <= u,  Y_t - Y_{t-1} <= v
* ``switch_budget``     u + v <= 1  (forbids direct type switches)
* ``peak_def``          sum rated_r * c_peak * Y <= Cpk per (location, slot)

The departure-latest cap, the boundary state-of-charge rules (first-leg
arrival capped at phi*Emax, last-leg arrival floored at phi*Emax) and the
fixed initial energy (Edep of leg 0 = phi*Emax) are expressed as variable
bounds. Objective: energy_factor * charging cost (grid side, per-slot price)
+ charger capital cost + peak_factor * peak cost.
"""

from __future__ import annotations

import math
from typing import Optional

from ..design import InfrastructureDesign
from ..domain import OptimizationParams, ProblemInstance, charging_window, compute_leg_energy
from .model import MilpModel, encode_symbol


def build_model(
    instance: ProblemInstance,
    params: Optional[OptimizationParams] = None,
    fixed_design: Optional[InfrastructureDesign] = None,
) -> MilpModel:
    params = params if params is not None else instance.params
    grid = instance.time_grid
    tau = grid.slot_hours
    catalog = instance.charger_types
    n_trucks = len(instance.vehicles)
    loc_map = instance.location_map()
    charge_sites = [loc for loc in instance.locations if loc.chargers_allowed]
    site_ids = {loc.id for loc in charge_sites}
    max_rated = max((ct.rated_kw for ct in catalog), default=0.0)

    model = MilpModel("depot-charging")
    model.metadata["slack_slots"] = params.slack_slots
    model.metadata["slot_hours"] = tau
    warnings: list[str] = []
    model.metadata["warnings"] = warnings

    if fixed_design is not None:
        for loc_id, per in fixed_design.counts.items():
            for type_id, n in per.items():
                if n and (loc_id not in site_ids or type_id not in {c.id for c in catalog}):
                    raise ValueError(
                        f"fixed design places {n} x {type_id} at {loc_id}, which the "
                        f"instance does not allow"
                    )

    # charger-count variables exist for every charger-capable location even if
    # no leg ever departs there (they simply optimize to zero)
    x_idx: dict[tuple[str, str], int] = {}
    for loc in charge_sites:
        for ct in catalog:
            lb, ub = 0.0, float(n_trucks)
            if fixed_design is not None:
                fixed = fixed_design.count(loc.id, ct.id)
                lb = ub = float(fixed)
            x_idx[(loc.id, ct.id)] = model.add_variable(
                encode_symbol("X", loc.id, ct.id), lb=lb, ub=ub, integer=True,
                obj=ct.capital_cost,
            )

    # per-(location, type, slot) usage collectors for charger_count rows and
    # per-(location, slot) collectors for the peak epigraph
    usage: dict[tuple[str, str, int], list[int]] = {}
    peak_terms: dict[tuple[str, int], list[tuple[int, float]]] = {}

    for veh in instance.vehicles:
        k = veh.id
        emax = veh.battery_kwh
        emin = veh.min_energy_kwh
        phi_e = veh.soc_boundary * emax
        last = len(veh.legs) - 1
        prev_earr: Optional[int] = None
        prev_arr_var: Optional[int] = None
        prev_arr_ub = 0.0
        prev_service_slots = 0.0

        for l, leg in enumerate(veh.legs):
            econs = compute_leg_energy(veh, leg)
            window = charging_window(veh, l, params.slack_slots, grid)
            chargeable = leg.origin in site_ids and len(window) > 0 and len(catalog) > 0

            dep = model.add_variable(
                encode_symbol("dep", k, l),
                lb=float(leg.depart_earliest),
                ub=float(leg.depart_latest + params.slack_slots),
            )
            arr_ub = float(min(grid.slots, leg.arrive_latest + params.slack_slots))
            arr = model.add_variable(
                encode_symbol("arr", k, l), lb=float(leg.arrive_earliest), ub=arr_ub
            )
            edep = model.add_variable(
                encode_symbol("Edep", k, l),
                lb=phi_e if l == 0 else 0.0,
                ub=phi_e if l == 0 else emax,
            )
            earr_lb = phi_e if l == last else 0.0
            earr = model.add_variable(encode_symbol("Earr", k, l), lb=earr_lb, ub=emax)

            ech_ub = min(emax, tau * max_rated * len(window)) if chargeable else 0.0
            ech = model.add_variable(encode_symbol("Ech", k, l), lb=0.0, ub=ech_ub)

            if chargeable:
                loc = loc_map[leg.origin]
                prices = loc.energy_price_per_slot
                pt_idx: dict[int, int] = {}
                y_idx: dict[tuple[str, int], int] = {}
                for t in window:
                    pt_idx[t] = model.add_variable(
                        encode_symbol("Pt", k, l, t), lb=0.0, ub=max_rated
                    )
                for ct in catalog:
                    for t in window:
                        y = model.add_variable(
                            encode_symbol("Y", k, l, ct.id, t), lb=0.0, ub=1.0, integer=True
                        )
                        y_idx[(ct.id, t)] = y
                        pr = model.add_variable(
                            encode_symbol("Pr", k, l, ct.id, t),
                            lb=0.0,
                            ub=ct.rated_kw,
                            obj=params.energy_factor * tau * prices[t] / ct.efficiency,
                        )
                        model.add_constraint(
                            encode_symbol("power_cap", k, l, ct.id, t),
                            {pr: 1.0, y: -ct.rated_kw},
                            "<=",
                            0.0,
                        )
                        usage.setdefault((loc.id, ct.id, t), []).append(y)
                        peak_terms.setdefault((loc.id, t), []).append(
                            (y, ct.rated_kw * loc.peak_cost_rate)
                        )

                for t in window:
                    agg = {pt_idx[t]: 1.0}
                    for ct in catalog:
                        agg[model.variable_index(encode_symbol("Pr", k, l, ct.id, t))] = -1.0
                    model.add_constraint(encode_symbol("power_agg", k, l, t), agg, "==", 0.0)
                    model.add_constraint(
                        encode_symbol("single_type", k, l, t),
                        {y_idx[(ct.id, t)]: 1.0 for ct in catalog},
                        "<=",
                        1.0,
                    )
                    model.add_constraint(
                        encode_symbol("charge_before_dep", k, l, t),
                        {y_idx[(ct.id, t)]: float(t + 1) for ct in catalog} | {dep: -1.0},
                        "<=",
                        0.0,
                    )
                    if prev_arr_var is not None:
                        big_m = prev_arr_ub - t
                        if big_m > 0:
                            model.add_constraint(
                                encode_symbol("charge_after_arr", k, l, t),
                                {y_idx[(ct.id, t)]: big_m for ct in catalog}
                                | {prev_arr_var: 1.0},
                                "<=",
                                float(t) + big_m,
                            )

                model.add_constraint(
                    encode_symbol("energy_def", k, l),
                    {ech: 1.0} | {pt_idx[t]: -tau for t in window},
                    "==",
                    0.0,
                )

                # transition indicators between consecutive window slots
                for t in window:
                    if t - 1 not in window:
                        continue
                    u = model.add_variable(encode_symbol("u", k, l, t), 0.0, 1.0, integer=True)
                    v = model.add_variable(encode_symbol("v", k, l, t), 0.0, 1.0, integer=True)
                    for ct in catalog:
                        y_prev = y_idx[(ct.id, t - 1)]
                        y_cur = y_idx[(ct.id, t)]
                        model.add_constraint(
                            encode_symbol("switch_up", k, l, ct.id, t),
                            {y_prev: 1.0, y_cur: -1.0, u: -1.0},
                            "<=",
                            0.0,
                        )
                        model.add_constraint(
                            encode_symbol("switch_down", k, l, ct.id, t),
                            {y_cur: 1.0, y_prev: -1.0, v: -1.0},
                            "<=",
                            0.0,
                        )
                    model.add_constraint(
                        encode_symbol("switch_budget", k, l, t), {u: 1.0, v: 1.0}, "<=", 1.0
                    )
            elif leg.origin in site_ids and len(catalog) > 0 and len(window) == 0:
                warnings.append(
                    f"vehicle {k} leg {l}: empty charging window, leg relies on carried energy"
                )

            # energy feasibility and the arrival-state tie
            model.add_constraint(
                encode_symbol("energy_min", k, l), {edep: 1.0, ech: 1.0}, ">=", emin + econs
            )
            model.add_constraint(
                encode_symbol("soe_arrival", k, l),
                {earr: 1.0, edep: -1.0, ech: -1.0},
                "<=",
                -econs,
            )
            model.add_constraint(
                encode_symbol("battery_cap", k, l), {edep: 1.0, ech: 1.0}, "<=", emax
            )
            if l > 0:
                model.add_constraint(
                    encode_symbol("soe_chain", k, l), {prev_earr: 1.0, edep: -1.0}, "==", 0.0
                )
                model.add_constraint(
                    encode_symbol("service_time", k, l),
                    {prev_arr_var: 1.0, dep: -1.0},
                    "<=",
                    -prev_service_slots,
                )
            if l < last:
                model.add_constraint(
                    encode_symbol("travel_time", k, l),
                    {dep: 1.0, arr: -1.0},
                    "<=",
                    -(grid.hours_to_slots(leg.travel_hours) + params.slack_slots),
                )

            prev_earr = earr
            prev_arr_var = arr
            prev_arr_ub = arr_ub
            prev_service_slots = grid.hours_to_slots(leg.load_hours + leg.unload_hours)

        _append_reserve_warnings(warnings, instance, veh, params)

    # capacity ties and the peak epigraph, only where some Y exists
    for (loc_id, type_id, t), ys in sorted(usage.items()):
        row = {y: 1.0 for y in ys}
        row[x_idx[(loc_id, type_id)]] = -1.0
        model.add_constraint(encode_symbol("charger_count", loc_id, type_id, t), row, "<=", 0.0)

    cpk_idx: dict[str, int] = {}
    for (loc_id, t), terms in sorted(peak_terms.items()):
        if loc_id not in cpk_idx:
            cpk_idx[loc_id] = model.add_variable(
                encode_symbol("Cpk", loc_id), lb=0.0, ub=math.inf, obj=params.peak_factor
            )
        row = {y: coef for y, coef in terms}
        row[cpk_idx[loc_id]] = -1.0
        model.add_constraint(encode_symbol("peak_def", loc_id, t), row, "<=", 0.0)

    return model


def _append_reserve_warnings(
    warnings: list[str],
    instance: ProblemInstance,
    veh,
    params: OptimizationParams,
) -> None:
    """Optimistic energy scan: flag legs that cannot keep the reserve floor
    even if the truck tops up to full at every charging opportunity."""
    grid = instance.time_grid
    site_ids = {loc.id for loc in instance.locations if loc.chargers_allowed}
    have_types = len(instance.charger_types) > 0
    emax = veh.battery_kwh
    energy = veh.soc_boundary * emax
    for l, leg in enumerate(veh.legs):
        window = charging_window(veh, l, params.slack_slots, grid)
        if have_types and leg.origin in site_ids and len(window) > 0:
            energy = emax
        energy -= compute_leg_energy(veh, leg)
        if energy < veh.min_energy_kwh - 1e-9:
            warnings.append(
                f"vehicle {veh.id} leg {l}: cannot stay above the reserve floor even "
                f"with full recharges; best case {energy:.2f} kWh on arrival"
            )
            energy = max(energy, 0.0)
    if veh.legs and energy < veh.soc_boundary * emax - 1e-9:
        warnings.append(
            f"vehicle {veh.id}: cannot reach the end-of-horizon state-of-charge target; "
            f"best case {energy:.2f} kWh after the last leg"
        )

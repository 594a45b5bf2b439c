"""Synthetic fleet/itinerary generator.

Produces problem instances statistically matched to the reference case
study: a single depot serving a disc of retail locations, three truck
classes, a five-type charger catalog, day-shaped hourly energy prices and
multi-drop tours sized so that every truck can actually complete its week
on battery power.

Feasibility screens applied during construction:

* single leg:  consumption <= (Emax - Emin) * margin
* whole tour:  consumption <= (Emax - Emin) * margin   (no charging at stops)
* final tour:  consumption <= (1 - phi) * Emax * margin  (the week must end
  at or above the boundary state of charge, and nothing charges after the
  last arrival)

A configuration that cannot satisfy a screen raises GeneratorError naming
the binding screen instead of emitting a broken instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Optional

import numpy as np

from .domain import (
    ChargerType,
    Location,
    OptimizationParams,
    ProblemInstance,
    TimeGrid,
    TripLeg,
    Vehicle,
    compute_leg_energy,
    validate_instance,
)

ROAD_FACTOR = 1.3          # euclidean -> road distance
SPEED_KMH = 40.0
SOC_BOUNDARY = 0.8
MIN_ENERGY_FRACTION = 0.05
SCREEN_MARGIN = 0.9

# truck classes: empty weight [t], max payload [t], battery [kWh]
TRUCK_CLASSES = {
    "rigid": (10.0, 8.0, 225.0),
    "euro": (14.0, 10.0, 315.0),
    "city": (14.5, 10.0, 315.0),
}
CONSUMPTION_KWH_PER_TON_KM = 0.08
AUX_KW = 2.0
COOLING_KW = 3.0

# charger catalog: rated kW, scaled capital cost, efficiency
CHARGER_CATALOG = (
    ("kw60", 60.0, 0.08, 0.98),
    ("kw180", 180.0, 0.16, 0.98),
    ("kw360", 360.0, 0.33, 0.97),
    ("kw720", 720.0, 0.5, 0.97),
    ("kw1080", 1080.0, 1.0, 0.97),
)


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    rigid_trucks: int = 20
    euro_trucks: int = 50
    city_trucks: int = 30
    location_count: int = 356
    avg_deliveries_per_day: float = 2.15
    avg_daily_tonnage: float = 29.28
    horizon_days: int = 7
    price_min: float = 0.043
    price_max: float = 0.151
    slot_minutes: int = 15
    legs_per_truck_per_day: Optional[float] = None
    disc_radius_km: float = 22.0
    peak_cost_rate: float = 0.0005
    depot_contracted_kw: Optional[float] = None  # None: sized to a ratio-5 rule design
    cold_tour_share: float = 0.2
    charger_type_ids: Optional[tuple[str, ...]] = None  # None: full catalog
    start: datetime = datetime(2024, 1, 6)

    def validate(self) -> None:
        if self.rigid_trucks < 0 or self.euro_trucks < 0 or self.city_trucks < 0:
            raise GeneratorError("truck counts must be non-negative")
        if self.rigid_trucks + self.euro_trucks + self.city_trucks <= 0:
            raise GeneratorError("need at least one truck")
        if self.location_count < 2:
            raise GeneratorError("need the depot plus at least one retail location")
        if self.horizon_days <= 0:
            raise GeneratorError("horizon must cover at least one day")
        if not (0 < self.price_min < self.price_max):
            raise GeneratorError("price range must satisfy 0 < min < max")
        if self.avg_deliveries_per_day <= 0 or self.avg_daily_tonnage <= 0:
            raise GeneratorError("delivery and tonnage averages must be positive")
        if self.slot_minutes <= 0 or 1440 % self.slot_minutes != 0:
            raise GeneratorError("slot length must divide the day evenly")
        if self.legs_per_truck_per_day is not None and self.legs_per_truck_per_day < 2:
            raise GeneratorError("legs per truck per day must be at least 2 (out and back)")
        if self.charger_type_ids is not None:
            known = {row[0] for row in CHARGER_CATALOG}
            bad = [t for t in self.charger_type_ids if t not in known]
            if bad or not self.charger_type_ids:
                raise GeneratorError(
                    f"unknown charger type ids {bad}; catalog has {sorted(known)}"
                )


def _price_series(rng: np.random.Generator, cfg: GeneratorConfig, slots: int,
                  slots_per_hour: float) -> tuple[float, ...]:
    """Hourly day-shaped price, cheap overnight, strictly tie-free per slot."""
    shape_by_hour = [
        0.04, 0.02, 0.0, 0.01, 0.05, 0.12, 0.3, 0.55, 0.8, 0.85, 0.75, 0.65,
        0.6, 0.55, 0.5, 0.55, 0.7, 0.85, 0.95, 0.9, 0.7, 0.45, 0.2, 0.1,
    ]
    span = cfg.price_max - cfg.price_min
    out = []
    for s in range(slots):
        hour = int(s / slots_per_hour) % 24
        jitter = (rng.random() - 0.5) * 0.04
        val = cfg.price_min + span * min(1.0, max(0.0, shape_by_hour[hour] + jitter))
        # strictly varying prices keep optimal charge placement unique
        out.append(round(min(cfg.price_max, val), 6) + s * 1e-9)
    return tuple(out)


def _first_departure_slots(rng: np.random.Generator, n_trucks: int, days: int,
                           slots_per_hour: float) -> list[list[int]]:
    """First-departure slot per truck per day; >= 90% strictly after 03:00 by
    quota, the rest in the 01:00-03:00 band."""
    early_quota = n_trucks // 10
    early_set = set(rng.permutation(n_trucks)[:early_quota].tolist())
    out = []
    for k in range(n_trucks):
        per_day = []
        for _ in range(days):
            if k in early_set:
                hour = 1.0 + 1.9 * rng.random()
            else:
                hour = 3.25 + 3.0 * rng.random()
            per_day.append(int(math.ceil(hour * slots_per_hour)))
        out.append(per_day)
    return out


def generate_instance(cfg: GeneratorConfig) -> ProblemInstance:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    slots_per_day = (24 * 60) // cfg.slot_minutes
    slots_per_hour = slots_per_day / 24.0
    tau = cfg.slot_minutes / 60.0
    grid = TimeGrid(start=cfg.start, slot_hours=tau, slots=cfg.horizon_days * slots_per_day)

    keep = cfg.charger_type_ids
    catalog = tuple(
        ChargerType(id=i, rated_kw=p, efficiency=e, capital_cost=c)
        for i, p, c, e in CHARGER_CATALOG
        if keep is None or i in keep
    )

    # geography: depot at the origin, retailers uniform in a disc
    n_retail = cfg.location_count - 1
    radii = cfg.disc_radius_km * np.sqrt(rng.random(n_retail))
    angles = 2.0 * math.pi * rng.random(n_retail)
    xs = radii * np.cos(angles)
    ys = radii * np.sin(angles)
    width = len(str(n_retail))
    retail_ids = [f"r{i + 1:0{width}d}" for i in range(n_retail)]
    coords = {"depot": (0.0, 0.0)}
    coords.update({rid: (float(xs[i]), float(ys[i])) for i, rid in enumerate(retail_ids)})

    def dist(a: str, b: str) -> float:
        (ax, ay), (bx, by) = coords[a], coords[b]
        return round(ROAD_FACTOR * math.hypot(ax - bx, ay - by), 3)

    trucks_spec = [("rigid", cfg.rigid_trucks), ("euro", cfg.euro_trucks), ("city", cfg.city_trucks)]
    n_trucks = sum(n for _, n in trucks_spec)

    deliveries_per_truck_day = cfg.avg_deliveries_per_day * n_retail / n_trucks
    if cfg.legs_per_truck_per_day is not None:
        # legs = deliveries + one return per tour; the knob fixes the leg
        # budget and the delivery count follows from it
        legs_budget = cfg.legs_per_truck_per_day
        deliveries_per_truck_day = max(1.0, round(legs_budget) - 1.0)
    else:
        legs_budget = None
    payload_mean = cfg.avg_daily_tonnage / deliveries_per_truck_day

    first_dep = _first_departure_slots(rng, n_trucks, cfg.horizon_days, slots_per_hour)
    window_slots = max(1, int(round(0.5 * slots_per_hour)))  # 30-minute departure windows
    day_last_start = int(18 * slots_per_hour)  # no tour may start after 18:00

    used_pairs: set[tuple[str, str]] = set()
    vehicles = []
    truck_index = 0
    for class_name, count in trucks_spec:
        empty_w, max_load, battery = TRUCK_CLASSES[class_name]
        emin = MIN_ENERGY_FRACTION * battery
        leg_cap = (battery - emin) * SCREEN_MARGIN
        tour_cap = (battery - emin) * SCREEN_MARGIN
        final_cap = (1.0 - SOC_BOUNDARY) * battery * SCREEN_MARGIN
        load_h = 0.25
        unload_h = 0.25 if class_name == "rigid" else 0.5
        service_slots = int(math.ceil((load_h + unload_h) / tau - 1e-9))

        for n in range(count):
            vid = f"{class_name}{n + 1:02d}"
            veh_probe = Vehicle(
                id=vid, battery_kwh=battery, min_energy_kwh=emin,
                soc_boundary=SOC_BOUNDARY, empty_weight_ton=empty_w,
                max_payload_ton=max_load,
                consumption_kwh_per_ton_km=CONSUMPTION_KWH_PER_TON_KM,
                aux_kwh_per_hour=AUX_KW, cooling_kwh_per_hour=COOLING_KW, legs=(),
            )
            legs = _build_week(
                rng, cfg, grid, veh_probe, retail_ids, dist, used_pairs,
                first_dep[truck_index], deliveries_per_truck_day, payload_mean,
                legs_budget, leg_cap, tour_cap, final_cap,
                load_h, unload_h, service_slots, window_slots,
                slots_per_day, slots_per_hour, day_last_start,
            )
            vehicles.append(
                Vehicle(
                    id=vid, battery_kwh=battery, min_energy_kwh=emin,
                    soc_boundary=SOC_BOUNDARY, empty_weight_ton=empty_w,
                    max_payload_ton=max_load,
                    consumption_kwh_per_ton_km=CONSUMPTION_KWH_PER_TON_KM,
                    aux_kwh_per_hour=AUX_KW, cooling_kwh_per_hour=COOLING_KW,
                    legs=tuple(legs),
                )
            )
            truck_index += 1

    prices = _price_series(rng, cfg, grid.slots, slots_per_hour)

    if cfg.depot_contracted_kw is not None:
        depot_kw = cfg.depot_contracted_kw
    else:
        # generous default: a ratio-5 rule design running all units at once
        units = math.ceil(n_trucks / 5.0)
        depot_kw = float(units) * 300.0 + 1080.0

    def loc_distances(lid: str) -> dict[str, float]:
        table = {lid: 0.0}
        for a, b in used_pairs:
            if a == lid:
                table[b] = dist(a, b)
            elif b == lid:
                table[a] = dist(a, b)
        return table

    locations = [
        Location(
            id="depot", lat=0.0, lon=0.0, peak_cost_rate=cfg.peak_cost_rate,
            energy_price_per_slot=prices, contracted_power_kw=depot_kw,
            distances_km=loc_distances("depot"), chargers_allowed=True,
        )
    ]
    needed = {x for pair in used_pairs for x in pair}
    for rid in retail_ids:
        if rid not in needed:
            continue
        locations.append(
            Location(
                id=rid, lat=coords[rid][0], lon=coords[rid][1],
                peak_cost_rate=cfg.peak_cost_rate, energy_price_per_slot=prices,
                contracted_power_kw=100.0, distances_km=loc_distances(rid),
                chargers_allowed=False,
            )
        )

    instance = ProblemInstance(
        time_grid=grid,
        charger_types=catalog,
        locations=tuple(locations),
        vehicles=tuple(vehicles),
        params=OptimizationParams(),
    )
    problems = validate_instance(instance)
    if problems:
        raise GeneratorError("generated instance failed validation: " + "; ".join(problems[:5]))
    return instance


def _build_week(
    rng, cfg, grid, veh, retail_ids, dist, used_pairs, first_dep_by_day,
    deliveries_per_day, payload_mean, legs_budget, leg_cap, tour_cap, final_cap,
    load_h, unload_h, service_slots, window_slots,
    slots_per_day, slots_per_hour, day_last_start,
) -> list[TripLeg]:
    """Tours for one truck across the horizon, newest-first day by day."""
    legs: list[TripLeg] = []
    carry = 0.0  # fractional delivery quota carried between days

    def consumption(origin, destination, payload, cold, d_km):
        travel_h = d_km / SPEED_KMH
        probe = TripLeg(
            origin=origin, destination=destination, distance_km=d_km,
            payload_ton=payload, cold=cold, depart_earliest=0, depart_latest=0,
            arrive_earliest=0, arrive_latest=0, travel_hours=travel_h,
            load_hours=load_h, unload_hours=unload_h,
        )
        return compute_leg_energy(veh, probe)

    cursor = 0
    for day in range(cfg.horizon_days):
        day0 = day * slots_per_day
        # never schedule a departure window before the previous arrival clears
        cursor = max(cursor, day0 + first_dep_by_day[day])
        if legs_budget is not None:
            stops_today = max(1, int(round(legs_budget)) - 1)
        else:
            quota = deliveries_per_day + carry
            stops_today = max(1, int(quota))
            carry = quota - stops_today
        last_day = day == cfg.horizon_days - 1

        while stops_today > 0:
            max_stops = min(stops_today, 3)
            is_final_tour = last_day and stops_today <= max_stops
            budget = final_cap if is_final_tour else tour_cap
            tour = _sample_tour(
                rng, veh, retail_ids, dist, max_stops, payload_mean, budget,
                leg_cap, cfg.cold_tour_share, consumption,
            )
            if tour is None:
                raise GeneratorError(
                    f"vehicle {veh.id}: cannot fit a tour within the "
                    + ("final-tour boundary-state screen" if is_final_tour
                       else "tour battery screen")
                )
            stops, payloads, cold = tour
            if last_day and not is_final_tour:
                # keep room so the actual final tour still fits its screen
                pass
            route = ["depot"] + stops + ["depot"]
            remaining = sum(payloads)
            for i in range(len(route) - 1):
                o, d = route[i], route[i + 1]
                d_km = dist(o, d)
                travel_h = d_km / SPEED_KMH
                travel_slots = travel_h / grid.slot_hours
                dep_e = cursor
                dep_l = dep_e + window_slots
                arr_e = int(math.ceil(dep_e + travel_slots - 1e-9))
                if arr_e <= dep_e:
                    arr_e = dep_e + 1
                arr_l = dep_l + (arr_e - dep_e) + 2
                used_pairs.add((o, d) if o <= d else (d, o))
                legs.append(
                    TripLeg(
                        origin=o, destination=d, distance_km=d_km,
                        payload_ton=round(remaining, 3), cold=cold,
                        depart_earliest=dep_e, depart_latest=dep_l,
                        arrive_earliest=arr_e, arrive_latest=arr_l,
                        travel_hours=travel_h, load_hours=load_h, unload_hours=unload_h,
                    )
                )
                if i < len(payloads):
                    remaining -= payloads[i]
                cursor = arr_e + service_slots + window_slots
            stops_today -= len(stops)
            # idle gap before the next tour leaves room to charge
            cursor += max(1, int(round(slots_per_hour)))
            if cursor - day0 > day_last_start and stops_today > 0:
                carry += stops_today if legs_budget is None else 0
                break
        if legs and legs[-1].arrive_latest >= grid.slots:
            raise GeneratorError(
                f"vehicle {veh.id}: itinerary overflows the horizon on day {day + 1}"
            )
    return legs


def _sample_tour(rng, veh, retail_ids, dist, max_stops, payload_mean, budget,
                 leg_cap, cold_share, consumption):
    """Pick stops and payloads whose worst-case energy stays under budget.

    Tries progressively closer retailers and lighter loads before giving up.
    """
    cold = bool(rng.random() < cold_share)
    for attempt in range(24):
        n_stops = int(rng.integers(1, max_stops + 1))
        shrink = 0.85 ** attempt
        pick = rng.choice(len(retail_ids), size=n_stops, replace=False)
        stops = [retail_ids[int(i)] for i in pick]
        stops.sort(key=lambda rid: dist("depot", rid))
        payloads = []
        for _ in range(n_stops):
            p = payload_mean * shrink * (0.6 + 0.8 * rng.random())
            payloads.append(min(p, veh.max_payload_ton / n_stops))
        total = sum(payloads)
        if total > veh.max_payload_ton:
            scale = veh.max_payload_ton / total * 0.95
            payloads = [p * scale for p in payloads]

        route = ["depot"] + stops + ["depot"]
        remaining = sum(payloads)
        tour_energy = 0.0
        ok = True
        for i in range(len(route) - 1):
            o, d = route[i], route[i + 1]
            e = consumption(o, d, remaining, cold, dist(o, d))
            if e > leg_cap:
                ok = False
                break
            tour_energy += e
            if i < len(payloads):
                remaining -= payloads[i]
        if ok and tour_energy <= budget:
            return stops, [round(p, 3) for p in payloads], cold
        if attempt >= 11:
            # narrow to the closest quartile of retailers and single stops
            order = sorted(range(len(retail_ids)), key=lambda i: dist("depot", retail_ids[i]))
            retail_ids = [retail_ids[i] for i in order[: max(1, len(order) // 4)]]
            max_stops = 1
    return None

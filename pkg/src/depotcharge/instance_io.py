"""Reading and writing planning instances as JSON documents.

Schema (format tag ``depot-charging-instance/1``):

* ``time_grid``: ``start`` (ISO-8601), ``slot_hours``, ``slots``.
* ``charger_types``: list of ``{id, rated_kw, efficiency, capital_cost}``.
* ``optimization``: ``{peak_factor, slack_slots, energy_factor, mip_gap}``.
* ``locations``: ``{id, lat, lon, peak_cost_rate, contracted_power_kw,
  chargers_allowed, distances_km, energy_price_per_slot | energy_price_hourly}``.
  An hourly price list is expanded to slots (each slot takes the price of the
  hour containing its start).
* ``vehicles``: vehicle fields plus ``legs``. Window fields
  (``depart_earliest`` etc.) are either integer slot indices or ISO-8601
  wall-clock strings; wall-clock departures are floored to slots and
  wall-clock arrivals are ceiled.

Serialization is deterministic: keys are sorted and floats use repr, so the
same instance always produces byte-identical files.
"""

from __future__ import annotations

import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any

from .domain import (
    ChargerType,
    Location,
    OptimizationParams,
    ProblemInstance,
    TimeGrid,
    TripLeg,
    Vehicle,
)

FORMAT_TAG = "depot-charging-instance/1"


class InstanceFormatError(ValueError):
    pass


def _to_slot(value: Any, grid: TimeGrid, *, mode: str, where: str) -> int:
    """Convert a window bound to a slot index.

    Integers pass through; ISO-8601 strings are floored (departures) or
    ceiled (arrivals) so times between slot boundaries stay representable.
    """
    if isinstance(value, bool):
        raise InstanceFormatError(f"{where}: expected slot index or ISO time, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            when = datetime.fromisoformat(value)
        except ValueError as exc:
            raise InstanceFormatError(f"{where}: bad ISO-8601 time {value!r}") from exc
        frac = grid.slot_at(when)
        slot = math.floor(frac + 1e-9) if mode == "depart" else math.ceil(frac - 1e-9)
        return int(slot)
    raise InstanceFormatError(f"{where}: expected slot index or ISO time, got {type(value).__name__}")


def _prices(entry: dict, grid: TimeGrid, where: str) -> tuple[float, ...]:
    if "energy_price_per_slot" in entry:
        series = [float(p) for p in entry["energy_price_per_slot"]]
        return tuple(series)
    if "energy_price_hourly" in entry:
        hourly = [float(p) for p in entry["energy_price_hourly"]]
        need = math.ceil(grid.slots * grid.slot_hours - 1e-9)
        if len(hourly) < need:
            raise InstanceFormatError(
                f"{where}: hourly price series has {len(hourly)} entries, horizon needs {need}"
            )
        return tuple(hourly[int(t * grid.slot_hours)] for t in range(grid.slots))
    raise InstanceFormatError(f"{where}: missing energy price series")


def instance_from_dict(doc: dict) -> ProblemInstance:
    if doc.get("format") != FORMAT_TAG:
        raise InstanceFormatError(f"unsupported format tag {doc.get('format')!r}")

    tg = doc["time_grid"]
    grid = TimeGrid(
        start=datetime.fromisoformat(tg["start"]),
        slot_hours=float(tg["slot_hours"]),
        slots=int(tg["slots"]),
    )

    chargers = tuple(
        ChargerType(
            id=str(c["id"]),
            rated_kw=float(c["rated_kw"]),
            efficiency=float(c["efficiency"]),
            capital_cost=float(c["capital_cost"]),
        )
        for c in doc.get("charger_types", [])
    )

    locations = []
    for entry in doc.get("locations", []):
        where = f"location {entry.get('id')!r}"
        locations.append(
            Location(
                id=str(entry["id"]),
                lat=float(entry.get("lat", 0.0)),
                lon=float(entry.get("lon", 0.0)),
                peak_cost_rate=float(entry.get("peak_cost_rate", 0.0)),
                energy_price_per_slot=_prices(entry, grid, where),
                contracted_power_kw=float(entry["contracted_power_kw"]),
                distances_km={str(k): float(v) for k, v in entry.get("distances_km", {}).items()},
                chargers_allowed=bool(entry.get("chargers_allowed", True)),
            )
        )

    vehicles = []
    for entry in doc.get("vehicles", []):
        legs = []
        for idx, leg in enumerate(entry.get("legs", [])):
            where = f"vehicle {entry.get('id')!r} leg {idx}"
            legs.append(
                TripLeg(
                    origin=str(leg["origin"]),
                    destination=str(leg["destination"]),
                    distance_km=float(leg["distance_km"]),
                    payload_ton=float(leg.get("payload_ton", 0.0)),
                    cold=bool(leg.get("cold", False)),
                    depart_earliest=_to_slot(leg["depart_earliest"], grid, mode="depart", where=where),
                    depart_latest=_to_slot(leg["depart_latest"], grid, mode="depart", where=where),
                    arrive_earliest=_to_slot(leg["arrive_earliest"], grid, mode="arrive", where=where),
                    arrive_latest=_to_slot(leg["arrive_latest"], grid, mode="arrive", where=where),
                    travel_hours=float(leg["travel_hours"]),
                    load_hours=float(leg.get("load_hours", 0.0)),
                    unload_hours=float(leg.get("unload_hours", 0.0)),
                )
            )
        vehicles.append(
            Vehicle(
                id=str(entry["id"]),
                battery_kwh=float(entry["battery_kwh"]),
                min_energy_kwh=float(entry["min_energy_kwh"]),
                soc_boundary=float(entry.get("soc_boundary", 0.8)),
                empty_weight_ton=float(entry["empty_weight_ton"]),
                max_payload_ton=float(entry["max_payload_ton"]),
                consumption_kwh_per_ton_km=float(entry["consumption_kwh_per_ton_km"]),
                aux_kwh_per_hour=float(entry.get("aux_kwh_per_hour", 0.0)),
                cooling_kwh_per_hour=float(entry.get("cooling_kwh_per_hour", 0.0)),
                legs=tuple(legs),
            )
        )

    opt = doc.get("optimization", {})
    params = OptimizationParams(
        peak_factor=float(opt.get("peak_factor", 1.0)),
        slack_slots=int(opt.get("slack_slots", 1)),
        energy_factor=float(opt.get("energy_factor", 1.0)),
        mip_gap=float(opt.get("mip_gap", 0.01)),
    )

    return ProblemInstance(
        time_grid=grid,
        charger_types=chargers,
        locations=tuple(locations),
        vehicles=tuple(vehicles),
        params=params,
    )


def instance_to_dict(instance: ProblemInstance) -> dict:
    grid = instance.time_grid
    return {
        "format": FORMAT_TAG,
        "time_grid": {
            "start": grid.start.isoformat(),
            "slot_hours": grid.slot_hours,
            "slots": grid.slots,
        },
        "charger_types": [
            {
                "id": ct.id,
                "rated_kw": ct.rated_kw,
                "efficiency": ct.efficiency,
                "capital_cost": ct.capital_cost,
            }
            for ct in instance.charger_types
        ],
        "optimization": {
            "peak_factor": instance.params.peak_factor,
            "slack_slots": instance.params.slack_slots,
            "energy_factor": instance.params.energy_factor,
            "mip_gap": instance.params.mip_gap,
        },
        "locations": [
            {
                "id": loc.id,
                "lat": loc.lat,
                "lon": loc.lon,
                "peak_cost_rate": loc.peak_cost_rate,
                "contracted_power_kw": loc.contracted_power_kw,
                "chargers_allowed": loc.chargers_allowed,
                "distances_km": dict(sorted(loc.distances_km.items())),
                "energy_price_per_slot": list(loc.energy_price_per_slot),
            }
            for loc in instance.locations
        ],
        "vehicles": [
            {
                "id": veh.id,
                "battery_kwh": veh.battery_kwh,
                "min_energy_kwh": veh.min_energy_kwh,
                "soc_boundary": veh.soc_boundary,
                "empty_weight_ton": veh.empty_weight_ton,
                "max_payload_ton": veh.max_payload_ton,
                "consumption_kwh_per_ton_km": veh.consumption_kwh_per_ton_km,
                "aux_kwh_per_hour": veh.aux_kwh_per_hour,
                "cooling_kwh_per_hour": veh.cooling_kwh_per_hour,
                "legs": [
                    {
                        "origin": leg.origin,
                        "destination": leg.destination,
                        "distance_km": leg.distance_km,
                        "payload_ton": leg.payload_ton,
                        "cold": leg.cold,
                        "depart_earliest": leg.depart_earliest,
                        "depart_latest": leg.depart_latest,
                        "arrive_earliest": leg.arrive_earliest,
                        "arrive_latest": leg.arrive_latest,
                        "travel_hours": leg.travel_hours,
                        "load_hours": leg.load_hours,
                        "unload_hours": leg.unload_hours,
                    }
                    for leg in veh.legs
                ],
            }
            for veh in instance.vehicles
        ],
    }


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_instance(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(dump_json(instance_to_dict(instance)))


def load_instance(path: str | Path) -> ProblemInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))

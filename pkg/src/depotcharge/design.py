"""Plan artifacts: charger-count designs and per-truck charging schedules.

Both artifacts serialize to JSON documents so the optimizer, the rule-based
builder and the simulator can exchange them through files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .domain import ChargerType, ProblemInstance

DESIGN_FORMAT = "depot-charging-design/1"
SCHEDULE_FORMAT = "depot-charging-schedule/1"


# ---------------------------------------------------------------------------
# infrastructure design
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfrastructureDesign:
    """Installed charger counts per location and charger type."""

    counts: Mapping[str, Mapping[str, int]]  # location id -> charger type id -> units

    def count(self, location_id: str, charger_type_id: str) -> int:
        return int(self.counts.get(location_id, {}).get(charger_type_id, 0))

    def total_chargers(self) -> int:
        return sum(int(n) for per_loc in self.counts.values() for n in per_loc.values())

    def total_power_kw(self, catalog: Sequence[ChargerType]) -> float:
        rated = {ct.id: ct.rated_kw for ct in catalog}
        return sum(
            int(n) * rated[type_id]
            for per_loc in self.counts.values()
            for type_id, n in per_loc.items()
        )

    def capital_cost(self, catalog: Sequence[ChargerType]) -> float:
        cost = {ct.id: ct.capital_cost for ct in catalog}
        return sum(
            int(n) * cost[type_id]
            for per_loc in self.counts.values()
            for type_id, n in per_loc.items()
        )

    def to_dict(self, catalog: Sequence[ChargerType] = ()) -> dict:
        doc = {
            "format": DESIGN_FORMAT,
            "counts": {
                loc: {t: int(n) for t, n in sorted(per.items()) if n}
                for loc, per in sorted(self.counts.items())
                if any(per.values())
            },
            "total_chargers": self.total_chargers(),
        }
        if catalog:
            doc["total_power_kw"] = self.total_power_kw(catalog)
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "InfrastructureDesign":
        if doc.get("format") != DESIGN_FORMAT:
            raise ValueError(f"unsupported design format {doc.get('format')!r}")
        counts = {
            str(loc): {str(t): int(n) for t, n in per.items()}
            for loc, per in doc.get("counts", {}).items()
        }
        return InfrastructureDesign(counts=counts)


def save_design(design: InfrastructureDesign, path: str | Path, catalog: Sequence[ChargerType] = ()) -> None:
    Path(path).write_text(json.dumps(design.to_dict(catalog), indent=2, sort_keys=True) + "\n")


def load_design(path: str | Path) -> InfrastructureDesign:
    return InfrastructureDesign.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# rule-based sizing
# ---------------------------------------------------------------------------

# Reference shares used when no explicit mix is given, slowest type first.
# Matches the operator heuristic of mostly low-power overnight units with a
# sprinkle of fast chargers.
_DEFAULT_MIX_SHARES = (0.40, 0.40, 0.16, 0.0, 0.04)


def default_power_mix(total_units: int, n_types: int) -> list[int]:
    """Split a unit budget across charger types by the reference shares.

    Largest-remainder rounding; ties go to the faster (higher-index) type.
    Catalogs that are not five types wide fall back to uniform shares.
    """
    if n_types == len(_DEFAULT_MIX_SHARES):
        shares = _DEFAULT_MIX_SHARES
    else:
        shares = tuple(1.0 / n_types for _ in range(n_types))
    raw = [total_units * s for s in shares]
    counts = [math.floor(r) for r in raw]
    remainder = total_units - sum(counts)
    order = sorted(range(n_types), key=lambda j: (raw[j] - counts[j], j), reverse=True)
    for j in order[:remainder]:
        counts[j] += 1
    return counts


def rule_design(
    instance: ProblemInstance,
    ratio: float = 5.0,
    power_mix: Optional[Sequence[int]] = None,
    location_id: Optional[str] = None,
) -> InfrastructureDesign:
    """Sizing rule used by fleet operators: one charger per ``ratio`` trucks,
    all installed at the depot, split across types by ``power_mix`` counts.
    """
    if ratio <= 0:
        raise ValueError("truck-to-charger ratio must be positive")
    n_trucks = len(instance.vehicles)
    total_units = math.ceil(n_trucks / ratio)
    catalog = instance.charger_types
    if power_mix is None:
        power_mix = default_power_mix(total_units, len(catalog))
    power_mix = [int(n) for n in power_mix]
    if len(power_mix) != len(catalog):
        raise ValueError(
            f"power mix has {len(power_mix)} entries for {len(catalog)} charger types"
        )
    if any(n < 0 for n in power_mix):
        raise ValueError("power mix counts must be >= 0")
    if sum(power_mix) != total_units:
        raise ValueError(
            f"power mix sums to {sum(power_mix)}, expected ceil({n_trucks}/{ratio}) = {total_units}"
        )
    if location_id is None:
        allowed = [loc.id for loc in instance.locations if loc.chargers_allowed]
        if not allowed:
            raise ValueError("no location allows charger installation")
        location_id = allowed[0]
    counts = {location_id: {ct.id: n for ct, n in zip(catalog, power_mix) if n}}
    return InfrastructureDesign(counts=counts)


# ---------------------------------------------------------------------------
# charging schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChargingSession:
    slot: int             # grid slot during which the charger is held
    charger_type: str
    power_kw: float       # battery-side power drawn during the slot


@dataclass(frozen=True)
class LegPlan:
    leg_index: int
    sessions: tuple[ChargingSession, ...]
    depart_slot: float
    arrive_slot: float
    energy_depart_kwh: float
    energy_arrive_kwh: float
    energy_charged_kwh: float


@dataclass(frozen=True)
class ChargingSchedule:
    """Solved charge plan: sessions, departure/arrival times and the energy
    ledger per truck and leg, plus the optimizer's cost summary."""

    legs: Mapping[str, tuple[LegPlan, ...]]   # vehicle id -> plans in leg order
    summary: Mapping[str, object] = field(default_factory=dict)

    def plan_for(self, vehicle_id: str) -> tuple[LegPlan, ...]:
        return tuple(self.legs.get(vehicle_id, ()))

    def total_energy_kwh(self) -> float:
        return sum(p.energy_charged_kwh for plans in self.legs.values() for p in plans)

    def to_dict(self) -> dict:
        return {
            "format": SCHEDULE_FORMAT,
            "summary": dict(self.summary),
            "vehicles": {
                veh: [
                    {
                        "leg_index": p.leg_index,
                        "depart_slot": p.depart_slot,
                        "arrive_slot": p.arrive_slot,
                        "energy_depart_kwh": p.energy_depart_kwh,
                        "energy_arrive_kwh": p.energy_arrive_kwh,
                        "energy_charged_kwh": p.energy_charged_kwh,
                        "sessions": [
                            {"slot": s.slot, "charger_type": s.charger_type, "power_kw": s.power_kw}
                            for s in p.sessions
                        ],
                    }
                    for p in plans
                ]
                for veh, plans in sorted(self.legs.items())
            },
        }

    @staticmethod
    def from_dict(doc: dict) -> "ChargingSchedule":
        if doc.get("format") != SCHEDULE_FORMAT:
            raise ValueError(f"unsupported schedule format {doc.get('format')!r}")
        legs = {}
        for veh, plans in doc.get("vehicles", {}).items():
            legs[str(veh)] = tuple(
                LegPlan(
                    leg_index=int(p["leg_index"]),
                    sessions=tuple(
                        ChargingSession(
                            slot=int(s["slot"]),
                            charger_type=str(s["charger_type"]),
                            power_kw=float(s["power_kw"]),
                        )
                        for s in p.get("sessions", [])
                    ),
                    depart_slot=float(p["depart_slot"]),
                    arrive_slot=float(p["arrive_slot"]),
                    energy_depart_kwh=float(p["energy_depart_kwh"]),
                    energy_arrive_kwh=float(p["energy_arrive_kwh"]),
                    energy_charged_kwh=float(p["energy_charged_kwh"]),
                )
                for p in plans
            )
        return ChargingSchedule(legs=legs, summary=dict(doc.get("summary", {})))


def save_schedule(schedule: ChargingSchedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(schedule.to_dict(), indent=2, sort_keys=True) + "\n")


def load_schedule(path: str | Path) -> ChargingSchedule:
    return ChargingSchedule.from_dict(json.loads(Path(path).read_text()))

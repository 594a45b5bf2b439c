"""Core planning domain: the time grid, fleet, locations and trip structure.

Everything here is an immutable value object. Energies are kWh, powers kW,
distances km, weights metric tons, durations hours. Discrete time is handled
as integer slot indices on a :class:`TimeGrid`; wall-clock time only appears
at the document I/O boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Mapping, Optional, Sequence


# ---------------------------------------------------------------------------
# value objects
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TimeGrid:
    start: datetime          # wall-clock time of slot 0
    slot_hours: float        # slot length tau in hours
    slots: int               # number of slots in the horizon

    @property
    def horizon_hours(self) -> float:
        return self.slot_hours * self.slots

    def time_at(self, slot: float) -> datetime:
        """Wall-clock time at a (possibly fractional) slot index."""
        return self.start + timedelta(hours=slot * self.slot_hours)

    def slot_at(self, when: datetime) -> float:
        """Fractional slot index of a wall-clock time."""
        return (when - self.start).total_seconds() / 3600.0 / self.slot_hours

    def hours_to_slots(self, hours: float) -> float:
        return hours / self.slot_hours


@dataclass(frozen=True, slots=True)
class ChargerType:
    id: str
    rated_kw: float          # charging power delivered to the battery
    efficiency: float        # grid draw is rated_kw / efficiency
    capital_cost: float      # per installed unit, prorated to the horizon


@dataclass(frozen=True, slots=True)
class TripLeg:
    origin: str
    destination: str
    distance_km: float
    payload_ton: float       # carried load w_l, on top of the empty weight
    cold: bool               # refrigerated transport on this leg
    depart_earliest: int     # slot index
    depart_latest: int       # slot index, inclusive
    arrive_earliest: int     # slot index
    arrive_latest: int       # slot index, inclusive
    travel_hours: float
    load_hours: float
    unload_hours: float


@dataclass(frozen=True, slots=True)
class Vehicle:
    id: str
    battery_kwh: float               # usable capacity E_max
    min_energy_kwh: float            # reserve floor E_min
    soc_boundary: float              # phi: start and end-of-horizon SoC fraction
    empty_weight_ton: float
    max_payload_ton: float
    consumption_kwh_per_ton_km: float
    aux_kwh_per_hour: float          # base auxiliary draw while driving
    cooling_kwh_per_hour: float      # extra draw on cold legs
    legs: tuple[TripLeg, ...] = ()


@dataclass(frozen=True, slots=True)
class Location:
    id: str
    lat: float
    lon: float
    peak_cost_rate: float                    # cost per kW of peak draw, prorated
    energy_price_per_slot: tuple[float, ...]  # one price per grid slot
    contracted_power_kw: float               # P_max gate used by the simulator
    distances_km: Mapping[str, float] = field(default_factory=dict)
    chargers_allowed: bool = True            # may infrastructure be installed here


@dataclass(frozen=True, slots=True)
class OptimizationParams:
    peak_factor: float = 2.0     # alpha: weight of the peak-power cost term
    slack_slots: int = 1         # beta: extra slots granted past the departure window
    energy_factor: float = 1.0   # gamma: weight of the energy cost term
    mip_gap: float = 0.01        # relative optimality gap target


@dataclass(frozen=True, slots=True)
class ProblemInstance:
    time_grid: TimeGrid
    charger_types: tuple[ChargerType, ...]
    locations: tuple[Location, ...]
    vehicles: tuple[Vehicle, ...]
    params: OptimizationParams = OptimizationParams()

    def location(self, loc_id: str) -> Location:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)

    def location_map(self) -> dict[str, Location]:
        return {loc.id: loc for loc in self.locations}

    def charger_map(self) -> dict[str, ChargerType]:
        return {ct.id: ct for ct in self.charger_types}


# ---------------------------------------------------------------------------
# leg energy and charging windows
# ---------------------------------------------------------------------------


def compute_leg_energy(vehicle: Vehicle, leg: TripLeg) -> float:
    """Energy a leg consumes, in kWh.

    Distance-driven consumption scales with the total rolling weight
    (empty weight plus payload); auxiliary and, on cold legs, cooling loads
    accrue over the travel time.
    """
    total_weight = vehicle.empty_weight_ton + leg.payload_ton
    driving = vehicle.consumption_kwh_per_ton_km * leg.distance_km * total_weight
    overhead = vehicle.aux_kwh_per_hour + (vehicle.cooling_kwh_per_hour if leg.cold else 0.0)
    return driving + overhead * leg.travel_hours


def charging_window(vehicle: Vehicle, leg_index: int, slack_slots: int, grid: TimeGrid) -> range:
    """Slots during which a truck may charge before departing on a leg.

    The window opens at the earliest arrival of the previous leg (horizon
    start for the first leg) and closes at the latest departure plus the
    slack allowance, inclusive; both ends are clipped to the grid.
    """
    leg = vehicle.legs[leg_index]
    lo = 0 if leg_index == 0 else vehicle.legs[leg_index - 1].arrive_earliest
    hi = leg.depart_latest + slack_slots
    lo = max(0, lo)
    hi = min(grid.slots - 1, hi)
    return range(lo, hi + 1)


def iter_slot_overlaps(t_start: float, t_end: float, slot_hours: float):
    """Yield ``(slot, hours)`` overlaps of the interval with the slot grid.

    Slot ``s`` covers ``[s*slot_hours, (s+1)*slot_hours)``. A small nudge
    keeps intervals starting exactly on a boundary (modulo float dust) out of
    the preceding slot, and sub-picosecond slivers are dropped.
    """
    if t_end <= t_start:
        return
    s = max(0, int(math.floor(t_start / slot_hours + 1e-9)))
    while s * slot_hours < t_end - 1e-12:
        lo = max(t_start, s * slot_hours)
        hi = min(t_end, (s + 1) * slot_hours)
        if hi - lo > 1e-12:
            yield s, hi - lo
        s += 1


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def validate_instance(instance: ProblemInstance) -> list[str]:
    """Check structural and physical consistency; returns human-readable
    violation strings (empty list means the instance is usable).

    Never raises on bad data: unreadable references become violation entries.
    Energy-infeasible legs (consumption exceeding the battery's usable range)
    are reported so they can be removed or re-planned.
    """
    out: list[str] = []
    grid = instance.time_grid

    if grid.slots < 1:
        out.append(f"time-grid: slot count must be >= 1, got {grid.slots}")
    if not _finite(grid.slot_hours) or grid.slot_hours <= 0:
        out.append(f"time-grid: slot length must be positive, got {grid.slot_hours}")

    seen: set[str] = set()
    for ct in instance.charger_types:
        if ct.id in seen:
            out.append(f"charger-type: duplicate id {ct.id!r}")
        seen.add(ct.id)
        if not _finite(ct.rated_kw) or ct.rated_kw <= 0:
            out.append(f"charger-type {ct.id}: rated power must be positive, got {ct.rated_kw}")
        if not _finite(ct.efficiency) or not 0.0 < ct.efficiency <= 1.0:
            out.append(f"charger-type {ct.id}: efficiency must be in (0, 1], got {ct.efficiency}")
        if not _finite(ct.capital_cost) or ct.capital_cost < 0:
            out.append(f"charger-type {ct.id}: capital cost must be >= 0, got {ct.capital_cost}")

    loc_ids: set[str] = set()
    for loc in instance.locations:
        if loc.id in loc_ids:
            out.append(f"location: duplicate id {loc.id!r}")
        loc_ids.add(loc.id)
        if len(loc.energy_price_per_slot) != grid.slots:
            out.append(
                f"location {loc.id}: price series has {len(loc.energy_price_per_slot)} "
                f"entries, expected one per slot ({grid.slots})"
            )
        if any(not _finite(p) for p in loc.energy_price_per_slot):
            out.append(f"location {loc.id}: price series contains non-finite values")
        if not _finite(loc.contracted_power_kw) or loc.contracted_power_kw <= 0:
            out.append(
                f"location {loc.id}: contracted power must be positive, got {loc.contracted_power_kw}"
            )
        for dest, dist in loc.distances_km.items():
            if not _finite(dist) or dist < 0:
                out.append(f"location {loc.id}: distance to {dest} must be >= 0, got {dist}")
        own = loc.distances_km.get(loc.id)
        if own is not None and own != 0:
            out.append(f"location {loc.id}: self-distance must be 0, got {own}")

    veh_ids: set[str] = set()
    for veh in instance.vehicles:
        if veh.id in veh_ids:
            out.append(f"vehicle: duplicate id {veh.id!r}")
        veh_ids.add(veh.id)
        if not (0.0 <= veh.min_energy_kwh < veh.soc_boundary * veh.battery_kwh <= veh.battery_kwh):
            out.append(
                f"vehicle {veh.id}: need 0 <= E_min < phi*E_max <= E_max, got "
                f"E_min={veh.min_energy_kwh}, phi={veh.soc_boundary}, E_max={veh.battery_kwh}"
            )
        if veh.empty_weight_ton <= 0:
            out.append(f"vehicle {veh.id}: empty weight must be positive")
        if veh.max_payload_ton < 0:
            out.append(f"vehicle {veh.id}: max payload must be >= 0")
        for name, value in (
            ("consumption", veh.consumption_kwh_per_ton_km),
            ("auxiliary draw", veh.aux_kwh_per_hour),
            ("cooling draw", veh.cooling_kwh_per_hour),
        ):
            if not _finite(value) or value < 0:
                out.append(f"vehicle {veh.id}: {name} must be >= 0, got {value}")

        usable = veh.battery_kwh - veh.min_energy_kwh
        for idx, leg in enumerate(veh.legs):
            tag = f"vehicle {veh.id} leg {idx}"
            if leg.origin not in loc_ids:
                out.append(f"{tag}: unknown origin {leg.origin!r}")
            if leg.destination not in loc_ids:
                out.append(f"{tag}: unknown destination {leg.destination!r}")
            if idx > 0 and leg.origin != veh.legs[idx - 1].destination:
                out.append(
                    f"{tag}: origin {leg.origin!r} does not continue from previous "
                    f"destination {veh.legs[idx - 1].destination!r}"
                )
            if leg.payload_ton < 0 or leg.payload_ton > veh.max_payload_ton:
                out.append(
                    f"{tag}: payload {leg.payload_ton} t outside [0, {veh.max_payload_ton}] t"
                )
            if not 0 <= leg.depart_earliest <= leg.depart_latest < grid.slots:
                out.append(
                    f"{tag}: departure window [{leg.depart_earliest}, {leg.depart_latest}] "
                    f"invalid for {grid.slots} slots"
                )
            if not 0 <= leg.arrive_earliest <= leg.arrive_latest < grid.slots:
                out.append(
                    f"{tag}: arrival window [{leg.arrive_earliest}, {leg.arrive_latest}] "
                    f"invalid for {grid.slots} slots"
                )
            for name, value in (
                ("travel time", leg.travel_hours),
                ("load time", leg.load_hours),
                ("unload time", leg.unload_hours),
            ):
                if not _finite(value) or value < 0:
                    out.append(f"{tag}: {name} must be >= 0, got {value}")
            if leg.distance_km < 0:
                out.append(f"{tag}: distance must be >= 0, got {leg.distance_km}")
            if leg.origin in loc_ids:
                table = instance.location(leg.origin).distances_km.get(leg.destination)
                if table is not None and abs(table - leg.distance_km) > 1e-6 * max(1.0, abs(table)):
                    out.append(
                        f"{tag}: distance {leg.distance_km} km disagrees with the "
                        f"location table ({table} km)"
                    )
            consumed = compute_leg_energy(veh, leg)
            if consumed > usable + 1e-9:
                out.append(
                    f"{tag}: energy-infeasible, consumes {consumed:.2f} kWh but only "
                    f"{usable:.2f} kWh usable; remove or re-plan this leg"
                )

    return out

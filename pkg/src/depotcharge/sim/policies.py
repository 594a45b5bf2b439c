"""Charging decisions made by truck agents.

Two policies exist. The on-arrival rule charges immediately whenever the
battery cannot cover the nominal energy to the next stop with chargers plus
the reserve floor, picking the fastest charger type among those with the
shortest waiting queue and drawing rated power until the deficit is covered.
Schedule followers replay a solved plan: each maximal run of consecutive
planned slots on one charger type becomes a single charger hold playing the
planned per-slot powers, shifted later in time if the truck shows up late.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..design import LegPlan
from ..domain import Vehicle, compute_leg_energy


def sample_perturbation(nominal: float, cv: float, rng: np.random.Generator) -> float:
    """One noisy draw around ``nominal`` with coefficient of variation ``cv``.

    Draws are normal with standard deviation ``cv * nominal`` and truncated
    below at zero. A zero ``cv`` or a zero nominal returns the nominal exactly
    without consuming randomness, so deterministic runs stay bit-stable.
    """
    if cv < 0:
        raise ValueError(f"coefficient of variation must be >= 0, got {cv}")
    if cv == 0.0 or nominal == 0.0:
        return float(nominal)
    return max(0.0, float(rng.normal(nominal, cv * nominal)))


def rule_charge_amount(energy_kwh: float, needed_kwh: float, min_energy_kwh: float) -> float:
    """Energy the on-arrival rule asks for: nothing while the battery covers
    the upcoming consumption plus the reserve floor, otherwise the deficit."""
    if energy_kwh >= needed_kwh + min_energy_kwh:
        return 0.0
    return needed_kwh - energy_kwh + min_energy_kwh


def charger_choice(queue_lengths: Sequence[int]) -> int:
    """Index of the charger type to queue at, given queue lengths ordered by
    ascending rated power.

    Picks the shortest queue; ties go to the fastest type. The scan starts at
    the fastest type and only a strictly shorter queue displaces it.
    """
    if not queue_lengths:
        raise ValueError("no charger types installed")
    best = len(queue_lengths) - 1
    cand = queue_lengths[best]
    for j in range(len(queue_lengths) - 2, -1, -1):
        if queue_lengths[j] < cand:
            cand = queue_lengths[j]
            best = j
    return best


def rule_lookahead_kwh(vehicle: Vehicle, leg_index: int, can_charge: Callable[[str], bool]) -> float:
    """Nominal energy needed from ``leg_index`` until the truck next reaches a
    stop where it can charge (or runs out of itinerary)."""
    total = 0.0
    for li in range(leg_index, len(vehicle.legs)):
        leg = vehicle.legs[li]
        total += compute_leg_energy(vehicle, leg)
        if can_charge(leg.destination):
            break
    return total


@dataclass(frozen=True, slots=True)
class SessionDirective:
    """One planned charger hold: consecutive slots on a single type."""

    leg_index: int
    charger_type: str
    start_slot: int
    powers: tuple[float, ...]  # battery-side kW per held slot

    def energy_kwh(self, slot_hours: float) -> float:
        return sum(p * slot_hours for p in self.powers)


def build_directives(
    plans: Sequence[LegPlan], rated_kw: Mapping[str, float]
) -> dict[int, list[SessionDirective]]:
    """Group a leg plan's per-slot sessions into charger holds.

    Slots merge into one directive while they are consecutive and use the
    same type; a gap or a type switch releases the charger. Powers are
    clamped into ``[0, rated]`` so solver float dust cannot leak past the
    hardware limit.
    """
    out: dict[int, list[SessionDirective]] = {}
    for plan in plans:
        sessions = sorted(plan.sessions, key=lambda s: s.slot)
        if not sessions:
            continue
        runs: list[SessionDirective] = []
        start, powers, ctype = None, [], None
        for s in sessions:
            p = min(max(float(s.power_kw), 0.0), float(rated_kw[s.charger_type]))
            if start is not None and s.charger_type == ctype and s.slot == start + len(powers):
                powers.append(p)
                continue
            if start is not None:
                runs.append(SessionDirective(plan.leg_index, ctype, start, tuple(powers)))
            start, powers, ctype = s.slot, [p], s.charger_type
        runs.append(SessionDirective(plan.leg_index, ctype, start, tuple(powers)))
        out[plan.leg_index] = runs
    return out

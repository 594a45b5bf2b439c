"""Discrete-event simulation of fleet operation over the planning horizon.

One run plays every truck's itinerary on a shared event queue. At each stop
the load and unload work of the adjacent legs is lumped into a single service
interval, and charging overlaps it; the truck leaves at the latest of its
departure floor (the planned departure for schedule followers, the leg's
earliest departure otherwise), the end of service and the end of its last
charging session.

Locations arbitrate charger access with one FIFO queue per charger type and a
power gate: the head of a queue is admitted only while a free unit of that
type exists and the sum of rated powers of already plugged chargers plus the
candidate's rated power stays within the location's power cap. Admission
reserves the unit's full rated power for the whole hold, so the instantaneous
battery-side draw can never exceed the cap. The gate re-evaluates all queue
heads on every request and every session completion.

A truck arriving below its reserve floor (beyond a small absolute tolerance)
logs a failure and is topped back up to the floor so Monte Carlo runs stay
comparable instead of aborting.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..design import ChargingSchedule, InfrastructureDesign
from ..domain import ProblemInstance, Vehicle, compute_leg_energy
from .events import (
    ARRIVAL,
    CHARGE_COMPLETE,
    CHARGE_REQUEST,
    CHARGING,
    DEPART,
    EventLog,
    IDLE,
    LOAD_COMPLETE,
    LOADING,
    QUEUED,
    TRANSPORT,
    TRIP_COMPLETE,
    UNLOADING,
    ArrivalRecord,
    ChargeSession,
    FailureRecord,
    QueueEvent,
    SessionSegment,
    StateChange,
)
from .policies import (
    SessionDirective,
    build_directives,
    charger_choice,
    rule_charge_amount,
    rule_lookahead_kwh,
    sample_perturbation,
)

FAILURE_TOL = 1e-4       # kWh below the reserve floor before a failure fires
HEADROOM_TOL = 1e-9      # kWh of battery headroom slack before truncating
NOWHERE = "-"            # location placeholder for trucks with no itinerary


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StochasticConfig:
    """Noise model and Monte Carlo shape.

    Travel times, service (load/unload) times and per-leg energy draws are
    perturbed independently with the given coefficients of variation; zero
    keeps the nominal value exactly. Run ``i`` of ``run_count`` derives its
    random stream from ``(master_seed, i)`` so runs are independent of each
    other and of execution order.
    """

    travel_cv: float = 0.05
    service_cv: float = 0.05
    energy_cv: float = 0.05
    run_count: int = 1000
    master_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("travel_cv", "service_cv", "energy_cv"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)) or v < 0:
                raise ValueError(f"{name} must be a finite value >= 0, got {v}")
        if self.run_count < 1:
            raise ValueError(f"run_count must be >= 1, got {self.run_count}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {self.master_seed}")

    @staticmethod
    def uniform(cv: float, run_count: int = 1000, master_seed: int = 0) -> "StochasticConfig":
        return StochasticConfig(cv, cv, cv, run_count, master_seed)


@dataclass
class _Request:
    truck: "_Truck"
    leg_index: int
    charger_type: str
    rated_kw: float
    profile: tuple[tuple[float, float], ...]  # (duration hours, battery kW)
    enqueue_time: float = 0.0


@dataclass
class _Hold:
    request: _Request
    unit: int
    start_time: float
    end_time: float
    segments: tuple[SessionSegment, ...]


class _Station:
    __slots__ = ("loc_id", "pmax", "type_order", "units", "busy", "queues", "active")

    def __init__(self, loc_id: str, pmax: float, type_order: list[str], units: dict[str, int]):
        self.loc_id = loc_id
        self.pmax = pmax
        self.type_order = type_order
        self.units = units
        self.busy = {ct: 0 for ct in type_order}
        self.queues: dict[str, deque[_Request]] = {ct: deque() for ct in type_order}
        self.active: dict[tuple[str, int], _Hold] = {}

    def reserved_kw(self) -> float:
        return math.fsum(h.request.rated_kw for h in self.active.values())


class _Truck:
    __slots__ = (
        "vehicle", "policy", "plan", "directives", "energy", "location",
        "next_leg", "service_done", "sessions_pending", "stop_requests",
        "dep_floor", "departure_scheduled", "pending_cons", "done",
    )

    def __init__(self, vehicle: Vehicle, policy: str, plan, directives):
        self.vehicle = vehicle
        self.policy = policy
        self.plan = plan
        self.directives = directives
        self.energy = vehicle.soc_boundary * vehicle.battery_kwh
        self.location = vehicle.legs[0].origin if vehicle.legs else NOWHERE
        self.next_leg = 0
        self.service_done = False
        self.sessions_pending = 0
        self.stop_requests: list[SessionDirective] = []
        self.dep_floor: Optional[float] = None
        self.departure_scheduled = False
        self.pending_cons = 0.0
        self.done = False


class _Simulation:
    def __init__(
        self,
        instance: ProblemInstance,
        design: InfrastructureDesign,
        schedules: Optional[ChargingSchedule],
        stoch: StochasticConfig,
        run_index: int,
        pmax_override: Optional[Mapping[str, float]],
    ):
        self.instance = instance
        self.tau = instance.time_grid.slot_hours
        self.stoch = stoch
        self.rng = np.random.default_rng([int(stoch.master_seed), int(run_index)])
        self.rated = {ct.id: float(ct.rated_kw) for ct in instance.charger_types}
        type_order = [ct.id for ct in sorted(instance.charger_types, key=lambda c: (c.rated_kw, c.id))]

        override = dict(pmax_override or {})
        limits = {
            loc.id: float(override.get(loc.id, loc.contracted_power_kw))
            for loc in instance.locations
        }
        self.stations = {
            loc.id: _Station(
                loc.id,
                limits[loc.id],
                type_order,
                {ct: design.count(loc.id, ct) for ct in type_order},
            )
            for loc in instance.locations
        }
        self.log = EventLog(
            slots=instance.time_grid.slots, slot_hours=self.tau, power_limit_kw=limits
        )

        self.trucks: list[_Truck] = []
        for veh in instance.vehicles:
            if schedules is not None:
                plan = schedules.plan_for(veh.id)
                directives = build_directives(plan, self.rated)
                truck = _Truck(veh, "schedule", plan, directives)
                self._check_coverage(truck, design, limits)
            else:
                truck = _Truck(veh, "rule", (), {})
            self.trucks.append(truck)

        self.heap: list[tuple] = []
        self.seq = itertools.count()

    # -- setup ---------------------------------------------------------------

    def _check_coverage(self, truck: _Truck, design: InfrastructureDesign, limits) -> None:
        for li, directives in truck.directives.items():
            origin = truck.vehicle.legs[li].origin
            for d in directives:
                if design.count(origin, d.charger_type) < 1:
                    raise SimulationError(
                        f"schedule for {truck.vehicle.id} leg {li} needs a "
                        f"{d.charger_type} charger at {origin} but the design installs none"
                    )
                if self.rated[d.charger_type] > limits[origin]:
                    raise SimulationError(
                        f"charger {d.charger_type} ({self.rated[d.charger_type]} kW) can never "
                        f"be admitted at {origin} under its {limits[origin]} kW power cap"
                    )

    # -- event plumbing -------------------------------------------------------

    def _push(self, time: float, priority: int, truck: _Truck, payload=None) -> None:
        heapq.heappush(self.heap, (time, priority, truck.vehicle.id, next(self.seq), truck, payload))

    def run(self) -> EventLog:
        for truck in self.trucks:
            self._begin_stop(truck, 0.0, arrived_leg=None)
        while self.heap:
            time, priority, _vid, _seq, truck, payload = heapq.heappop(self.heap)
            if priority == ARRIVAL:
                self._on_arrival(time, truck)
            elif priority == LOAD_COMPLETE:
                self._on_load_complete(time, truck)
            elif priority == CHARGE_COMPLETE:
                self._on_charge_complete(time, truck, payload)
            elif priority == CHARGE_REQUEST:
                self._on_charge_request(time, truck, payload)
            elif priority == DEPART:
                self._on_depart(time, truck)
            elif priority == TRIP_COMPLETE:
                self._on_trip_complete(time, truck)
            else:  # pragma: no cover - defensive
                raise SimulationError(f"unknown event priority {priority}")
        self._check_drained()
        return self.log

    def _check_drained(self) -> None:
        stuck = [t.vehicle.id for t in self.trucks if not t.done]
        if stuck:
            raise SimulationError(f"simulation ended with unfinished trucks: {stuck}")
        for st in self.stations.values():
            if st.active or any(st.queues[ct] for ct in st.type_order):
                raise SimulationError(f"simulation ended with chargers in use at {st.loc_id}")

    # -- stop handling ---------------------------------------------------------

    def _begin_stop(self, truck: _Truck, now: float, arrived_leg: Optional[int]) -> None:
        veh = truck.vehicle
        legs = veh.legs
        nxt = truck.next_leg

        service = 0.0
        if arrived_leg is not None:
            service += legs[arrived_leg].unload_hours
        if nxt < len(legs):
            service += legs[nxt].load_hours
        service = sample_perturbation(service, self.stoch.service_cv, self.rng)
        self.log.transitions.append(
            StateChange(now, veh.id, UNLOADING if arrived_leg is not None else LOADING, truck.location)
        )
        truck.service_done = False
        truck.departure_scheduled = False
        truck.sessions_pending = 0
        truck.stop_requests = []
        self._push(now + service, LOAD_COMPLETE, truck)

        if truck.policy == "schedule":
            directives = truck.directives.get(nxt, []) if nxt < len(legs) else []
            if directives:
                truck.sessions_pending = len(directives)
                truck.stop_requests = list(directives)
                self._dispatch_directive(truck, now)
        else:
            self._rule_decision(truck, now)

        if nxt < len(legs):
            if truck.policy == "schedule" and nxt < len(truck.plan):
                truck.dep_floor = truck.plan[nxt].depart_slot * self.tau
            else:
                truck.dep_floor = legs[nxt].depart_earliest * self.tau
        else:
            truck.dep_floor = None

    def _has_chargers(self, loc_id: str) -> bool:
        station = self.stations.get(loc_id)
        return station is not None and any(station.units[ct] > 0 for ct in station.type_order)

    def _rule_decision(self, truck: _Truck, now: float) -> None:
        veh = truck.vehicle
        station = self.stations.get(truck.location)
        if station is None:
            return
        installed = [ct for ct in station.type_order if station.units[ct] > 0]
        if not installed:
            return
        if truck.next_leg < len(veh.legs):
            need = rule_lookahead_kwh(veh, truck.next_leg, self._has_chargers)
        else:
            need = 0.0
        amount = rule_charge_amount(truck.energy, need, veh.min_energy_kwh)
        amount = min(amount, veh.battery_kwh - truck.energy)
        if amount <= 1e-12:
            return
        pick = charger_choice([len(station.queues[ct]) for ct in installed])
        ct = installed[pick]
        rated = self.rated[ct]
        req = _Request(
            truck, truck.next_leg, ct, rated, profile=((amount / rated, rated),)
        )
        truck.sessions_pending = 1
        self._push(now, CHARGE_REQUEST, truck, req)

    def _dispatch_directive(self, truck: _Truck, now: float) -> None:
        d = truck.stop_requests.pop(0)
        req = _Request(
            truck,
            d.leg_index,
            d.charger_type,
            self.rated[d.charger_type],
            profile=tuple((self.tau, p) for p in d.powers),
        )
        self._push(max(now, d.start_slot * self.tau), CHARGE_REQUEST, truck, req)

    # -- charger queueing --------------------------------------------------------

    def _on_charge_request(self, time: float, truck: _Truck, req: _Request) -> None:
        station = self.stations[truck.location]
        if req.rated_kw > station.pmax:
            raise SimulationError(
                f"charger {req.charger_type} ({req.rated_kw} kW) demanded by "
                f"{truck.vehicle.id} exceeds the {station.pmax} kW power cap at {station.loc_id}"
            )
        req.enqueue_time = time
        self.log.transitions.append(StateChange(time, truck.vehicle.id, QUEUED, station.loc_id))
        self.log.queue_events.append(
            QueueEvent(time, truck.vehicle.id, station.loc_id, req.charger_type, True)
        )
        station.queues[req.charger_type].append(req)
        self._pump(station, time)

    def _pump(self, station: _Station, now: float) -> None:
        # strict FIFO per type: only queue heads are considered, and a blocked
        # head never lets later trucks of the same type jump past it
        progressed = True
        while progressed:
            progressed = False
            for ct in station.type_order:
                queue = station.queues[ct]
                if not queue or station.busy[ct] >= station.units[ct]:
                    continue
                head = queue[0]
                if station.reserved_kw() + head.rated_kw > station.pmax:
                    continue
                queue.popleft()
                self._admit(station, head, now)
                progressed = True

    def _admit(self, station: _Station, req: _Request, now: float) -> None:
        truck = req.truck
        ct = req.charger_type
        taken = {u for (c, u) in station.active if c == ct}
        unit = next(i for i in itertools.count() if i not in taken)

        self.log.queue_events.append(
            QueueEvent(now, truck.vehicle.id, station.loc_id, ct, False)
        )
        self.log.transitions.append(StateChange(now, truck.vehicle.id, CHARGING, station.loc_id))

        headroom = truck.vehicle.battery_kwh - truck.energy
        segments: list[SessionSegment] = []
        cursor, charged = now, 0.0
        for duration, power in req.profile:
            if power <= 0.0:
                segments.append(SessionSegment(cursor, cursor + duration, 0.0))
                cursor += duration
                continue
            energy = duration * power
            if charged + energy > headroom + HEADROOM_TOL:
                slack = max(0.0, (headroom - charged) / power)
                if slack > 1e-12:
                    segments.append(SessionSegment(cursor, cursor + slack, power))
                    cursor += slack
                    charged += slack * power
                break
            segments.append(SessionSegment(cursor, cursor + duration, power))
            cursor += duration
            charged += energy

        hold = _Hold(req, unit, now, cursor, tuple(segments))
        station.active[(ct, unit)] = hold
        station.busy[ct] += 1
        self._push(cursor, CHARGE_COMPLETE, truck, hold)

    def _on_charge_complete(self, time: float, truck: _Truck, hold: _Hold) -> None:
        station = self.stations[truck.location]
        req = hold.request
        del station.active[(req.charger_type, hold.unit)]
        station.busy[req.charger_type] -= 1

        session = ChargeSession(
            truck=truck.vehicle.id,
            leg_index=req.leg_index,
            location=station.loc_id,
            charger_type=req.charger_type,
            unit=hold.unit,
            request_time=req.enqueue_time,
            start_time=hold.start_time,
            end_time=hold.end_time,
            segments=hold.segments,
        )
        self.log.sessions.append(session)
        truck.energy = min(truck.energy + session.energy_kwh(), truck.vehicle.battery_kwh)
        truck.sessions_pending -= 1
        if truck.stop_requests:
            self._dispatch_directive(truck, time)
        self._pump(station, time)
        self._maybe_depart(truck, time)

    # -- movement -----------------------------------------------------------------

    def _on_load_complete(self, time: float, truck: _Truck) -> None:
        truck.service_done = True
        self._maybe_depart(truck, time)

    def _maybe_depart(self, truck: _Truck, now: float) -> None:
        if not truck.service_done or truck.sessions_pending > 0 or truck.departure_scheduled:
            return
        truck.departure_scheduled = True
        if truck.next_leg >= len(truck.vehicle.legs):
            self._push(now, TRIP_COMPLETE, truck)
            return
        depart_at = max(now, truck.dep_floor or 0.0)
        if depart_at > now:
            self.log.transitions.append(StateChange(now, truck.vehicle.id, IDLE, truck.location))
        self._push(depart_at, DEPART, truck)

    def _on_depart(self, time: float, truck: _Truck) -> None:
        leg = truck.vehicle.legs[truck.next_leg]
        travel = sample_perturbation(leg.travel_hours, self.stoch.travel_cv, self.rng)
        truck.pending_cons = sample_perturbation(
            compute_leg_energy(truck.vehicle, leg), self.stoch.energy_cv, self.rng
        )
        self.log.transitions.append(StateChange(time, truck.vehicle.id, TRANSPORT, truck.location))
        self._push(time + travel, ARRIVAL, truck)

    def _on_arrival(self, time: float, truck: _Truck) -> None:
        li = truck.next_leg
        leg = truck.vehicle.legs[li]
        truck.location = leg.destination
        truck.energy = max(0.0, truck.energy - truck.pending_cons)
        truck.pending_cons = 0.0
        if truck.energy < truck.vehicle.min_energy_kwh - FAILURE_TOL:
            self.log.failures.append(FailureRecord(time, truck.vehicle.id, li, truck.energy))
            truck.energy = truck.vehicle.min_energy_kwh
        if truck.policy == "schedule" and li < len(truck.plan):
            reference = truck.plan[li].arrive_slot * self.tau
        else:
            reference = leg.arrive_latest * self.tau
        self.log.arrivals.append(
            ArrivalRecord(time, truck.vehicle.id, li, leg.destination, reference)
        )
        truck.next_leg = li + 1
        self._begin_stop(truck, time, arrived_leg=li)

    def _on_trip_complete(self, time: float, truck: _Truck) -> None:
        self.log.transitions.append(StateChange(time, truck.vehicle.id, IDLE, truck.location))
        truck.done = True


def run_simulation(
    instance: ProblemInstance,
    design: InfrastructureDesign,
    schedules: Optional[ChargingSchedule] = None,
    stoch: Optional[StochasticConfig] = None,
    run_index: int = 0,
    pmax_override: Optional[Mapping[str, float]] = None,
) -> EventLog:
    """Simulate one run and return its event log.

    Trucks follow the given ``schedules`` when present and the on-arrival
    charging rule otherwise. ``pmax_override`` replaces the admission power
    cap per location; locations not named keep their contracted power.
    Deterministic given ``(stoch.master_seed, run_index)``.
    """
    stoch = stoch or StochasticConfig()
    sim = _Simulation(instance, design, schedules, stoch, run_index, pmax_override)
    return sim.run()

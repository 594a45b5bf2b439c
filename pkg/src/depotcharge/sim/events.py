"""Event records produced by simulation runs.

The log is the single source of truth for everything measured about a run:
metrics are derived from it alone, and it serializes to a line-oriented
columnar text form so runs can be archived and inspected with ordinary text
tools. Times are hours from the start of the horizon, powers are battery-side
kW. Identifiers (trucks, locations, charger types, state names) must contain
no whitespace because the text format separates columns with single spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..domain import iter_slot_overlaps

EVENTLOG_FORMAT = "depot-charging-eventlog/1"

# truck activity states
IDLE = "Idle"
LOADING = "Loading"
QUEUED = "QueuedForCharger"
CHARGING = "Charging"
TRANSPORT = "Transport"
UNLOADING = "Unloading"

# tie-break order for events sharing a timestamp (lower fires first)
ARRIVAL = 0
LOAD_COMPLETE = 1
CHARGE_COMPLETE = 2
CHARGE_REQUEST = 3
DEPART = 4
TRIP_COMPLETE = 5
FAILURE = 6


@dataclass(frozen=True, slots=True)
class StateChange:
    time: float
    truck: str
    state: str
    location: str


@dataclass(frozen=True, slots=True)
class QueueEvent:
    time: float
    truck: str
    location: str
    charger_type: str
    entered: bool  # False when the truck leaves the queue for a charger


@dataclass(frozen=True, slots=True)
class SessionSegment:
    t_start: float
    t_end: float
    power_kw: float

    @property
    def energy_kwh(self) -> float:
        return self.power_kw * (self.t_end - self.t_start)


@dataclass(frozen=True, slots=True)
class ChargeSession:
    """One uninterrupted hold of a charger unit by one truck."""

    truck: str
    leg_index: int
    location: str
    charger_type: str
    unit: int
    request_time: float
    start_time: float
    end_time: float
    segments: tuple[SessionSegment, ...]

    def energy_kwh(self) -> float:
        return math.fsum(seg.energy_kwh for seg in self.segments)


@dataclass(frozen=True, slots=True)
class ArrivalRecord:
    time: float
    truck: str
    leg_index: int
    location: str
    reference_time: float  # the arrival the truck was committed to


@dataclass(frozen=True, slots=True)
class FailureRecord:
    time: float
    truck: str
    leg_index: int
    energy_kwh: float  # battery level on arrival, before the recovery top-up


@dataclass
class EventLog:
    """Complete record of one simulation run."""

    slots: int
    slot_hours: float
    power_limit_kw: Mapping[str, float]  # admission cap per location
    transitions: list[StateChange] = field(default_factory=list)
    queue_events: list[QueueEvent] = field(default_factory=list)
    sessions: list[ChargeSession] = field(default_factory=list)
    arrivals: list[ArrivalRecord] = field(default_factory=list)
    failures: list[FailureRecord] = field(default_factory=list)

    # -- derived series ----------------------------------------------------

    def power_series(self) -> dict[str, list[float]]:
        """Per-location average battery-side kW for every horizon slot."""
        out: dict[str, list[list[float]]] = {}
        for s in self.sessions:
            buckets = out.setdefault(s.location, [[] for _ in range(self.slots)])
            for seg in s.segments:
                for slot, hours in iter_slot_overlaps(seg.t_start, seg.t_end, self.slot_hours):
                    if slot < self.slots:
                        buckets[slot].append(seg.power_kw * hours)
        return {
            loc: [math.fsum(b) / self.slot_hours for b in buckets]
            for loc, buckets in sorted(out.items())
        }

    def power_series_by_type(self) -> dict[str, dict[str, list[float]]]:
        """Like :meth:`power_series` but split per charger type."""
        out: dict[str, dict[str, list[list[float]]]] = {}
        for s in self.sessions:
            per_loc = out.setdefault(s.location, {})
            buckets = per_loc.setdefault(s.charger_type, [[] for _ in range(self.slots)])
            for seg in s.segments:
                for slot, hours in iter_slot_overlaps(seg.t_start, seg.t_end, self.slot_hours):
                    if slot < self.slots:
                        buckets[slot].append(seg.power_kw * hours)
        return {
            loc: {
                ct: [math.fsum(b) / self.slot_hours for b in buckets]
                for ct, buckets in sorted(per.items())
            }
            for loc, per in sorted(out.items())
        }

    # -- integrity ----------------------------------------------------------

    def validate(self) -> None:
        """Raise ``ValueError`` on structurally broken logs.

        Checks matched session timestamps, finite values, and that every
        queue entry has a matching exit for completed sessions.
        """
        for s in self.sessions:
            ok = (
                math.isfinite(s.request_time)
                and math.isfinite(s.start_time)
                and math.isfinite(s.end_time)
                and s.request_time <= s.start_time <= s.end_time
            )
            if not ok:
                raise ValueError(f"session for {s.truck} leg {s.leg_index} has inconsistent times")
            cursor = s.start_time
            for seg in s.segments:
                if not (math.isfinite(seg.power_kw) and seg.power_kw >= 0):
                    raise ValueError(f"session for {s.truck} has a negative or non-finite power")
                if seg.t_start < cursor - 1e-9 or seg.t_end < seg.t_start:
                    raise ValueError(f"session for {s.truck} has out-of-order segments")
                cursor = seg.t_end
            if cursor > s.end_time + 1e-9:
                raise ValueError(f"session for {s.truck} runs past its recorded end")
        entered: dict[tuple[str, str, str], int] = {}
        for q in self.queue_events:
            key = (q.truck, q.location, q.charger_type)
            entered[key] = entered.get(key, 0) + (1 if q.entered else -1)
            if entered[key] < 0:
                raise ValueError(f"queue exit without entry for {key}")

    # -- text serialization --------------------------------------------------

    def to_text(self) -> str:
        lines = [EVENTLOG_FORMAT, f"G {self.slots} {self.slot_hours!r}"]
        for loc in sorted(self.power_limit_kw):
            lines.append(f"L {loc} {float(self.power_limit_kw[loc])!r}")
        for t in self.transitions:
            lines.append(f"S {t.time!r} {t.truck} {t.state} {t.location}")
        for q in self.queue_events:
            word = "enter" if q.entered else "exit"
            lines.append(f"Q {q.time!r} {q.truck} {q.location} {q.charger_type} {word}")
        for a in self.arrivals:
            lines.append(f"A {a.time!r} {a.truck} {a.leg_index} {a.location} {a.reference_time!r}")
        for f in self.failures:
            lines.append(f"F {f.time!r} {f.truck} {f.leg_index} {f.energy_kwh!r}")
        for s in self.sessions:
            head = (
                f"C {s.truck} {s.leg_index} {s.location} {s.charger_type} {s.unit} "
                f"{s.request_time!r} {s.start_time!r} {s.end_time!r} {len(s.segments)}"
            )
            tail = " ".join(
                f"{seg.t_start!r} {seg.t_end!r} {seg.power_kw!r}" for seg in s.segments
            )
            lines.append(head + (" " + tail if tail else ""))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "EventLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != EVENTLOG_FORMAT:
            raise ValueError(f"unsupported event log header {lines[0] if lines else ''!r}")
        log: EventLog | None = None
        limits: dict[str, float] = {}
        slots, slot_hours = 0, 0.0
        body: list[str] = []
        for ln in lines[1:]:
            tag, rest = ln[0], ln[2:].split(" ")
            if tag == "G":
                slots, slot_hours = int(rest[0]), float(rest[1])
            elif tag == "L":
                limits[rest[0]] = float(rest[1])
            else:
                body.append(ln)
        log = EventLog(slots=slots, slot_hours=slot_hours, power_limit_kw=limits)
        for ln in body:
            tag, rest = ln[0], ln[2:].split(" ")
            if tag == "S":
                log.transitions.append(
                    StateChange(float(rest[0]), rest[1], rest[2], rest[3])
                )
            elif tag == "Q":
                log.queue_events.append(
                    QueueEvent(float(rest[0]), rest[1], rest[2], rest[3], rest[4] == "enter")
                )
            elif tag == "A":
                log.arrivals.append(
                    ArrivalRecord(float(rest[0]), rest[1], int(rest[2]), rest[3], float(rest[4]))
                )
            elif tag == "F":
                log.failures.append(
                    FailureRecord(float(rest[0]), rest[1], int(rest[2]), float(rest[3]))
                )
            elif tag == "C":
                nseg = int(rest[8])
                segs = tuple(
                    SessionSegment(
                        float(rest[9 + 3 * i]),
                        float(rest[10 + 3 * i]),
                        float(rest[11 + 3 * i]),
                    )
                    for i in range(nseg)
                )
                log.sessions.append(
                    ChargeSession(
                        truck=rest[0],
                        leg_index=int(rest[1]),
                        location=rest[2],
                        charger_type=rest[3],
                        unit=int(rest[4]),
                        request_time=float(rest[5]),
                        start_time=float(rest[6]),
                        end_time=float(rest[7]),
                        segments=segs,
                    )
                )
            else:
                raise ValueError(f"unknown event log record {ln!r}")
        return log


def save_event_log(log: EventLog, path: str | Path) -> None:
    Path(path).write_text(log.to_text())


def load_event_log(path: str | Path) -> EventLog:
    return EventLog.from_text(Path(path).read_text())

"""Run-level performance metrics and their Monte Carlo aggregation.

Everything is computed from an :class:`~depotcharge.sim.events.EventLog`
alone (plus the instance for prices, efficiencies and leg counts), so any
value can be re-derived by an independent scan of the same log.

Conventions: delays are minutes with negative meaning early arrival; charge
and queue times are minutes averaged per charging instance; the failure
probability is failures over the total number of itinerary legs; energy cost
prices the grid-side draw (battery power over charger efficiency) against the
per-slot tariff of the location, with charging past the horizon billed at the
final slot's price; utilization ``U(d)`` is the fraction of horizon slots
whose average power reaches ``d`` times the location's power cap, where
``U(0)`` counts slots with any positive draw.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .design import InfrastructureDesign
from .domain import ProblemInstance, iter_slot_overlaps

if TYPE_CHECKING:  # EventLog is only referenced in annotations; importing it
    from .sim.events import EventLog  # at runtime would be circular

DEFAULT_THRESHOLDS = (0.0, 0.25, 0.5, 0.75, 0.85, 1.0)

WEEKS_PER_YEAR = 52


class MetricsError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunMetrics:
    mean_delay_min: float
    mean_charge_min: float
    mean_queue_min: float
    failure_count: int
    failure_probability: float
    energy_cost: float
    utilization: Mapping[str, Mapping[float, float]]  # location -> threshold -> fraction
    peak_kw: Mapping[str, float]                      # location -> observed peak


@dataclass(frozen=True)
class MetricStat:
    mean: float
    std: float  # unbiased sample standard deviation; 0 for a single run


@dataclass(frozen=True)
class AggregateReport:
    label: str
    run_count: int
    delay_min: MetricStat
    charge_min: MetricStat
    queue_min: MetricStat
    failure_probability: MetricStat
    energy_cost: MetricStat
    peak_kw: Mapping[str, MetricStat]
    utilization: Mapping[str, Mapping[float, MetricStat]]
    predicted_energy_cost: Optional[float] = None
    weekly_cost_delta: Optional[float] = None
    yearly_cost_delta: Optional[float] = None  # always 52 x weekly


# ---------------------------------------------------------------------------
# per-run metrics
# ---------------------------------------------------------------------------


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def _check_sessions(log: EventLog, design: InfrastructureDesign) -> None:
    for s in log.sessions:
        installed = design.count(s.location, s.charger_type)
        if installed < 1:
            raise MetricsError(
                f"log charges {s.truck} on a {s.charger_type} at {s.location} "
                f"but the design installs none"
            )
        if not 0 <= s.unit < installed:
            raise MetricsError(
                f"log references unit {s.unit} of {installed} {s.charger_type} "
                f"chargers at {s.location}"
            )


def _energy_cost(log: EventLog, instance: ProblemInstance) -> float:
    eff = {ct.id: ct.efficiency for ct in instance.charger_types}
    prices = {loc.id: loc.energy_price_per_slot for loc in instance.locations}
    last = instance.time_grid.slots - 1
    parts: list[float] = []
    for s in log.sessions:
        series = prices[s.location]
        grid_factor = 1.0 / eff[s.charger_type]
        for seg in s.segments:
            for slot, hours in iter_slot_overlaps(seg.t_start, seg.t_end, log.slot_hours):
                parts.append(seg.power_kw * grid_factor * hours * series[min(slot, last)])
    return math.fsum(parts)


def _instant_peaks(log: EventLog) -> dict[str, float]:
    """Highest instantaneous battery-side draw per location, from a sweep over
    session segment boundaries (segments are half-open on the right)."""
    by_loc: dict[str, list[tuple[float, float]]] = {}
    for s in log.sessions:
        events = by_loc.setdefault(s.location, [])
        for seg in s.segments:
            if seg.t_end > seg.t_start and seg.power_kw > 0:
                events.append((seg.t_start, seg.power_kw))
                events.append((seg.t_end, -seg.power_kw))
    peaks: dict[str, float] = {}
    for loc, events in by_loc.items():
        if not events:
            peaks[loc] = 0.0
            continue
        arr = np.array(sorted(events), dtype=float)  # removals sort before additions
        level = np.cumsum(arr[:, 1])
        peaks[loc] = float(max(level.max(), 0.0))
    return peaks


def compute_run_metrics(
    log: EventLog,
    instance: ProblemInstance,
    design: InfrastructureDesign,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> RunMetrics:
    """Scan one run's log into its metric record.

    A structurally broken log (unmatched or out-of-order sessions, sessions on
    chargers the design does not install) is a hard error.
    """
    log.validate()
    _check_sessions(log, design)

    delays = [(a.time - a.reference_time) * 60.0 for a in log.arrivals]
    charge = [(s.end_time - s.start_time) * 60.0 for s in log.sessions]
    queue = [(s.start_time - s.request_time) * 60.0 for s in log.sessions]

    total_legs = sum(len(v.legs) for v in instance.vehicles)
    failures = len(log.failures)

    series = log.power_series()
    peaks = _instant_peaks(log)
    utilization: dict[str, dict[float, float]] = {}
    peak_kw: dict[str, float] = {}
    # only locations with chargers installed; elsewhere power is identically 0
    charger_locs = sorted(
        loc for loc, per_type in design.counts.items() if any(n > 0 for n in per_type.values())
    )
    for loc in charger_locs:
        limit = log.power_limit_kw[loc]
        values = series.get(loc, [0.0] * log.slots)
        per: dict[float, float] = {}
        for d in thresholds:
            if d == 0.0:
                hits = sum(1 for p in values if p > 0.0)
            else:
                hits = sum(1 for p in values if p >= d * limit)
            per[float(d)] = hits / log.slots if log.slots else 0.0
        utilization[loc] = per
        peak_kw[loc] = peaks.get(loc, 0.0)

    return RunMetrics(
        mean_delay_min=_mean(delays),
        mean_charge_min=_mean(charge),
        mean_queue_min=_mean(queue),
        failure_count=failures,
        failure_probability=failures / total_legs if total_legs else 0.0,
        energy_cost=_energy_cost(log, instance),
        utilization=utilization,
        peak_kw=peak_kw,
    )


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def _stat(values: Sequence[float]) -> MetricStat:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return MetricStat(mean, 0.0)
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return MetricStat(mean, math.sqrt(var))


def aggregate(
    runs: Sequence[RunMetrics],
    label: str = "",
    predicted_energy_cost: Optional[float] = None,
) -> AggregateReport:
    """Mean and unbiased sample standard deviation of every metric over runs.

    When the planned energy cost is known, also reports how far the simulated
    mean drifted from it over the horizon and per year (52 horizons)."""
    if not runs:
        raise MetricsError("cannot aggregate zero runs")
    locs = sorted(runs[0].peak_kw)
    thresholds = sorted(next(iter(runs[0].utilization.values()), {}).keys()) if runs[0].utilization else []

    weekly = yearly = None
    energy = _stat([r.energy_cost for r in runs])
    if predicted_energy_cost is not None:
        weekly = energy.mean - predicted_energy_cost
        yearly = WEEKS_PER_YEAR * weekly

    return AggregateReport(
        label=label,
        run_count=len(runs),
        delay_min=_stat([r.mean_delay_min for r in runs]),
        charge_min=_stat([r.mean_charge_min for r in runs]),
        queue_min=_stat([r.mean_queue_min for r in runs]),
        failure_probability=_stat([r.failure_probability for r in runs]),
        energy_cost=energy,
        peak_kw={loc: _stat([r.peak_kw[loc] for r in runs]) for loc in locs},
        utilization={
            loc: {d: _stat([r.utilization[loc][d] for r in runs]) for d in thresholds}
            for loc in locs
        },
        predicted_energy_cost=predicted_energy_cost,
        weekly_cost_delta=weekly,
        yearly_cost_delta=yearly,
    )


# ---------------------------------------------------------------------------
# renderings
# ---------------------------------------------------------------------------


def _fmt(stat: MetricStat, digits: int = 4) -> str:
    return f"{stat.mean:.{digits}f} +- {stat.std:.{digits}f}"


def render_report(reports: Sequence[AggregateReport]) -> str:
    """Human-readable comparison, one block per experiment."""
    lines: list[str] = []
    for rep in reports:
        head = f"experiment {rep.label or '-'} ({rep.run_count} runs)"
        lines.append(head)
        lines.append("-" * len(head))
        lines.append(f"  arrival delay [min]     {_fmt(rep.delay_min)}")
        lines.append(f"  charge time [min]       {_fmt(rep.charge_min)}")
        lines.append(f"  queue time [min]        {_fmt(rep.queue_min)}")
        lines.append(f"  failure probability     {_fmt(rep.failure_probability, 6)}")
        lines.append(f"  energy cost             {_fmt(rep.energy_cost)}")
        if rep.weekly_cost_delta is not None:
            lines.append(
                f"  cost vs plan            {rep.weekly_cost_delta:+.4f} per horizon, "
                f"{rep.yearly_cost_delta:+.4f} per year"
            )
        for loc in sorted(rep.peak_kw):
            lines.append(f"  peak power {loc} [kW]   {_fmt(rep.peak_kw[loc], 2)}")
        for loc in sorted(rep.utilization):
            cells = "  ".join(
                f"U({d:g})={st.mean:.4f}+-{st.std:.4f}"
                for d, st in sorted(rep.utilization[loc].items())
            )
            lines.append(f"  utilization {loc}: {cells}")
        lines.append("")
    return "\n".join(lines)


def report_rows(reports: Sequence[AggregateReport]) -> list[dict[str, object]]:
    """Flat one-row-per-metric form, ready for CSV or plotting."""
    rows: list[dict[str, object]] = []
    for rep in reports:
        base = [
            ("delay_min", "", rep.delay_min),
            ("charge_min", "", rep.charge_min),
            ("queue_min", "", rep.queue_min),
            ("failure_probability", "", rep.failure_probability),
            ("energy_cost", "", rep.energy_cost),
        ]
        for loc in sorted(rep.peak_kw):
            base.append(("peak_kw", loc, rep.peak_kw[loc]))
        for loc in sorted(rep.utilization):
            for d, st in sorted(rep.utilization[loc].items()):
                base.append(("utilization", f"{loc}@{d:g}", st))
        for metric, key, st in base:
            rows.append(
                {
                    "experiment": rep.label,
                    "metric": metric,
                    "key": key,
                    "mean": st.mean,
                    "std": st.std,
                }
            )
        if rep.weekly_cost_delta is not None:
            rows.append(
                {
                    "experiment": rep.label,
                    "metric": "weekly_cost_delta",
                    "key": "",
                    "mean": rep.weekly_cost_delta,
                    "std": 0.0,
                }
            )
            rows.append(
                {
                    "experiment": rep.label,
                    "metric": "yearly_cost_delta",
                    "key": "",
                    "mean": rep.yearly_cost_delta,
                    "std": 0.0,
                }
            )
    return rows


def write_report_csv(path: str | Path, reports: Sequence[AggregateReport]) -> None:
    rows = report_rows(reports)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["experiment", "metric", "key", "mean", "std"], lineterminator="\n"
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_power_curves_csv(
    path: str | Path,
    curves: Mapping[str, Mapping[str, Sequence[float]]],
    slot_hours: float,
) -> None:
    """Per-slot mean power split by location and charger type (stacked-series
    form: one column per location/type pair)."""
    columns = [(loc, ct) for loc in sorted(curves) for ct in sorted(curves[loc])]
    n = max((len(curves[loc][ct]) for loc, ct in columns), default=0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slot", "hour"] + [f"{loc}/{ct}" for loc, ct in columns])
        for s in range(n):
            row: list[object] = [s, s * slot_hours]
            for loc, ct in columns:
                series = curves[loc][ct]
                row.append(series[s] if s < len(series) else 0.0)
            writer.writerow(row)

"""Monte Carlo orchestration over independent simulation runs.

Each run draws its noise from a stream derived from ``(master_seed, run
index)``, so results do not depend on how runs are scheduled; the parallel
path returns runs in index order and aggregates exactly like the sequential
one.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from ..design import ChargingSchedule, InfrastructureDesign
from ..domain import ProblemInstance
from ..metrics import DEFAULT_THRESHOLDS, RunMetrics, compute_run_metrics
from .engine import StochasticConfig, run_simulation


@dataclass(frozen=True)
class RunResult:
    metrics: RunMetrics
    power_by_type: Mapping[str, Mapping[str, tuple[float, ...]]]


def _one_run(args) -> RunResult:
    instance, design, schedules, stoch, idx, pmax_override, thresholds = args
    log = run_simulation(
        instance, design, schedules, stoch, run_index=idx, pmax_override=pmax_override
    )
    metrics = compute_run_metrics(log, instance, design, thresholds)
    curves = {
        loc: {ct: tuple(series) for ct, series in per.items()}
        for loc, per in log.power_series_by_type().items()
    }
    return RunResult(metrics, curves)


def simulate_many(
    instance: ProblemInstance,
    design: InfrastructureDesign,
    schedules: Optional[ChargingSchedule] = None,
    stoch: Optional[StochasticConfig] = None,
    pmax_override: Optional[Mapping[str, float]] = None,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    jobs: int = 1,
) -> list[RunResult]:
    """Run ``stoch.run_count`` simulations and collect per-run results.

    ``jobs > 1`` fans runs out to a process pool; outputs are identical to the
    sequential path because runs share nothing and are collected in index
    order.
    """
    stoch = stoch or StochasticConfig()
    args = [
        (instance, design, schedules, stoch, i, pmax_override, tuple(thresholds))
        for i in range(stoch.run_count)
    ]
    if jobs <= 1:
        return [_one_run(a) for a in args]
    chunk = max(1, len(args) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one_run, args, chunksize=chunk))


def mean_power_curves(results: Sequence[RunResult]) -> dict[str, dict[str, list[float]]]:
    """Per-slot power averaged across runs, split by location and type.

    Locations or types absent from a run contribute zero for that run."""
    if not results:
        return {}
    n = len(results)
    keys: set[tuple[str, str]] = set()
    length = 0
    for r in results:
        for loc, per in r.power_by_type.items():
            for ct, series in per.items():
                keys.add((loc, ct))
                length = max(length, len(series))
    out: dict[str, dict[str, list[float]]] = {}
    for loc, ct in sorted(keys):
        series = [
            math.fsum(
                r.power_by_type.get(loc, {}).get(ct, ())[s]
                if s < len(r.power_by_type.get(loc, {}).get(ct, ()))
                else 0.0
                for r in results
            )
            / n
            for s in range(length)
        ]
        out.setdefault(loc, {})[ct] = series
    return out

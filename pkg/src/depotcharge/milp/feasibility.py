"""Stand-alone feasibility audit for model/solution pairs.

Walks every variable bound, every constraint row and every integrality
requirement directly from the model's own coefficient lists (no shared code
with the simplex path) and reports human-readable violation descriptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import EQ, GE, LE, MilpModel

ROW_TOL = 1e-6
BOUND_TOL = 1e-6
INTEGRALITY_TOL = 1e-6


@dataclass
class FeasibilityReport:
    ok: bool
    violations: list[str] = field(default_factory=list)
    worst_row_residual: float = 0.0
    worst_bound_residual: float = 0.0
    worst_integrality: float = 0.0


def check_feasibility(
    model: MilpModel,
    x: Sequence[float],
    row_tol: float = ROW_TOL,
    bound_tol: float = BOUND_TOL,
    int_tol: float = INTEGRALITY_TOL,
    max_reports: int = 50,
) -> FeasibilityReport:
    """Audit ``x`` against ``model``; tolerances are absolute, scaled by
    ``1 + |rhs|`` for rows."""
    report = FeasibilityReport(ok=True)
    if x is None:
        report.ok = False
        report.violations.append("no solution vector to audit")
        return report
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.n_variables:
        report.ok = False
        report.violations.append(
            f"solution has {x.shape[0]} values, model has {model.n_variables} variables"
        )
        return report

    def note(msg: str) -> None:
        report.ok = False
        if len(report.violations) < max_reports:
            report.violations.append(msg)

    for var in model.variables:
        v = x[var.index]
        if not np.isfinite(v):
            note(f"variable {var.name}: non-finite value {v!r}")
            continue
        if v < var.lb - bound_tol:
            report.worst_bound_residual = max(report.worst_bound_residual, var.lb - v)
            note(f"variable {var.name}: value {v:.9g} below lower bound {var.lb:.9g}")
        if v > var.ub + bound_tol:
            report.worst_bound_residual = max(report.worst_bound_residual, v - var.ub)
            note(f"variable {var.name}: value {v:.9g} above upper bound {var.ub:.9g}")
        if var.integer:
            dist = abs(v - round(v))
            report.worst_integrality = max(report.worst_integrality, dist)
            if dist > int_tol:
                note(f"variable {var.name}: value {v:.9g} violates integrality")

    for row in model.rows:
        lhs = 0.0
        for idx, coef in row.coeffs:
            lhs += coef * x[idx]
        tol = row_tol * (1.0 + abs(row.rhs))
        resid = 0.0
        if row.sense == LE:
            resid = lhs - row.rhs
        elif row.sense == GE:
            resid = row.rhs - lhs
        elif row.sense == EQ:
            resid = abs(lhs - row.rhs)
        if resid > tol:
            report.worst_row_residual = max(report.worst_row_residual, resid)
            note(
                f"row {row.name}: lhs {lhs:.9g} violates '{row.sense} {row.rhs:.9g}' "
                f"by {resid:.3e}"
            )
        elif resid > 0:
            report.worst_row_residual = max(report.worst_row_residual, resid)

    return report

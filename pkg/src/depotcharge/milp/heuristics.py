"""Primal rounding heuristic for charging-schedule models.

The LP relaxation spreads charging power fractionally across charger types
and adjacent slots, so plain branching needs thousands of nodes before the
first integral point shows up. This rounder exploits the model shape built
by :mod:`depotcharge.milp.builder`. Per (vehicle, leg) it keeps the single
charger type carrying the most relaxed energy and books just enough slots
to cover the leg's relaxed charged energy at rated power. Slots are booked
greedily by marginal cost: the slot's energy price plus the peak-charge
increase its rated power would cause on the location's running stack, so
legs processed later steer around slots earlier legs already piled onto.
The whole integer pattern is then pinned and the continuous part re-solved;
slots the pinned solve leaves unpowered are switched back off and the solve
repeated, which only ever relaxes rows.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .model import MilpModel, decode_symbol
from .simplex import OPTIMAL, SimplexSolver

POWER_EPS = 1e-6
TRIM_ROUNDS = 3


def make_charging_rounder(
    model: MilpModel,
    max_iter: Optional[int] = None,
) -> Callable[[np.ndarray, Optional[tuple]], Optional[np.ndarray]]:
    """Build a rounding callback for branch-and-bound incumbent search.

    The callback maps a relaxation solution to a full solution vector with
    every Y/u/v fixed integral, or None when no pinned LP is feasible.
    Bases from the caller's solver warm-start the pinned LPs; both solvers
    see the same matrix, so bases are interchangeable.
    """
    A, senses, b = model.constraint_matrix()
    c_obj = model.objective_array()
    solver = SimplexSolver(c_obj, A, senses, b)
    lb0, ub0 = model.bounds_arrays()
    tau = float(model.metadata.get("slot_hours", 1.0))

    # (vehicle, leg) -> [(slot, type, y index, power index)] in builder order
    groups: dict[tuple[str, str], list[tuple[int, str, int, int]]] = {}
    rated: dict[str, float] = {}
    ech_of: dict[tuple[str, str], int] = {}
    dep_of: dict[tuple[str, str], int] = {}
    for var in model.variables_of_kind("Y"):
        _, (k, l, ct, t) = decode_symbol(var.name)
        pr = model.variable_index(f"Pr({k},{l},{ct},{t})")
        groups.setdefault((k, l), []).append((int(t), ct, var.index, pr))
        rated[ct] = max(rated.get(ct, 0.0), ub0[pr])
        if (k, l) not in ech_of:
            ech_of[(k, l)] = model.variable_index(f"Ech({k},{l})")
            dep_of[(k, l)] = model.variable_index(f"dep({k},{l})")

    switches: dict[tuple[str, str], list[tuple[int, int, int]]] = {}
    for var in model.variables_of_kind("u"):
        _, (k, l, t) = decode_symbol(var.name)
        v = model.variable_index(f"v({k},{l},{t})")
        switches.setdefault((k, l), []).append((int(t), var.index, v))

    # peak rows tell us which location each Y feeds and at what priced power
    peak_of: dict[int, tuple[str, float]] = {}
    for row in model.rows:
        if not row.name.startswith("peak_def("):
            continue
        _, (loc, t) = decode_symbol(row.name)
        for j, coef in row.coeffs:
            if coef > 0.0:
                peak_of[j] = (loc, coef)
    cpk_vars = model.variables_of_kind("Cpk")
    peak_factor = float(c_obj[cpk_vars[0].index]) if cpk_vars else 0.0

    capital: dict[tuple[str, str], float] = {}
    xcap: dict[tuple[str, str], float] = {}
    for var in model.variables_of_kind("X"):
        _, (loc, ct) = decode_symbol(var.name)
        capital[(loc, ct)] = float(c_obj[var.index])
        xcap[(loc, ct)] = ub0[var.index]

    def pin(pattern: dict) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """Bounds with Y/u/v fixed to the given per-leg (type, slots) choice."""
        lb = lb0.copy()
        ub = ub0.copy()
        for key, entries in groups.items():
            dominant, active = pattern[key]
            for t, ct, yi, pi in entries:
                val = 1.0 if (ct == dominant and t in active) else 0.0
                if val < lb0[yi] - 0.5 or val > ub0[yi] + 0.5:
                    return None
                lb[yi] = ub[yi] = val
            for t, ui, vi in switches.get(key, ()):
                u_val = 1.0 if (t - 1 in active and t not in active) else 0.0
                v_val = 1.0 if (t in active and t - 1 not in active) else 0.0
                if not (lb0[ui] - 0.5 <= u_val <= ub0[ui] + 0.5):
                    return None
                if not (lb0[vi] - 0.5 <= v_val <= ub0[vi] + 0.5):
                    return None
                lb[ui] = ub[ui] = u_val
                lb[vi] = ub[vi] = v_val
        return lb, ub

    def round_pattern(x_relax: np.ndarray) -> Optional[dict]:
        # running rated-power stack and per-type concurrency at each location,
        # so later legs see the peak/capital cost earlier bookings created
        stack: dict[str, dict[int, float]] = {}
        top: dict[str, float] = {}
        conc: dict[tuple[str, str], dict[int, int]] = {}
        conc_top: dict[tuple[str, str], int] = {}
        pattern = {}
        # book legs with the narrowest windows first so flexible lumps steer
        # around them instead of starving them of their few usable slots
        order = sorted(groups, key=lambda key: (len({e[0] for e in groups[key]}), key))
        for key in order:
            entries = groups[key]
            slot_power: dict[int, float] = {}
            by_type: dict[str, list[tuple[int, int, int]]] = {}
            for t, ct, yi, pi in entries:
                slot_power[t] = slot_power.get(t, 0.0) + float(x_relax[pi])
                by_type.setdefault(ct, []).append((t, yi, pi))
            if not any(p > POWER_EPS for p in slot_power.values()):
                pattern[key] = (None, set())
                continue
            ech = float(x_relax[ech_of[key]])
            dep_ub = ub0[dep_of[key]]

            def plan(ct: str, cands: list) -> Optional[tuple[float, list]]:
                """Greedy slot picks and their estimated cost, no commitment."""
                cap = rated[ct] * tau
                if cap <= 0.0 or not cands:
                    return None
                n = min(max(1, int(math.ceil(ech / cap - 1e-9))), len(cands))
                avg_kw = ech / (n * tau)
                loc = peak_of.get(cands[0][1], ("", 0.0))[0]
                unit = capital.get((loc, ct), 0.0)
                cap_units = xcap.get((loc, ct), math.inf)
                local_stack = dict(stack.get(loc, {}))
                local_top = top.get(loc, 0.0)
                local_conc = dict(conc.get((loc, ct), {}))
                local_ctop = conc_top.get((loc, ct), 0)
                picks, total = [], 0.0
                taken = set()
                for _ in range(n):
                    best, best_cost = None, None
                    for e in cands:
                        t, yi, pi = e
                        if t in taken:
                            continue
                        if local_conc.get(t, 0) + 1 > cap_units:  # no unit free
                            continue
                        coef = peak_of.get(yi, ("", 0.0))[1]
                        bump = max(0.0, local_stack.get(t, 0.0) + coef - local_top)
                        extra = unit if local_conc.get(t, 0) + 1 > local_ctop else 0.0
                        cost = c_obj[pi] * avg_kw + peak_factor * bump + extra
                        if best_cost is None or (cost, t) < best_cost:
                            best, best_cost = e, (cost, t)
                    if best is None:  # window exhausted under the unit cap
                        return None
                    t, yi, pi = best
                    taken.add(t)
                    picks.append(best)
                    total += best_cost[0]
                    coef = peak_of.get(yi, ("", 0.0))[1]
                    local_stack[t] = local_stack.get(t, 0.0) + coef
                    local_top = max(local_top, local_stack[t])
                    local_conc[t] = local_conc.get(t, 0) + 1
                    local_ctop = max(local_ctop, local_conc[t])
                return total, picks

            best_ct, best_plan, best_score = None, None, None
            for ct, items in by_type.items():
                cands = [e for e in items if e[0] + 1 <= dep_ub + 1e-9]
                got = plan(ct, cands)
                if got is None:
                    continue
                score = (got[0], rated[ct])
                if best_score is None or score < best_score:
                    best_ct, best_plan, best_score = ct, got[1], score
            if best_ct is None:
                # the lump can't be booked under the unit caps; no pinned LP
                # derived from this pattern can be feasible
                return None

            active = set()
            loc = peak_of.get(best_plan[0][1], ("", 0.0))[0]
            for t, yi, pi in best_plan:
                active.add(t)
                coef = peak_of.get(yi, ("", 0.0))[1]
                per = stack.setdefault(loc, {})
                per[t] = per.get(t, 0.0) + coef
                top[loc] = max(top.get(loc, 0.0), per[t])
                cc = conc.setdefault((loc, best_ct), {})
                cc[t] = cc.get(t, 0) + 1
                conc_top[(loc, best_ct)] = max(conc_top.get((loc, best_ct), 0), cc[t])
            pattern[key] = (best_ct, active)
        return pattern

    def attempt(x_relax: np.ndarray, warm: Optional[tuple] = None) -> Optional[np.ndarray]:
        pattern = round_pattern(x_relax)
        if pattern is None:
            return None
        bounds = pin(pattern)
        if bounds is None:
            return None
        res = solver.solve(bounds[0], bounds[1], max_iter=max_iter, warm=warm)
        if res.status != OPTIMAL:
            return None

        # drop slots the pinned solve left unpowered; strictly relaxing
        for _ in range(TRIM_ROUNDS):
            trimmed = {}
            changed = False
            for key, entries in groups.items():
                dominant, active = pattern[key]
                used = {
                    t for t, ct, yi, pi in entries
                    if ct == dominant and t in active and res.x[pi] > POWER_EPS
                }
                if used != active:
                    changed = True
                trimmed[key] = (dominant if used else None, used)
            if not changed:
                break
            bounds = pin(trimmed)
            if bounds is None:
                break
            trial = solver.solve(bounds[0], bounds[1], max_iter=max_iter, warm=res.basis)
            if trial.status != OPTIMAL:
                break
            res, pattern = trial, trimmed
        return res.x

    return attempt

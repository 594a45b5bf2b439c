"""Best-first branch and bound for mixed-integer linear programs.

Nodes are explored in order of their parent LP bound (ties broken by
insertion order), branching on the most fractional integer variable (ties
broken by lowest variable index). Bounds on integer variables are tightened
to integers up front; children restrict one variable to ``<= floor`` or
``>= ceil`` of its fractional LP value.

The search keeps a log of (nodes explored, best bound, incumbent objective)
rows, appended whenever either side improves, so callers can audit that the
bound never crossed the incumbent.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import MilpModel
from .simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NUMERICAL,
    OPTIMAL,
    UNBOUNDED,
    SimplexSolver,
)

INT_TOL = 1e-6
GAP_EPS = 1e-9

GAP_REACHED = "gap-reached"
NODE_LIMIT = "node-limit"
TIME_LIMIT = "time-limit"


@dataclass
class Solution:
    status: str              # optimal | gap-reached | infeasible | unbounded |
                             # node-limit | time-limit | numerical
    objective: Optional[float]
    best_bound: float
    x: Optional[np.ndarray]
    gap: Optional[float]
    nodes: int
    iterations: int = 0
    log: list[tuple[int, float, Optional[float]]] = field(default_factory=list)
    detail: str = ""
    bad_rows: tuple[int, ...] = ()  # unsatisfiable rows when the root is infeasible


def _fractional(x: np.ndarray, int_idx: np.ndarray) -> Optional[int]:
    """Most fractional integer variable, or None when all are integral."""
    if int_idx.size == 0:
        return None
    dist = np.abs(x[int_idx] - np.round(x[int_idx]))
    worst = int(np.argmax(dist))
    if dist[worst] <= INT_TOL:
        return None
    return int(int_idx[worst])


def _relative_gap(incumbent: float, bound: float) -> float:
    return (incumbent - bound) / max(abs(incumbent), GAP_EPS)


def check_candidate(model: MilpModel, x: np.ndarray, tol: float = 1e-6) -> bool:
    """True when ``x`` satisfies bounds, rows and integrality of ``model``."""
    lb, ub = model.bounds_arrays()
    if x.shape != lb.shape:
        return False
    if np.any(x < lb - tol) or np.any(x > ub + tol):
        return False
    int_mask = model.integer_mask()
    if int_mask.any():
        dist = np.abs(x[int_mask] - np.round(x[int_mask]))
        if dist.max(initial=0.0) > 1e-5:
            return False
    A, senses, b = model.constraint_matrix()
    lhs = A @ x
    scale = 1.0 + np.abs(b)
    for i, s in enumerate(senses):
        if s == "<=" and lhs[i] > b[i] + tol * scale[i]:
            return False
        if s == ">=" and lhs[i] < b[i] - tol * scale[i]:
            return False
        if s == "==" and abs(lhs[i] - b[i]) > tol * scale[i]:
            return False
    return True


def branch_and_bound(
    model: MilpModel,
    gap: float = 1e-6,
    node_limit: int = 1_000_000,
    time_limit: Optional[float] = None,
    incumbent_x: Optional[np.ndarray] = None,
    max_lp_iter: Optional[int] = None,
    heuristic: Optional[Callable] = None,
    heuristic_period: int = 40,
) -> Solution:
    """Minimize ``model`` to the requested relative gap.

    ``heuristic`` maps (relaxation x, warm basis) to a candidate solution
    vector or None; it runs on the root and every ``heuristic_period`` nodes.
    Candidates are verified with :func:`check_candidate` before acceptance,
    so a wrong heuristic can waste time but never corrupt the result.
    """
    A, senses, b = model.constraint_matrix()
    lb0, ub0 = model.bounds_arrays()
    int_idx = np.nonzero(model.integer_mask())[0]
    c = model.objective_array()
    const = model.objective_constant
    solver = SimplexSolver(c, A, senses, b)

    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    log: list[tuple[int, float, Optional[float]]] = []
    best_x: Optional[np.ndarray] = None
    best_obj = math.inf
    total_iters = 0
    nodes = 0
    started = time.monotonic()

    def snap(x: np.ndarray) -> np.ndarray:
        out = x.copy()
        out[int_idx] = np.round(out[int_idx]) + 0.0  # normalize -0.0
        return out

    if incumbent_x is not None:
        xs = np.asarray(incumbent_x, dtype=float)
        if check_candidate(model, xs):
            best_x = snap(xs)
            best_obj = float(c @ best_x) + const

    root = solver.solve(lb0, ub0, max_iter=max_lp_iter)
    total_iters += root.iterations
    nodes += 1
    if root.status == INFEASIBLE:
        return Solution(INFEASIBLE, None, math.inf, None, None, nodes, total_iters, log,
                        root.detail, bad_rows=root.bad_rows)
    if root.status == UNBOUNDED:
        return Solution(UNBOUNDED, None, -math.inf, None, None, nodes, total_iters, log, root.detail)
    if root.status in (NUMERICAL, ITERATION_LIMIT):
        return Solution(NUMERICAL, None, -math.inf, None, None, nodes, total_iters, log,
                        f"root relaxation: {root.status}: {root.detail}")

    root_obj = root.objective + const
    best_bound = root_obj
    log.append((nodes, best_bound, best_obj if best_x is not None else None))

    branch_var = _fractional(root.x, int_idx)
    if branch_var is None:
        cand = snap(root.x)
        cand_obj = float(c @ cand) + const
        if cand_obj < best_obj:
            best_x, best_obj = cand, cand_obj
        log.append((nodes, best_bound, best_obj))
        return Solution(OPTIMAL, best_obj, best_bound, best_x, 0.0, nodes, total_iters, log)

    def try_heuristic(x_relax: np.ndarray, warm) -> bool:
        nonlocal best_x, best_obj
        raw = heuristic(x_relax, warm)
        if raw is None:
            return False
        cand = snap(np.asarray(raw, dtype=float))
        if not check_candidate(model, cand):
            return False
        cand_obj = float(c @ cand) + const
        if cand_obj < best_obj:
            best_x, best_obj = cand, cand_obj
            return True
        return False

    if heuristic is not None and try_heuristic(root.x, root.basis):
        log.append((nodes, best_bound, best_obj))

    # The frontier lives in a best-first heap keyed on the parent relaxation
    # bound, but each branching immediately plunges into the child nearest
    # the fractional value (the sibling goes on the heap). Dives reach
    # integral leaves quickly even when branching barely moves the bound;
    # on a dead end the search resumes at the globally best open node. Heap
    # entries: (parent bound, insertion order, lb, ub, parent basis); the
    # basis warm-starts the child LP dual-side after the bound change.
    heap: list = []
    counter, dive = _branch(heap, 0, root_obj, root.x, branch_var, lb0, ub0, root.basis)

    status = OPTIMAL
    while heap or dive is not None:
        frontier = heap[0][0] if heap else math.inf
        if dive is not None:
            frontier = min(frontier, dive[0])
        best_bound = min(frontier, best_obj)
        if best_x is not None and _relative_gap(best_obj, frontier) <= gap:
            status = OPTIMAL if gap <= INT_TOL else GAP_REACHED
            break
        if nodes >= node_limit:
            status = NODE_LIMIT
            break
        if time_limit is not None and time.monotonic() - started > time_limit:
            status = TIME_LIMIT
            break
        if dive is not None:
            _, _, nlb, nub, warm = dive
            dive = None
        else:
            _, _, nlb, nub, warm = heapq.heappop(heap)

        res = solver.solve(nlb, nub, max_iter=max_lp_iter, warm=warm)
        total_iters += res.iterations
        nodes += 1
        if res.status == INFEASIBLE:
            continue
        if res.status in (NUMERICAL, ITERATION_LIMIT, UNBOUNDED):
            return Solution(NUMERICAL, best_obj if best_x is not None else None,
                            best_bound, best_x, None, nodes, total_iters, log,
                            f"node relaxation: {res.status}: {res.detail}")
        node_obj = res.objective + const
        if node_obj >= best_obj - GAP_EPS * max(1.0, abs(best_obj)):
            continue

        branch_var = _fractional(res.x, int_idx)
        if branch_var is None:
            cand = snap(res.x)
            cand_obj = float(c @ cand) + const
            if cand_obj < best_obj:
                best_obj = cand_obj
                best_x = cand
                log.append((nodes, best_bound, best_obj))
            continue
        if heuristic is not None and nodes % heuristic_period == 0 and try_heuristic(res.x, res.basis):
            log.append((nodes, best_bound, best_obj))
        counter, dive = _branch(heap, counter, node_obj, res.x, branch_var, nlb, nub, res.basis)
        top = heap[0][0] if heap else math.inf
        top = min(top, dive[0], best_obj)
        if top > best_bound + GAP_EPS:
            best_bound = top
            log.append((nodes, best_bound, best_obj if best_x is not None else None))

    if not heap and dive is None:
        best_bound = best_obj

    if best_x is None:
        if status in (NODE_LIMIT, TIME_LIMIT):
            return Solution(status, None, best_bound, None, None, nodes, total_iters, log,
                            "no feasible point found")
        return Solution(INFEASIBLE, None, math.inf, None, None, nodes, total_iters, log)

    final_gap = max(_relative_gap(best_obj, best_bound), 0.0)
    log.append((nodes, best_bound, best_obj))
    return Solution(status, best_obj, best_bound, best_x, final_gap, nodes, total_iters, log)


def _branch(heap, counter, bound, x, var, lb, ub, warm) -> tuple[int, tuple]:
    """Split on ``var``: the child on the nearest-integer side is returned for
    an immediate dive, the other goes onto the best-first heap."""
    xv = x[var]
    down_ub = ub.copy()
    down_ub[var] = math.floor(xv)
    up_lb = lb.copy()
    up_lb[var] = math.ceil(xv)
    down = (bound, counter, lb.copy(), down_ub, warm)
    up = (bound, counter + 1, up_lb, ub.copy(), warm)
    preferred, other = (down, up) if xv - math.floor(xv) <= 0.5 else (up, down)
    heapq.heappush(heap, other)
    return counter + 2, preferred

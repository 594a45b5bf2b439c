"""Bounded-variable primal simplex.

Solves  min c'x  s.t.  A x (<=|==|>=) b,  lb <= x <= ub  via the revised
simplex method with explicit lower/upper bound handling:

* inequality rows get a slack column, every row gets an artificial column;
* a crash start makes slacks basic wherever they absorb the initial residual,
  artificials cover the rest, and phase 1 minimizes total artificial mass;
* the basis is kept as a sparse LU factorization plus product-form eta
  updates, refactorized periodically;
* pricing is Devex (reference-framework weights, first index on ties) with
  Bland's rule as an anti-cycling fallback after a run of degenerate pivots;
* artificials are locked at zero as soon as they leave the basis in phase 1.

Deterministic: identical inputs take identical pivot sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

FEAS_TOL = 1e-7          # row/bound feasibility
OPT_TOL = 1e-7           # reduced-cost optimality threshold
RATIO_TOL = 1e-10        # direction entries treated as zero in the ratio test
PIVOT_MIN = 1e-8         # smallest acceptable pivot magnitude
REFACTOR_EVERY = 100     # eta updates between refactorizations
DEGENERATE_RUN = 40      # consecutive degenerate pivots before Bland kicks in

_NB_LB, _NB_UB, _BASIC, _NB_FREE, _NB_FIXED = 0, 1, 2, 3, 4


def _unit(m: int, p: int) -> np.ndarray:
    e = np.zeros(m)
    e[p] = 1.0
    return e

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL = "numerical"


@dataclass
class LpResult:
    status: str
    objective: Optional[float]
    x: Optional[np.ndarray]       # structural variable values
    iterations: int
    detail: str = ""
    # (basis, status) snapshot of an optimal solve; feed back through
    # ``solve(..., warm=...)`` to re-solve after bound changes dual-side
    basis: Optional[tuple[np.ndarray, np.ndarray]] = None
    # row indices whose artificials stayed nonzero in an infeasible phase 1
    bad_rows: tuple[int, ...] = ()


class _Factorization:
    """B = LU . E1 . E2 ... ; ftran solves B z = rhs, btran solves B' z = rhs."""

    def __init__(self, matrix: sparse.csc_matrix, basis: np.ndarray):
        self.lu = sparse_linalg.splu(matrix[:, basis].tocsc())
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, rhs: np.ndarray) -> np.ndarray:
        z = self.lu.solve(rhs)
        for p, w in self.etas:
            zp = z[p] / w[p]
            z -= zp * w
            z[p] = zp
        return z

    def btran(self, rhs: np.ndarray) -> np.ndarray:
        z = rhs.copy()
        for p, w in reversed(self.etas):
            z[p] = (z[p] - (w @ z - w[p] * z[p])) / w[p]
        return self.lu.solve(z, trans="T")

    def update(self, p: int, w: np.ndarray) -> None:
        self.etas.append((p, w.copy()))


class SimplexSolver:
    """Reusable solver for a fixed constraint matrix; bounds and objective may
    vary between ``solve`` calls (which is what branch and bound needs)."""

    def __init__(
        self,
        c: np.ndarray,
        A: sparse.spmatrix,
        senses: Sequence[str],
        b: np.ndarray,
    ) -> None:
        A = sparse.csc_matrix(A)
        m, n = A.shape
        if len(senses) != m or len(b) != m:
            raise ValueError("row dimension mismatch")
        self.m, self.n = m, n
        self.c_struct = np.asarray(c, dtype=float).copy()
        self.b = np.asarray(b, dtype=float).copy()
        self.senses = list(senses)

        # slack columns for inequality rows: <= rows get +1, >= rows get -1
        slack_rows = [i for i, s in enumerate(senses) if s != "=="]
        self.slack_of_row = {i: n + k for k, i in enumerate(slack_rows)}
        n_slack = len(slack_rows)
        slack_cols = sparse.csc_matrix(
            (
                np.array([1.0 if senses[i] == "<=" else -1.0 for i in slack_rows]),
                (np.array(slack_rows, dtype=int), np.arange(n_slack)),
            ),
            shape=(m, n_slack),
        )
        art_cols = sparse.identity(m, format="csc")
        self.A_ext = sparse.hstack([A, slack_cols, art_cols], format="csc")
        self.A_ext_T = self.A_ext.T.tocsr()
        self.n_slack = n_slack
        self.art0 = n + n_slack              # first artificial column
        self.ncols = n + n_slack + m

    # -- public ---------------------------------------------------------------

    def solve(
        self,
        lb: np.ndarray,
        ub: np.ndarray,
        c: Optional[np.ndarray] = None,
        max_iter: Optional[int] = None,
        warm: Optional[tuple[np.ndarray, np.ndarray]] = None,
    ) -> LpResult:
        m, n = self.m, self.n
        c_struct = self.c_struct if c is None else np.asarray(c, dtype=float)
        if max_iter is None:
            max_iter = 50_000 + 20 * (m + n)

        full_lb = np.full(self.ncols, -math.inf)
        full_ub = np.full(self.ncols, math.inf)
        full_lb[:n] = lb
        full_ub[:n] = ub
        full_lb[n : self.art0] = 0.0           # slacks >= 0
        if np.any(full_lb[:n] > full_ub[:n] + 1e-12):
            j = int(np.argmax(full_lb[:n] - full_ub[:n]))
            return LpResult(INFEASIBLE, None, None, 0, f"empty bound range on column {j}")

        if m == 0:
            return self._solve_unconstrained(c_struct, lb, ub)

        if warm is not None:
            res = self._solve_warm(full_lb, full_ub, c_struct, max_iter, warm)
            if res is not None:
                return res
            # fall through to a cold solve on any warm-start trouble

        x = np.zeros(self.ncols)
        status = np.empty(self.ncols, dtype=np.int8)
        for j in range(self.art0):
            ljf, ujf = math.isfinite(full_lb[j]), math.isfinite(full_ub[j])
            if ljf and ujf and full_lb[j] == full_ub[j]:
                status[j], x[j] = _NB_FIXED, full_lb[j]
            elif ljf:
                status[j], x[j] = _NB_LB, full_lb[j]
            elif ujf:
                status[j], x[j] = _NB_UB, full_ub[j]
            else:
                status[j], x[j] = _NB_FREE, 0.0

        # crash: residual with everything nonbasic, slacks absorb what they can
        resid = self.b - self.A_ext[:, : self.art0] @ x[: self.art0]
        basis = np.empty(m, dtype=np.int64)
        art_sign = np.zeros(m)
        for i in range(m):
            s_col = self.slack_of_row.get(i)
            s_val = resid[i] if (s_col is not None and self.senses[i] == "<=") else -resid[i]
            if s_col is not None and s_val >= 0.0:
                basis[i] = s_col
                x[s_col] = s_val
                status[s_col] = _BASIC
            else:
                a_col = self.art0 + i
                basis[i] = a_col
                x[a_col] = resid[i]
                status[a_col] = _BASIC
                art_sign[i] = 1.0 if resid[i] >= 0 else -1.0

        # artificial bounds: used ones may only shrink toward zero
        for i in range(m):
            a_col = self.art0 + i
            if art_sign[i] > 0:
                full_lb[a_col], full_ub[a_col] = 0.0, math.inf
            elif art_sign[i] < 0:
                full_lb[a_col], full_ub[a_col] = -math.inf, 0.0
            else:
                full_lb[a_col] = full_ub[a_col] = 0.0
                if status[a_col] != _BASIC:
                    status[a_col], x[a_col] = _NB_FIXED, 0.0

        state = _State(self, x, status, basis, full_lb, full_ub)

        if np.any(art_sign != 0.0):
            c1 = np.zeros(self.ncols)
            c1[self.art0 :] = art_sign
            res = state.iterate(c1, max_iter, lock_from=self.art0)
            if res is not None and res != OPTIMAL:
                return self._wrap(state, res, c_struct)
            phase1 = float(c1 @ state.x)
            if phase1 > FEAS_TOL * (1.0 + float(np.abs(self.b).max(initial=0.0))):
                resid = state.x[self.art0 :]
                bad = np.nonzero(resid > FEAS_TOL * (1.0 + np.abs(self.b)))[0]
                return LpResult(
                    INFEASIBLE, None, None, state.iterations,
                    f"phase-1 residual {phase1:.3e}",
                    bad_rows=tuple(int(i) for i in bad[:16]),
                )

        # phase 2: artificials pinned at zero
        full_lb[self.art0 :] = 0.0
        full_ub[self.art0 :] = 0.0
        nb_art = (status[self.art0 :] != _BASIC).nonzero()[0]
        status[self.art0 + nb_art] = _NB_FIXED
        x[self.art0 + nb_art] = 0.0

        c2 = np.zeros(self.ncols)
        c2[:n] = c_struct
        res = state.iterate(c2, max_iter)
        return self._wrap(state, res or OPTIMAL, c_struct)

    # -- helpers ---------------------------------------------------------------

    def _solve_warm(
        self,
        full_lb: np.ndarray,
        full_ub: np.ndarray,
        c_struct: np.ndarray,
        max_iter: int,
        warm: tuple[np.ndarray, np.ndarray],
    ) -> Optional[LpResult]:
        """Dual-simplex re-solve from an optimal basis of the same objective.

        Returns None when the warm attempt is abandoned (caller re-solves cold);
        an INFEASIBLE outcome here is trustworthy (dual unboundedness).
        """
        basis = warm[0].copy()
        status = warm[1].copy()
        full_lb[self.art0 :] = 0.0
        full_ub[self.art0 :] = 0.0

        # re-anchor nonbasic columns to bounds that still exist
        x = np.zeros(self.ncols)
        nb = status != _BASIC
        finite_lb = np.isfinite(full_lb)
        finite_ub = np.isfinite(full_ub)
        fixed = nb & finite_lb & (full_lb == full_ub)
        keep_lb = nb & ~fixed & (status == _NB_LB) & finite_lb
        keep_ub = nb & ~fixed & (status == _NB_UB) & finite_ub
        rest = nb & ~fixed & ~keep_lb & ~keep_ub
        status[fixed] = _NB_FIXED
        status[keep_lb] = _NB_LB
        status[keep_ub] = _NB_UB
        status[rest & finite_lb] = _NB_LB
        status[rest & ~finite_lb & finite_ub] = _NB_UB
        status[rest & ~finite_lb & ~finite_ub] = _NB_FREE
        for flag, bound in ((_NB_LB, full_lb), (_NB_UB, full_ub), (_NB_FIXED, full_lb)):
            sel = status == flag
            x[sel] = bound[sel]

        c2 = np.zeros(self.ncols)
        c2[: self.n] = c_struct
        try:
            state = _State(self, x, status, basis, full_lb, full_ub)
        except RuntimeError:
            return None
        res = state.dual_iterate(c2, min(max_iter, 5_000 + 2 * self.m))
        if res == INFEASIBLE:
            return LpResult(INFEASIBLE, None, None, state.iterations, state.detail)
        if res != OPTIMAL:
            return None
        # polish with the primal loop; usually confirms optimality in 0 pivots
        res = state.iterate(c2, max_iter)
        if (res or OPTIMAL) != OPTIMAL:
            return None
        return self._wrap(state, OPTIMAL, c_struct)

    def _wrap(self, state: "_State", outcome: str, c_struct: np.ndarray) -> LpResult:
        if outcome == OPTIMAL:
            xs = state.x[: self.n].copy()
            snap = (state.basis.copy(), state.status.copy())
            return LpResult(OPTIMAL, float(c_struct @ xs), xs, state.iterations, basis=snap)
        return LpResult(outcome, None, None, state.iterations, state.detail)

    def _solve_unconstrained(self, c, lb, ub) -> LpResult:
        x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))))
        if np.any(~np.isfinite(x) & (np.abs(c) > 0)):
            j = int(np.nonzero(~np.isfinite(x) & (np.abs(c) > 0))[0][0])
            return LpResult(UNBOUNDED, None, None, 0, f"column {j} unbounded")
        x = np.where(np.isfinite(x), x, 0.0)
        return LpResult(OPTIMAL, float(c @ x), x.astype(float), 0)


class _State:
    def __init__(self, solver: SimplexSolver, x, status, basis, lb, ub):
        self.s = solver
        self.x = x
        self.status = status
        self.basis = basis
        self.lb = lb
        self.ub = ub
        self.iterations = 0
        self.detail = ""
        self.fact = _Factorization(solver.A_ext, basis)
        self._recompute_basics()

    def _refactor(self) -> bool:
        try:
            self.fact = _Factorization(self.s.A_ext, self.basis)
        except RuntimeError:
            self.detail = "basis factorization failed"
            return False
        self._recompute_basics()
        return True

    def _recompute_basics(self) -> None:
        x_nb = self.x.copy()
        x_nb[self.basis] = 0.0
        resid = self.s.b - self.s.A_ext @ x_nb
        self.x[self.basis] = self.fact.ftran(resid)

    def iterate(self, c: np.ndarray, max_iter: int, lock_from: Optional[int] = None) -> Optional[str]:
        """Run simplex until optimality (returns OPTIMAL) or failure status.

        ``lock_from``: columns at or past this index are pinned to zero the
        moment they leave the basis (phase-1 artificial retirement).
        """
        bland = False
        degenerate_run = 0
        gamma = np.ones(self.s.ncols)
        while True:
            if self.iterations >= max_iter:
                self.detail = "iteration budget exhausted"
                return ITERATION_LIMIT
            if len(self.fact.etas) >= REFACTOR_EVERY:
                if not self._refactor():
                    return NUMERICAL

            pi = self.fact.btran(c[self.basis])
            d = c - self.s.A_ext_T @ pi

            viol = np.zeros(self.s.ncols)
            st = self.status
            sel = (st == _NB_LB) & (d < -OPT_TOL)
            viol[sel] = -d[sel]
            sel = (st == _NB_UB) & (d > OPT_TOL)
            viol[sel] = d[sel]
            sel = (st == _NB_FREE) & (np.abs(d) > OPT_TOL)
            viol[sel] = np.abs(d[sel])

            if not np.any(viol > 0):
                return OPTIMAL
            if bland:
                j = int(np.nonzero(viol > 0)[0][0])
            else:
                j = int(np.argmax(viol * viol / gamma))
            sigma = 1.0 if (st[j] == _NB_LB or (st[j] == _NB_FREE and d[j] < 0)) else -1.0

            a_j = np.zeros(self.s.m)
            col = self.s.A_ext[:, j]
            a_j[col.indices] = col.data
            w = self.fact.ftran(a_j)

            theta, p, flip = self._ratio(j, sigma, w, bland)
            if theta is None:
                self.detail = f"entering column {j} unbounded"
                return UNBOUNDED
            if p is not None and abs(w[p]) < PIVOT_MIN:
                if self.fact.etas:
                    if not self._refactor():
                        return NUMERICAL
                    continue
                self.detail = f"pivot too small on row position {p}, column {j}"
                return NUMERICAL

            self.iterations += 1
            self.x[self.basis] -= theta * sigma * w
            if flip:
                self.x[j] = self.ub[j] if self.status[j] == _NB_LB else self.lb[j]
                self.status[j] = _NB_UB if self.status[j] == _NB_LB else _NB_LB
            else:
                # Devex weight update from row p of the current tableau
                rho = self.fact.btran(_unit(self.s.m, p))
                alpha = self.s.A_ext_T @ rho
                pivot = w[p]
                nb = self.status != _BASIC
                np.maximum(gamma, (alpha / pivot) ** 2 * gamma[j], out=gamma, where=nb)

                q = int(self.basis[p])
                hit_lb = sigma * w[p] > 0
                self.x[q] = self.lb[q] if hit_lb else self.ub[q]
                self.status[q] = _NB_LB if hit_lb else _NB_UB
                if self.lb[q] == self.ub[q]:
                    self.status[q] = _NB_FIXED
                if lock_from is not None and q >= lock_from:
                    self.lb[q] = self.ub[q] = 0.0
                    self.x[q] = 0.0
                    self.status[q] = _NB_FIXED
                gamma[q] = max(gamma[j] / (pivot * pivot), 1.0)
                start = self.x[j]
                self.x[j] = start + sigma * theta if self.status[j] != _NB_FREE else sigma * theta
                self.basis[p] = j
                self.status[j] = _BASIC
                self.fact.update(p, w)
                if gamma.max() > 1e8:
                    gamma[:] = 1.0

            if theta <= 1e-10:
                degenerate_run += 1
                if degenerate_run >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def dual_iterate(self, c: np.ndarray, max_iter: int) -> str:
        """Dual simplex: drive out bound-violating basics while keeping the
        reduced costs sign-feasible. Requires a start that is dual feasible
        (an optimal basis of the same objective with changed bounds).

        Returns OPTIMAL (primal feasibility reached), INFEASIBLE (dual
        unbounded), or a failure status that the caller treats as "re-solve
        cold".
        """
        bland = False
        degenerate_run = 0
        feas_scale = FEAS_TOL * (1.0 + float(np.abs(self.s.b).max(initial=0.0)))
        while True:
            if self.iterations >= max_iter:
                self.detail = "dual iteration budget exhausted"
                return ITERATION_LIMIT
            if len(self.fact.etas) >= REFACTOR_EVERY:
                if not self._refactor():
                    return NUMERICAL

            xB = self.x[self.basis]
            below = self.lb[self.basis] - xB
            above = xB - self.ub[self.basis]
            worst = np.maximum(below, above)
            p = int(np.argmax(worst))
            if worst[p] <= feas_scale:
                return OPTIMAL
            leave_low = below[p] >= above[p]    # x below lb -> leaves at its lb
            q = int(self.basis[p])
            delta = xB[p] - (self.lb[q] if leave_low else self.ub[q])

            rho = self.fact.btran(_unit(self.s.m, p))
            alpha = self.s.A_ext_T @ rho
            pi = self.fact.btran(c[self.basis])
            d = c - self.s.A_ext_T @ pi

            # entering candidates keep the pivot's primal step admissible
            st = self.status
            cand = (
                ((st == _NB_LB) & (np.sign(alpha) == np.sign(delta)))
                | ((st == _NB_UB) & (np.sign(alpha) == -np.sign(delta)))
                | (st == _NB_FREE)
            ) & (np.abs(alpha) > RATIO_TOL)
            idx = np.nonzero(cand)[0]
            if idx.size == 0:
                self.detail = f"no dual pivot for row position {p}"
                return INFEASIBLE

            ratios = np.abs(d[idx]) / np.abs(alpha[idx])
            theta_d = float(ratios.min())
            tied = idx[ratios <= theta_d + OPT_TOL]
            if bland:
                j = int(tied.min())
            else:
                j = int(tied[np.argmax(np.abs(alpha[tied]))])
            if abs(alpha[j]) < PIVOT_MIN:
                if self.fact.etas:
                    if not self._refactor():
                        return NUMERICAL
                    continue
                self.detail = f"dual pivot too small on column {j}"
                return NUMERICAL

            col = self.s.A_ext[:, j]
            a_j = np.zeros(self.s.m)
            a_j[col.indices] = col.data
            w = self.fact.ftran(a_j)
            if abs(w[p]) < PIVOT_MIN:
                if self.fact.etas:
                    if not self._refactor():
                        return NUMERICAL
                    continue
                self.detail = f"dual pivot disagreement on column {j}"
                return NUMERICAL

            step = delta / w[p]
            self.iterations += 1
            self.x[self.basis] -= step * w
            self.x[j] = self.x[j] + step
            self.x[q] = self.lb[q] if leave_low else self.ub[q]
            self.status[q] = _NB_FIXED if self.lb[q] == self.ub[q] else (
                _NB_LB if leave_low else _NB_UB
            )
            self.basis[p] = j
            self.status[j] = _BASIC
            self.fact.update(p, w)

            if theta_d <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate_run = 0

    def _ratio(self, j: int, sigma: float, w: np.ndarray, bland: bool):
        """Returns (theta, leaving position or None, flip?) or (None, None, False)
        when the step is unbounded."""
        xB = self.x[self.basis]
        lbB = self.lb[self.basis]
        ubB = self.ub[self.basis]
        sw = sigma * w

        ratios = np.full(self.s.m, math.inf)
        dec = sw > RATIO_TOL
        if np.any(dec):
            ratios[dec] = (xB[dec] - lbB[dec]) / sw[dec]
        inc = sw < -RATIO_TOL
        if np.any(inc):
            ratios[inc] = (ubB[inc] - xB[inc]) / (-sw[inc])
        np.maximum(ratios, 0.0, out=ratios)

        theta_basic = float(ratios.min()) if self.s.m else math.inf
        rng = self.ub[j] - self.lb[j]
        flip_range = rng if math.isfinite(rng) else math.inf

        if flip_range <= theta_basic:
            if math.isinf(flip_range):
                return None, None, False
            return flip_range, None, True
        if math.isinf(theta_basic):
            return None, None, False

        cand = np.nonzero(ratios <= theta_basic + 1e-9)[0]
        if bland:
            p = int(cand[np.argmin(self.basis[cand])])
        else:
            p = int(cand[np.argmax(np.abs(w[cand]))])
        return theta_basic, int(p), False


def solve_lp(
    c: np.ndarray,
    A: sparse.spmatrix,
    senses: Sequence[str],
    b: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    max_iter: Optional[int] = None,
) -> LpResult:
    """One-shot LP solve over arrays; see :class:`SimplexSolver`."""
    return SimplexSolver(np.asarray(c, float), A, senses, np.asarray(b, float)).solve(
        np.asarray(lb, float), np.asarray(ub, float), max_iter=max_iter
    )


def solve_model_lp(model, max_iter: Optional[int] = None) -> LpResult:
    """LP relaxation of a :class:`~depotcharge.milp.model.MilpModel`."""
    A, senses, b = model.constraint_matrix()
    lb, ub = model.bounds_arrays()
    res = solve_lp(model.objective_array(), A, senses, b, lb, ub, max_iter=max_iter)
    if res.status == OPTIMAL:
        res.objective += model.objective_constant
    return res

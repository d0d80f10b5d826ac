"""Dense two-phase primal simplex with general variable bounds.

Works directly on lower/upper bounded variables (bounds are not expanded
into rows), supports <=, =, >= rows, and uses Dantzig pricing with a Bland's
rule fallback once a run of degenerate pivots is detected, which prevents
cycling. Feasibility is judged at 1e-7 by default.

Everything is deterministic: candidate selection always resolves ties by
lowest index, and no randomness or wall-clock state enters pivoting
decisions (a deadline, when given, only decides whether to keep iterating).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

INF = float("inf")

FEASIBILITY_TOL = 1e-7
REDUCED_COST_TOL = 1e-9
RATIO_TOL = 1e-10
DEGENERATE_STEP_TOL = 1e-12
DEGENERATE_STREAK_LIMIT = 40
REFACTOR_INTERVAL = 500


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "limit-hit"
    x: Optional[np.ndarray]
    objective: float
    iterations: int


class _Tableau:
    """Mutable simplex state over the augmented column set."""

    def __init__(
        self,
        columns: np.ndarray,
        rhs: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
        basis: np.ndarray,
        at_upper: np.ndarray,
        row_scale: np.ndarray,
    ):
        self.columns = columns  # original (m, n_total), read-only
        self.rhs = rhs
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.at_upper = at_upper
        self.tableau = columns * row_scale[:, None]
        self.basic_values = self._initial_basic_values(row_scale)
        self.iterations = 0

    def _initial_basic_values(self, row_scale: np.ndarray) -> np.ndarray:
        rest = self.rest_values()
        nonbasic_mask = np.ones(self.columns.shape[1], dtype=bool)
        nonbasic_mask[self.basis] = False
        residual = self.rhs - self.columns[:, nonbasic_mask] @ rest[nonbasic_mask]
        return residual * row_scale

    def rest_values(self) -> np.ndarray:
        """Value every variable takes when nonbasic (its resting bound, 0 if free)."""
        rest = np.where(np.isfinite(self.lower), self.lower, 0.0)
        hi_only = ~np.isfinite(self.lower) & np.isfinite(self.upper)
        rest[hi_only] = self.upper[hi_only]
        rest[self.at_upper & np.isfinite(self.upper)] = self.upper[
            self.at_upper & np.isfinite(self.upper)
        ]
        return rest

    def solution(self) -> np.ndarray:
        x = self.rest_values()
        x[self.basis] = self.basic_values
        return x

    def refactorize(self) -> None:
        """Recompute the tableau and basic values from the original columns."""
        basis_matrix = self.columns[:, self.basis]
        self.tableau = np.linalg.solve(basis_matrix, self.columns)
        x = self.rest_values()
        nonbasic_mask = np.ones(self.columns.shape[1], dtype=bool)
        nonbasic_mask[self.basis] = False
        residual = self.rhs - self.columns[:, nonbasic_mask] @ x[nonbasic_mask]
        self.basic_values = np.linalg.solve(basis_matrix, residual)


def _run_phase(
    state: _Tableau,
    costs: np.ndarray,
    *,
    max_iterations: int,
    deadline: Optional[float],
) -> str:
    """Iterate to optimality for the given costs. Returns a phase status."""
    m, n_total = state.tableau.shape
    reduced = costs - costs[state.basis] @ state.tableau
    reduced[state.basis] = 0.0

    bland = False
    degenerate_streak = 0
    repairs = 0
    fixed = state.lower >= state.upper  # equal-bound variables never enter
    free = ~np.isfinite(state.lower) & ~np.isfinite(state.upper)

    while True:
        if state.iterations >= max_iterations:
            return "limit-hit"
        if deadline is not None and state.iterations % 128 == 0:
            if time.monotonic() > deadline:
                return "limit-hit"

        nonbasic = np.ones(n_total, dtype=bool)
        nonbasic[state.basis] = False
        candidates = nonbasic & ~fixed
        down_ok = candidates & (state.at_upper | free) & (reduced > REDUCED_COST_TOL)
        up_ok = candidates & (~state.at_upper | free) & (reduced < -REDUCED_COST_TOL)
        improving = down_ok | up_ok
        if not improving.any():
            return "optimal"

        if bland:
            entering = int(np.nonzero(improving)[0][0])
        else:
            score = np.where(improving, np.abs(reduced), -1.0)
            entering = int(np.argmax(score))
        sign = 1.0 if reduced[entering] < 0 else -1.0

        column = state.tableau[:, entering]
        step_basic = sign * column
        lo_b = state.lower[state.basis]
        hi_b = state.upper[state.basis]

        ratios = np.full(m, INF)
        dec = step_basic > RATIO_TOL
        if dec.any():
            with np.errstate(invalid="ignore"):
                ratios[dec] = (state.basic_values[dec] - lo_b[dec]) / step_basic[dec]
        inc = step_basic < -RATIO_TOL
        if inc.any():
            with np.errstate(invalid="ignore"):
                ratios[inc] = (hi_b[inc] - state.basic_values[inc]) / -step_basic[inc]
        ratios = np.maximum(ratios, 0.0)

        span = state.upper[entering] - state.lower[entering]
        row_min = float(ratios.min()) if m else INF
        step = min(row_min, span)
        if step == INF:
            return "unbounded"

        state.iterations += 1
        if step <= DEGENERATE_STEP_TOL:
            degenerate_streak += 1
            if degenerate_streak > DEGENERATE_STREAK_LIMIT:
                bland = True
        else:
            degenerate_streak = 0
            bland = False

        if span <= row_min:
            # Bound flip: the entering variable crosses to its other bound.
            state.at_upper[entering] = ~state.at_upper[entering]
            state.basic_values -= step * step_basic
            continue

        tie_rows = np.nonzero(ratios <= row_min + RATIO_TOL)[0]
        if bland:
            leaving_row = int(tie_rows[np.argmin(state.basis[tie_rows])])
        else:
            leaving_row = int(tie_rows[np.argmax(np.abs(column[tie_rows]))])

        pivot = state.tableau[leaving_row, entering]
        if abs(pivot) < 1e-11:
            repairs += 1
            if repairs > 3:
                return "limit-hit"
            try:
                state.refactorize()
            except np.linalg.LinAlgError:
                return "limit-hit"
            reduced = costs - costs[state.basis] @ state.tableau
            reduced[state.basis] = 0.0
            continue
        repairs = 0

        leaving = state.basis[leaving_row]
        entering_value = (
            state.upper[entering] if state.at_upper[entering] else state.lower[entering]
        )
        if not np.isfinite(entering_value):
            entering_value = 0.0
        entering_value += sign * step

        state.basic_values -= step * step_basic
        state.basic_values[leaving_row] = entering_value
        state.basis[leaving_row] = entering
        # The leaving variable exits at whichever of its bounds blocked.
        state.at_upper[leaving] = step_basic[leaving_row] < 0

        pivot_row = state.tableau[leaving_row] / pivot
        factors = state.tableau[:, entering].copy()
        factors[leaving_row] = 0.0
        state.tableau -= np.outer(factors, pivot_row)
        state.tableau[leaving_row] = pivot_row
        reduced = reduced - reduced[entering] * pivot_row
        reduced[state.basis] = 0.0

        if state.iterations % REFACTOR_INTERVAL == 0:
            try:
                state.refactorize()
            except np.linalg.LinAlgError:
                return "limit-hit"
            reduced = costs - costs[state.basis] @ state.tableau
            reduced[state.basis] = 0.0


def solve_lp(
    objective: np.ndarray,
    a_matrix: np.ndarray,
    senses: Sequence[str],
    rhs: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    *,
    max_iterations: Optional[int] = None,
    deadline: Optional[float] = None,
    feasibility_tol: float = FEASIBILITY_TOL,
) -> LpResult:
    """Minimize objective @ x subject to rows of a_matrix and variable bounds.

    Returns structural variable values only; slacks and artificials are
    internal. ``deadline`` is an absolute time.monotonic() cutoff.
    """
    objective = np.asarray(objective, dtype=float)
    a_matrix = np.asarray(a_matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float).copy()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, n = a_matrix.shape if a_matrix.ndim == 2 else (0, objective.size)
    if m == 0:
        if np.any((objective > 0) & ~np.isfinite(lower)) or np.any(
            (objective < 0) & ~np.isfinite(upper)
        ):
            return LpResult("unbounded", None, -INF, 0)
        x = np.where(objective > 0, lower, np.where(objective < 0, upper, 0.0))
        x = np.where(np.isfinite(x), x, 0.0)
        return LpResult("optimal", x, float(objective @ x), 0)

    rows = a_matrix.copy()
    flip = np.array([s == ">=" for s in senses])
    rows[flip] *= -1.0
    rhs[flip] *= -1.0
    is_eq = np.array([s == "=" for s in senses])

    slack_rows = np.nonzero(~is_eq)[0]
    n_slack = slack_rows.size
    slack_cols = np.zeros((m, n_slack))
    slack_cols[slack_rows, np.arange(n_slack)] = 1.0

    # Residual at the all-nonbasic resting point decides who starts basic.
    rest = np.where(np.isfinite(lower), lower, 0.0)
    hi_only = ~np.isfinite(lower) & np.isfinite(upper)
    rest[hi_only] = upper[hi_only]
    residual = rhs - rows @ rest

    basis = np.full(m, -1, dtype=int)
    slack_of_row = np.full(m, -1, dtype=int)
    slack_of_row[slack_rows] = n + np.arange(n_slack)
    needs_artificial = []
    for i in range(m):
        if slack_of_row[i] >= 0 and residual[i] >= -feasibility_tol:
            basis[i] = slack_of_row[i]
        else:
            needs_artificial.append(i)

    n_art = len(needs_artificial)
    art_cols = np.zeros((m, n_art))
    row_scale = np.ones(m)
    for k, i in enumerate(needs_artificial):
        coef = 1.0 if residual[i] >= 0 else -1.0
        art_cols[i, k] = coef
        row_scale[i] = coef
        basis[i] = n + n_slack + k

    columns = np.hstack([rows, slack_cols, art_cols])
    n_total = columns.shape[1]
    lo_all = np.concatenate([lower, np.zeros(n_slack), np.zeros(n_art)])
    hi_all = np.concatenate([upper, np.full(n_slack, INF), np.full(n_art, INF)])
    at_upper = np.zeros(n_total, dtype=bool)
    at_upper[:n][hi_only] = True

    state = _Tableau(columns, rhs, lo_all, hi_all, basis, at_upper, row_scale)
    if max_iterations is None:
        max_iterations = 200 + 40 * (m + n_total)

    if n_art > 0:
        phase1_costs = np.zeros(n_total)
        phase1_costs[n + n_slack :] = 1.0
        status = _run_phase(
            state, phase1_costs, max_iterations=max_iterations, deadline=deadline
        )
        if status == "limit-hit":
            return LpResult("limit-hit", None, INF, state.iterations)
        art_level = float(
            phase1_costs[state.basis] @ np.maximum(state.basic_values, 0.0)
        )
        if art_level > feasibility_tol:
            return LpResult("infeasible", None, INF, state.iterations)
        state.upper[n + n_slack :] = 0.0

    phase2_costs = np.concatenate([objective, np.zeros(n_slack + n_art)])
    status = _run_phase(state, phase2_costs, max_iterations=max_iterations, deadline=deadline)
    if status == "limit-hit":
        return LpResult("limit-hit", None, INF, state.iterations)
    if status == "unbounded":
        return LpResult("unbounded", None, -INF, state.iterations)

    x = state.solution()[:n]
    return LpResult("optimal", x, float(objective @ x), state.iterations)

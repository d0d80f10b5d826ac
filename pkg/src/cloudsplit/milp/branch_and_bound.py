"""Branch-and-bound over LP relaxations, plus plan extraction.

Node selection is best-bound; branching picks the most fractional variable,
binaries before general integers, lowest index on ties. Every choice is
deterministic, so a solve reproduces exactly for fixed options as long as it
terminates by optimality or node limit rather than wall clock.

Programs built by :func:`..milp.program.build_milp` carry a structure tag;
for those, node relaxations are solved on an equivalent reduced form that
substitutes each support indicator by the share it covers (exact here: the
indicators never enter the objective and carry only nonnegative setup
coefficients in <= rows), and each node additionally contributes a rounded
feasible plan as an incumbent candidate. Hand-built programs take the
generic path.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import NoSolutionError, ValidationError
from ..models import AllocationMatrix, ClusterModel, PartitionPlan, plan_from_allocation
from .program import (
    MAKESPAN_VAR,
    MilpSolution,
    MixedIntegerProgram,
    PartitionStructure,
    SolveOptions,
    alloc_var,
    quanta_var,
    support_var,
)
from .simplex import solve_lp

INF = float("inf")

_FREE, _ZERO, _ONE = -1, 0, 1


@dataclass
class _Compiled:
    names: list[str]
    objective: np.ndarray
    matrix: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    binary_idx: np.ndarray
    integer_idx: np.ndarray


def _compile(program: MixedIntegerProgram) -> _Compiled:
    names = [v.name for v in program.variables]
    index = {name: k for k, name in enumerate(names)}
    n = len(names)
    objective = np.zeros(n)
    for name, coef in program.objective.items():
        objective[index[name]] = coef
    m = len(program.constraints)
    matrix = np.zeros((m, n))
    rhs = np.zeros(m)
    senses = []
    for r, constraint in enumerate(program.constraints):
        for name, coef in constraint.coefficients.items():
            matrix[r, index[name]] = coef
        rhs[r] = constraint.rhs
        senses.append(constraint.sense)
    lower = np.array([v.lower for v in program.variables])
    upper = np.array([v.upper for v in program.variables])
    binary_idx = np.array(
        [k for k, v in enumerate(program.variables) if v.integrality == "binary"], dtype=int
    )
    integer_idx = np.array(
        [k for k, v in enumerate(program.variables) if v.integrality == "integer"], dtype=int
    )
    return _Compiled(names, objective, matrix, senses, rhs, lower, upper, binary_idx, integer_idx)


def solve_lp_relaxation(program: MixedIntegerProgram) -> MilpSolution:
    """Solve the program with integrality dropped, on the explicit row set."""
    compiled = _compile(program)
    result = solve_lp(
        compiled.objective,
        compiled.matrix,
        compiled.senses,
        compiled.rhs,
        compiled.lower,
        compiled.upper,
    )
    if result.status != "optimal":
        return MilpSolution(
            values={},
            objective_value=result.objective,
            status=result.status,
            gap=INF,
            nodes_explored=0,
        )
    values = {name: float(v) for name, v in zip(compiled.names, result.x)}
    return MilpSolution(
        values=values,
        objective_value=result.objective,
        status="optimal",
        gap=0.0,
        nodes_explored=0,
        best_bound=result.objective,
    )


class _GenericNodeSolver:
    """Node relaxations on the program exactly as declared."""

    def __init__(self, compiled: _Compiled):
        self.compiled = compiled

    def solve(self, overrides: dict[int, tuple[float, float]], deadline: Optional[float]):
        lower = self.compiled.lower.copy()
        upper = self.compiled.upper.copy()
        for idx, (lo, hi) in overrides.items():
            lower[idx] = max(lower[idx], lo)
            upper[idx] = min(upper[idx], hi)
        if np.any(lower > upper):
            return "infeasible", INF, None
        result = solve_lp(
            self.compiled.objective,
            self.compiled.matrix,
            self.compiled.senses,
            self.compiled.rhs,
            lower,
            upper,
            deadline=deadline,
        )
        return result.status, result.objective, result.x

    def rounding_candidate(self, x: np.ndarray):
        return None


class _PartitionNodeSolver:
    """Node relaxations on the reduced form of partitioning programs.

    Support indicators are substituted out: a free indicator contributes its
    setup time in proportion to the share (the LP optimum always has
    indicator = share there), a fixed-one indicator becomes a constant, and a
    fixed-zero indicator pins its share to zero. Bounds and feasible set are
    otherwise identical, so node bounds match the full relaxation.
    """

    def __init__(self, structure: PartitionStructure, compiled: _Compiled):
        self.s = structure
        self.compiled = compiled
        mu, tau = structure.n_platforms, structure.n_tasks
        self.mu, self.tau = mu, tau
        self.has_cap = structure.cost_cap is not None
        names = compiled.names
        for i in range(mu):
            for j in range(tau):
                assert names[i * tau + j] == alloc_var(i, j)
                assert names[mu * tau + i * tau + j] == support_var(i, j)
            assert names[2 * mu * tau + i] == quanta_var(i)
        assert names[2 * mu * tau + mu] == MAKESPAN_VAR

        n_red = mu * tau + (mu if self.has_cap else 0) + 1
        m = tau + mu + (mu + 1 if self.has_cap else 0)
        base = np.zeros((m, n_red))
        for j in range(tau):
            base[j, np.arange(mu) * tau + j] = 1.0
        coef_free = structure.scaled_beta + structure.gamma
        for i in range(mu):
            cols = slice(i * tau, (i + 1) * tau)
            base[tau + i, cols] = coef_free[i]
            base[tau + i, n_red - 1] = -1.0
            if self.has_cap:
                base[tau + mu + i, cols] = coef_free[i]
                base[tau + mu + i, mu * tau + i] = -float(structure.quanta[i])
        if self.has_cap:
            base[m - 1, mu * tau : mu * tau + mu] = structure.prices
        self.base_matrix = base
        self.base_rhs = np.concatenate(
            [np.ones(tau), np.zeros(mu)]
            + ([np.zeros(mu), np.array([structure.cost_cap])] if self.has_cap else [])
        )
        self.senses = ["="] * tau + ["<="] * (m - tau)
        self.objective = np.zeros(n_red)
        self.objective[-1] = 1.0
        self.n_red = n_red
        self.m = m

    def solve(self, overrides: dict[int, tuple[float, float]], deadline: Optional[float]):
        mu, tau = self.mu, self.tau
        s = self.s
        state = np.full((mu, tau), _FREE, dtype=np.int8)
        quanta_lb = np.zeros(mu)
        quanta_ub = s.quanta_upper.astype(float).copy()
        for idx, (lo, hi) in overrides.items():
            if mu * tau <= idx < 2 * mu * tau:
                flat = idx - mu * tau
                i, j = divmod(flat, tau)
                if hi <= 0.5:
                    state[i, j] = _ZERO
                elif lo >= 0.5:
                    state[i, j] = _ONE
            elif 2 * mu * tau <= idx < 2 * mu * tau + mu:
                i = idx - 2 * mu * tau
                quanta_lb[i] = max(quanta_lb[i], lo)
                quanta_ub[i] = min(quanta_ub[i], hi)
        if np.any(quanta_lb > quanta_ub):
            return "infeasible", INF, None

        matrix = self.base_matrix.copy()
        rhs = self.base_rhs.copy()
        ones = np.argwhere(state == _ONE)
        for i, j in ones:
            g = s.gamma[i, j]
            if g == 0.0:
                continue
            col = i * tau + j
            matrix[tau + i, col] -= g
            rhs[tau + i] -= g
            if self.has_cap:
                matrix[tau + mu + i, col] -= g
                rhs[tau + mu + i] -= g

        lower = np.zeros(self.n_red)
        upper = np.ones(self.n_red)
        alloc_ub = np.where(state == _ZERO, 0.0, 1.0).reshape(-1)
        upper[: mu * tau] = alloc_ub
        if self.has_cap:
            lower[mu * tau : mu * tau + mu] = quanta_lb
            upper[mu * tau : mu * tau + mu] = quanta_ub
        upper[-1] = s.makespan_upper

        result = solve_lp(
            self.objective, matrix, self.senses, rhs, lower, upper, deadline=deadline
        )
        if result.status != "optimal":
            return result.status, result.objective, None

        alloc = np.clip(result.x[: mu * tau], 0.0, 1.0)
        x_full = np.zeros(2 * mu * tau + mu + 1)
        x_full[: mu * tau] = alloc
        support = np.where(
            state.reshape(-1) == _FREE, alloc, np.maximum(state.reshape(-1), 0.0)
        )
        x_full[mu * tau : 2 * mu * tau] = support
        if self.has_cap:
            x_full[2 * mu * tau : 2 * mu * tau + mu] = result.x[mu * tau : mu * tau + mu]
        x_full[-1] = result.x[-1]
        return "optimal", result.objective, x_full

    def rounding_candidate(self, x: np.ndarray):
        """Round a node relaxation into a globally feasible point, if the cap allows."""
        mu, tau = self.mu, self.tau
        s = self.s
        alloc = x[: mu * tau].reshape(mu, tau)
        support = alloc > 1e-9
        latencies = (s.scaled_beta * alloc).sum(axis=1) + (s.gamma * support).sum(axis=1)
        quanta = np.array(
            [math.ceil(latencies[i] / s.quanta[i]) if latencies[i] > 0 else 0 for i in range(mu)],
            dtype=float,
        )
        if s.cost_cap is not None:
            cost = float(quanta @ s.prices)
            if cost > s.cost_cap * (1 + 1e-9) + 1e-9:
                return None
        objective = float(latencies.max())
        x_round = np.zeros(2 * mu * tau + mu + 1)
        x_round[: mu * tau] = alloc.reshape(-1)
        x_round[mu * tau : 2 * mu * tau] = support.astype(float).reshape(-1)
        x_round[2 * mu * tau : 2 * mu * tau + mu] = quanta
        x_round[-1] = objective
        return objective, x_round


def _fractionality(x: np.ndarray, idx: np.ndarray, tol: float):
    """(best index, distance from integer) of the most fractional entry, or None."""
    if idx.size == 0:
        return None
    vals = x[idx]
    frac = np.abs(vals - np.round(vals))
    worst = int(np.argmax(frac))
    if frac[worst] <= tol:
        return None
    return int(idx[worst]), float(frac[worst])


def solve_milp(program: MixedIntegerProgram, options: SolveOptions = SolveOptions()) -> MilpSolution:
    """Branch-and-bound minimization of a mixed integer linear program."""
    compiled = _compile(program)
    if program.structure is not None:
        node_solver = _PartitionNodeSolver(program.structure, compiled)
    else:
        node_solver = _GenericNodeSolver(compiled)

    deadline = time.monotonic() + options.time_limit_s
    tol = options.integrality_tol
    gap_tol = options.relative_gap_tol

    incumbent_x: Optional[np.ndarray] = None
    incumbent_obj = INF
    nodes_explored = 0
    limit_hit = False
    unbounded = False

    heap: list[tuple[float, int, dict]] = []
    seq = 0
    heapq.heappush(heap, (-INF, seq, {}))
    final_bound = -INF

    def relative_gap(best_bound: float) -> float:
        if incumbent_obj == INF:
            return INF
        if best_bound == -INF:
            return INF
        return (incumbent_obj - best_bound) / max(abs(incumbent_obj), 1e-12)

    while heap:
        if nodes_explored >= options.node_limit or time.monotonic() > deadline:
            limit_hit = True
            final_bound = heap[0][0]
            break
        bound, _, overrides = heapq.heappop(heap)
        final_bound = bound
        if relative_gap(bound) <= gap_tol:
            break

        status, objective, x = node_solver.solve(overrides, deadline)
        nodes_explored += 1
        if status == "infeasible":
            continue
        if status == "unbounded":
            unbounded = True
            break
        if status == "limit-hit":
            limit_hit = True
            break
        node_bound = objective
        if incumbent_obj < INF and incumbent_obj - node_bound <= gap_tol * max(
            abs(incumbent_obj), 1e-12
        ):
            continue

        candidate = node_solver.rounding_candidate(x)
        if candidate is not None and candidate[0] < incumbent_obj - 1e-12:
            incumbent_obj, incumbent_x = candidate[0], candidate[1]

        pick_binary = _fractionality(x, compiled.binary_idx, tol)
        pick_integer = None if pick_binary else _fractionality(x, compiled.integer_idx, tol)
        if pick_binary is None and pick_integer is None:
            # Integral relaxation: the node is solved outright.
            if node_bound < incumbent_obj - 1e-12:
                incumbent_obj, incumbent_x = node_bound, _snap_integral(
                    x, compiled.binary_idx, compiled.integer_idx
                )
            continue

        if pick_binary is not None:
            var = pick_binary[0]
            children = [(var, (0.0, 0.0)), (var, (1.0, 1.0))]
        else:
            var = pick_integer[0]
            value = x[var]
            children = [
                (var, (-INF, math.floor(value))),
                (var, (math.ceil(value), INF)),
            ]
        for var, bounds in children:
            child = dict(overrides)
            prev = child.get(var)
            if prev is not None:
                bounds = (max(prev[0], bounds[0]), min(prev[1], bounds[1]))
            child[var] = bounds
            seq += 1
            heapq.heappush(heap, (node_bound, seq, child))

    if unbounded:
        return MilpSolution({}, -INF, "unbounded", INF, nodes_explored)

    if not heap and not limit_hit:
        final_bound = incumbent_obj

    if incumbent_x is None:
        if limit_hit:
            return MilpSolution({}, INF, "limit-hit", INF, nodes_explored, final_bound)
        return MilpSolution({}, INF, "infeasible", INF, nodes_explored)

    final_bound = min(final_bound, incumbent_obj)
    gap = max(relative_gap(final_bound), 0.0)
    if not heap and not limit_hit:
        gap = 0.0
    status = "optimal" if gap <= gap_tol else "feasible-gap"
    values = {name: float(v) for name, v in zip(compiled.names, incumbent_x)}
    return MilpSolution(
        values=values,
        objective_value=float(incumbent_obj),
        status=status,
        gap=float(gap),
        nodes_explored=nodes_explored,
        best_bound=float(final_bound),
    )


def _snap_integral(x: np.ndarray, binary_idx: np.ndarray, integer_idx: np.ndarray) -> np.ndarray:
    snapped = x.copy()
    for idx in (binary_idx, integer_idx):
        if idx.size:
            snapped[idx] = np.round(snapped[idx])
    return snapped


def extract_plan(solution: MilpSolution, cluster: ClusterModel) -> PartitionPlan:
    """Rebuild a plan from solver allocation values.

    Entries below the allocation epsilon snap to zero, columns renormalize,
    and all billing quantities re-derive from the model; the rebuilt makespan
    may not exceed the solver objective by more than 1e-6.
    """
    if solution.status not in ("optimal", "feasible-gap"):
        raise NoSolutionError(f"no-solution: solver status is {solution.status!r}")
    mu, tau = cluster.n_platforms, cluster.n_tasks
    entries = np.zeros((mu, tau))
    for i in range(mu):
        for j in range(tau):
            entries[i, j] = solution.values[alloc_var(i, j)]
    entries = np.clip(entries, 0.0, 1.0)
    sums = entries.sum(axis=0)
    if np.any(sums <= 0):
        raise ValidationError("column-sum-violation: solver allocation has an empty task column")
    entries /= sums
    plan = plan_from_allocation(cluster, AllocationMatrix(entries))
    if plan.makespan_s > solution.objective_value + 1e-6:
        raise ValidationError(
            "extracted plan makespan exceeds solver objective: "
            f"{plan.makespan_s!r} > {solution.objective_value!r} + 1e-6"
        )
    return plan

"""Mixed-integer program container plus the partitioning problem builder.

The builder turns a cluster into the linear encoding of the min-makespan
partitioning problem: continuous share variables, binary per-(platform, task)
support indicators that carry setup time, integer billed-quantum counters,
and an epigraph variable for the makespan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

from ..errors import ValidationError
from ..models import ClusterModel

Integrality = Literal["continuous", "binary", "integer"]
Sense = Literal["<=", "=", ">="]

INFINITY = float("inf")


@dataclass(frozen=True)
class VariableSpec:
    name: str
    lower: float = 0.0
    upper: float = INFINITY
    integrality: Integrality = "continuous"

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValidationError(f"variable {self.name!r}: lower > upper")
        if self.integrality == "binary" and (self.lower < 0 or self.upper > 1):
            raise ValidationError(f"binary variable {self.name!r} must have bounds within [0, 1]")


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: Mapping[str, float]
    sense: Sense
    rhs: float
    name: str = ""

    def __post_init__(self) -> None:
        if not any(v != 0 for v in self.coefficients.values()):
            raise ValidationError(f"constraint {self.name!r} has no nonzero coefficient")


@dataclass(frozen=True)
class PartitionStructure:
    """Index bookkeeping for programs produced by :func:`build_milp`.

    Solvers can exploit this to work on an equivalent reduced form; programs
    assembled by hand simply lack it and take the generic path.
    """

    n_platforms: int
    n_tasks: int
    scaled_beta: np.ndarray
    gamma: np.ndarray
    quanta: np.ndarray
    prices: np.ndarray
    cost_cap: Optional[float]
    quanta_upper: np.ndarray
    makespan_upper: float


@dataclass(frozen=True)
class MixedIntegerProgram:
    """Minimization program over named variables with linear constraints."""

    variables: tuple[VariableSpec, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: Mapping[str, float]
    structure: Optional[PartitionStructure] = None

    def __post_init__(self) -> None:
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError("variable names must be unique")
        declared = set(names)
        for constraint in self.constraints:
            for name in constraint.coefficients:
                if name not in declared:
                    raise ValidationError(
                        f"constraint {constraint.name!r} references undeclared variable {name!r}"
                    )
        for name in self.objective:
            if name not in declared:
                raise ValidationError(f"objective references undeclared variable {name!r}")

    @property
    def variable_index(self) -> dict[str, int]:
        return {v.name: k for k, v in enumerate(self.variables)}

    def evaluate_constraints(self, values: Mapping[str, float]) -> list[float]:
        """Signed violation of each constraint at a point (<= 0 means satisfied).

        For equalities the violation is the absolute residual.
        """
        violations = []
        for constraint in self.constraints:
            lhs = sum(coef * values[name] for name, coef in constraint.coefficients.items())
            if constraint.sense == "<=":
                violations.append(lhs - constraint.rhs)
            elif constraint.sense == ">=":
                violations.append(constraint.rhs - lhs)
            else:
                violations.append(abs(lhs - constraint.rhs))
        return violations

    def to_lp_format(self) -> str:
        """Serialize in CPLEX LP text format for cross-checking with other solvers."""
        lines = ["Minimize", " obj: " + _lp_expr(self.objective), "Subject To"]
        for k, constraint in enumerate(self.constraints):
            label = constraint.name or f"c{k}"
            op = {"<=": "<=", ">=": ">=", "=": "="}[constraint.sense]
            lines.append(f" {label}: {_lp_expr(constraint.coefficients)} {op} {constraint.rhs!r}")
        lines.append("Bounds")
        for v in self.variables:
            lo = "-inf" if v.lower == -INFINITY else repr(v.lower)
            hi = "+inf" if v.upper == INFINITY else repr(v.upper)
            lines.append(f" {lo} <= {v.name} <= {hi}")
        binaries = [v.name for v in self.variables if v.integrality == "binary"]
        generals = [v.name for v in self.variables if v.integrality == "integer"]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        if generals:
            lines.append("Generals")
            lines.append(" " + " ".join(generals))
        lines.append("End")
        return "\n".join(lines) + "\n"


def _lp_expr(coefficients: Mapping[str, float]) -> str:
    parts = []
    for name, coef in coefficients.items():
        if coef == 0:
            continue
        sign = "-" if coef < 0 else ("+" if parts else "")
        parts.append(f"{sign} {abs(coef)!r} {name}".strip())
    return " ".join(parts) if parts else "0"


@dataclass(frozen=True)
class SolveOptions:
    integrality_tol: float = 1e-6
    relative_gap_tol: float = 1e-4
    time_limit_s: float = 60.0
    node_limit: int = 100_000

    def __post_init__(self) -> None:
        for name in ("integrality_tol", "relative_gap_tol", "time_limit_s"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        if self.node_limit < 1:
            raise ValidationError("node_limit must be >= 1")


@dataclass(frozen=True)
class MilpSolution:
    values: dict[str, float]
    objective_value: float
    status: Literal["optimal", "feasible-gap", "infeasible", "unbounded", "limit-hit"]
    gap: float
    nodes_explored: int
    best_bound: float = -INFINITY


def alloc_var(i: int, j: int) -> str:
    return f"alloc_{i}_{j}"


def support_var(i: int, j: int) -> str:
    return f"supp_{i}_{j}"


def quanta_var(i: int) -> str:
    return f"quanta_{i}"


MAKESPAN_VAR = "makespan"


def build_milp(cluster: ClusterModel, cost_cap: Optional[float] = None) -> MixedIntegerProgram:
    """Encode the min-makespan partitioning problem for a cluster.

    Variables: one continuous share in [0, 1] and one binary support flag per
    (platform, task) pair, one integer quantum counter per platform, and the
    makespan epigraph variable. Constraints: each task's shares sum to one,
    each platform's latency stays below the makespan, shares imply support,
    and billed quanta cover latency. With a cost cap the quantum counters are
    additionally priced against the cap; without one the counters are inert
    (billing is re-derived from the allocation downstream), so the quantum
    cover rows and the budget row are both omitted.
    """
    if cost_cap is not None and cost_cap < 0:
        raise ValidationError("invalid-cost-cap: cost_cap must be >= 0")

    mu, tau = cluster.n_platforms, cluster.n_tasks
    scaled_beta = cluster.scaled_beta
    gamma = cluster.gamma
    quanta = cluster.quanta
    prices = cluster.prices

    per_platform_total = scaled_beta.sum(axis=1) + gamma.sum(axis=1)
    quanta_upper = np.array(
        [math.ceil(per_platform_total[i] / quanta[i]) for i in range(mu)], dtype=float
    )
    makespan_upper = float(per_platform_total.max())

    variables: list[VariableSpec] = []
    for i in range(mu):
        for j in range(tau):
            variables.append(VariableSpec(alloc_var(i, j), 0.0, 1.0, "continuous"))
    for i in range(mu):
        for j in range(tau):
            variables.append(VariableSpec(support_var(i, j), 0.0, 1.0, "binary"))
    for i in range(mu):
        variables.append(VariableSpec(quanta_var(i), 0.0, quanta_upper[i], "integer"))
    variables.append(VariableSpec(MAKESPAN_VAR, 0.0, makespan_upper, "continuous"))

    constraints: list[LinearConstraint] = []
    for j in range(tau):
        constraints.append(
            LinearConstraint(
                {alloc_var(i, j): 1.0 for i in range(mu)}, "=", 1.0, name=f"assign_{j}"
            )
        )
    for i in range(mu):
        coeffs = {alloc_var(i, j): float(scaled_beta[i, j]) for j in range(tau)}
        for j in range(tau):
            if gamma[i, j] != 0.0:
                coeffs[support_var(i, j)] = float(gamma[i, j])
        coeffs[MAKESPAN_VAR] = -1.0
        constraints.append(LinearConstraint(coeffs, "<=", 0.0, name=f"latency_{i}"))
    for i in range(mu):
        for j in range(tau):
            constraints.append(
                LinearConstraint(
                    {alloc_var(i, j): 1.0, support_var(i, j): -1.0},
                    "<=",
                    0.0,
                    name=f"link_{i}_{j}",
                )
            )
    if cost_cap is not None:
        for i in range(mu):
            coeffs = {alloc_var(i, j): float(scaled_beta[i, j]) for j in range(tau)}
            for j in range(tau):
                if gamma[i, j] != 0.0:
                    coeffs[support_var(i, j)] = float(gamma[i, j])
            coeffs[quanta_var(i)] = -float(quanta[i])
            constraints.append(LinearConstraint(coeffs, "<=", 0.0, name=f"billing_{i}"))
        constraints.append(
            LinearConstraint(
                {quanta_var(i): float(prices[i]) for i in range(mu)},
                "<=",
                float(cost_cap),
                name="budget",
            )
        )

    structure = PartitionStructure(
        n_platforms=mu,
        n_tasks=tau,
        scaled_beta=scaled_beta,
        gamma=gamma,
        quanta=quanta,
        prices=prices,
        cost_cap=None if cost_cap is None else float(cost_cap),
        quanta_upper=quanta_upper,
        makespan_upper=makespan_upper,
    )
    return MixedIntegerProgram(
        variables=tuple(variables),
        constraints=tuple(constraints),
        objective={MAKESPAN_VAR: 1.0},
        structure=structure,
    )

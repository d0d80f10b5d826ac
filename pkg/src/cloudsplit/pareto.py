"""Latency-cost trade-off curves: cost bounds, constraint sweep, dominance filter.

The optimizing sweep solves one capped program per cost level between the
bounds; the heuristic sweep evaluates the weighted partitioners. Both curves
share the identical lowest-cost point by construction: all work on the
single platform that finishes the workload cheapest.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import InfeasibleError, ValidationError
from .heuristic import SweepWeight, cheapest_single_platform, inverse_makespan_split, weighted_sweep
from .milp import SolveOptions, build_milp, extract_plan, solve_milp
from .models import ClusterModel, PartitionPlan

Method = Literal["milp", "heuristic"]


@dataclass(frozen=True)
class ParetoPoint:
    cost: float
    makespan_s: float
    plan: PartitionPlan
    method: Method
    solver_gap: float = 0.0

    def __post_init__(self) -> None:
        if self.cost != self.plan.total_cost or self.makespan_s != self.plan.makespan_s:
            raise ValidationError("pareto point must mirror its plan's cost and makespan")


@dataclass(frozen=True)
class SweepDiagnostic:
    """Raw per-step record kept alongside the filtered curve."""

    index: int
    parameter: float  # cost cap (milp) or weight (heuristic)
    status: str
    gap: float
    cost: Optional[float]
    makespan_s: Optional[float]


@dataclass(frozen=True)
class TradeoffCurve:
    points: tuple[ParetoPoint, ...]
    cluster_digest: str
    diagnostics: tuple[SweepDiagnostic, ...] = ()

    def __post_init__(self) -> None:
        if len(self.points) == 0:
            raise ValidationError("trade-off curve must be nonempty")
        costs = [p.cost for p in self.points]
        spans = [p.makespan_s for p in self.points]
        if any(b <= a for a, b in zip(costs, costs[1:])):
            raise ValidationError("curve costs must be strictly increasing")
        if any(b >= a for a, b in zip(spans, spans[1:])):
            raise ValidationError("curve makespans must be strictly decreasing")


def pareto_filter(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Drop weakly dominated points; keep the first of exact duplicates.

    A point is dominated when another has cost <= and makespan <= with at
    least one strict inequality. The survivors come back sorted by cost.
    """
    kept: list[ParetoPoint] = []
    seen: set[tuple[float, float]] = set()
    for k, p in enumerate(points):
        key = (p.cost, p.makespan_s)
        if key in seen:
            continue
        dominated = False
        for q_idx, q in enumerate(points):
            if q_idx == k:
                continue
            if q.cost <= p.cost and q.makespan_s <= p.makespan_s and (
                q.cost < p.cost or q.makespan_s < p.makespan_s
            ):
                dominated = True
                break
        if not dominated:
            kept.append(p)
            seen.add(key)
    kept.sort(key=lambda p: p.cost)
    return kept


def cost_bounds(
    cluster: ClusterModel,
    method: Method = "milp",
    options: SolveOptions = SolveOptions(),
) -> tuple[float, float]:
    """(lowest, highest) spend worth sweeping between.

    The low end is the cheapest single platform for either method. The high
    end is what the uncapped latency optimum costs (milp) or what the
    inverse-latency split costs (heuristic).
    """
    low = cheapest_single_platform(cluster).total_cost
    if method == "heuristic":
        high = inverse_makespan_split(cluster).total_cost
    else:
        plan, _ = _solve_capped(cluster, None, options)
        if plan is None:
            raise InfeasibleError("uncapped solve produced no plan")
        high = plan.total_cost
    return low, max(low, high)


def _solve_capped(
    cluster: ClusterModel, cap: Optional[float], options: SolveOptions
):
    program = build_milp(cluster, cap)
    solution = solve_milp(program, options)
    if solution.status in ("optimal", "feasible-gap"):
        return extract_plan(solution, cluster), solution
    return None, solution


def epsilon_sweep(
    cluster: ClusterModel,
    point_count: int = 10,
    options: SolveOptions = SolveOptions(),
    *,
    max_workers: Optional[int] = None,
) -> TradeoffCurve:
    """Trade-off curve from capped solves at evenly spaced cost levels.

    The lowest level is anchored to the cheapest-single-platform plan (the
    same plan the heuristic curve starts from); the highest reuses the
    uncapped latency optimum that defined the upper bound. Infeasible levels
    are dropped from the curve but kept in the diagnostics.
    """
    if point_count < 2:
        raise ValidationError("point_count must be >= 2")

    anchor = cheapest_single_platform(cluster)
    top_plan, top_solution = _solve_capped(cluster, None, options)
    if top_plan is None:
        raise InfeasibleError(f"uncapped solve failed with status {top_solution.status!r}")
    low, high = anchor.total_cost, max(anchor.total_cost, top_plan.total_cost)

    caps = [low + k * (high - low) / (point_count - 1) for k in range(point_count)]
    inner = list(enumerate(caps))[1:-1]

    def run(item):
        k, cap = item
        plan, solution = _solve_capped(cluster, cap, options)
        return k, cap, plan, solution

    if max_workers is None:
        max_workers = min(max(len(inner), 1), os.cpu_count() or 1)
    if inner and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            solved = list(pool.map(run, inner))
    else:
        solved = [run(item) for item in inner]

    raw_points: list[ParetoPoint] = [
        ParetoPoint(anchor.total_cost, anchor.makespan_s, anchor, "milp", 0.0)
    ]
    diagnostics: list[SweepDiagnostic] = [
        SweepDiagnostic(0, low, "anchor", 0.0, anchor.total_cost, anchor.makespan_s)
    ]
    for k, cap, plan, solution in solved:
        if plan is None:
            diagnostics.append(SweepDiagnostic(k, cap, solution.status, solution.gap, None, None))
            continue
        raw_points.append(
            ParetoPoint(plan.total_cost, plan.makespan_s, plan, "milp", solution.gap)
        )
        diagnostics.append(
            SweepDiagnostic(k, cap, solution.status, solution.gap, plan.total_cost, plan.makespan_s)
        )
    raw_points.append(
        ParetoPoint(top_plan.total_cost, top_plan.makespan_s, top_plan, "milp", top_solution.gap)
    )
    diagnostics.append(
        SweepDiagnostic(
            point_count - 1,
            high,
            top_solution.status,
            top_solution.gap,
            top_plan.total_cost,
            top_plan.makespan_s,
        )
    )

    filtered = pareto_filter(raw_points)
    if not filtered:
        raise InfeasibleError("all sweep points infeasible; model inconsistency")
    return TradeoffCurve(tuple(filtered), cluster.digest(), tuple(diagnostics))


def heuristic_sweep(cluster: ClusterModel, point_count: int = 10) -> TradeoffCurve:
    """Trade-off curve from the weighted heuristic plus both bound plans."""
    if point_count < 2:
        raise ValidationError("point_count must be >= 2")
    weights = [SweepWeight(k / (point_count - 1)) for k in range(point_count)]
    plans = weighted_sweep(cluster, weights)
    plans.append(inverse_makespan_split(cluster))
    plans.append(cheapest_single_platform(cluster))

    raw_points = [
        ParetoPoint(p.total_cost, p.makespan_s, p, "heuristic", 0.0) for p in plans
    ]
    diagnostics = tuple(
        SweepDiagnostic(k, w.w, "evaluated", 0.0, p.total_cost, p.makespan_s)
        for k, (w, p) in enumerate(zip(weights, plans))
    )
    filtered = pareto_filter(raw_points)
    return TradeoffCurve(tuple(filtered), cluster.digest(), diagnostics)

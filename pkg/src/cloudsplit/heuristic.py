"""Common-sense baseline partitioners.

These deliberately reason only about absolute full-workload latency and cost
per platform. They ignore quantum granularity and per-task setup overheads,
which is exactly the blind spot the optimizing solver exploits; do not "fix"
that here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .models import AllocationMatrix, ClusterModel, PartitionPlan, plan_from_allocation


@dataclass(frozen=True)
class SweepWeight:
    """Interpolation knob: 0 is pure latency focus, 1 is pure cost focus."""

    w: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError("sweep weight must lie in [0, 1]")


def _full_workload_costs(cluster: ClusterModel) -> np.ndarray:
    latencies = cluster.full_workload_latencies()
    quanta = np.ceil(latencies / cluster.quanta)
    return quanta * cluster.prices


def cheapest_single_platform(cluster: ClusterModel) -> PartitionPlan:
    """All tasks on the platform that runs the whole workload cheapest.

    Ties break toward lower latency, then lower platform index.
    """
    latencies = cluster.full_workload_latencies()
    costs = _full_workload_costs(cluster)
    order = sorted(range(cluster.n_platforms), key=lambda i: (costs[i], latencies[i], i))
    winner = order[0]
    entries = np.zeros((cluster.n_platforms, cluster.n_tasks))
    entries[winner, :] = 1.0
    return plan_from_allocation(cluster, AllocationMatrix(entries))


def inverse_makespan_split(cluster: ClusterModel) -> PartitionPlan:
    """Split every task across platforms inversely to their solo latencies."""
    latencies = cluster.full_workload_latencies()
    if np.any(latencies <= 0):
        raise ValidationError("zero-makespan: a platform has zero full-workload latency")
    weights = 1.0 / latencies
    shares = weights / weights.sum()
    entries = np.tile(shares[:, None], (1, cluster.n_tasks))
    return plan_from_allocation(cluster, AllocationMatrix(entries))


def weighted_sweep(
    cluster: ClusterModel, weights: Sequence[SweepWeight]
) -> list[PartitionPlan]:
    """One plan per weight, scoring platforms on normalized latency and cost.

    Each platform's score blends its min-max normalized full-workload cost
    (weight w) and latency (weight 1 - w); tasks are split in proportion to
    one minus the score, over the platforms that score strictly below one.
    The endpoints are pinned: w = 0 is the inverse-latency split and w = 1 is
    the cheapest single platform, so the sweep lands exactly on both bounds.
    """
    if len(weights) == 0:
        raise ValidationError("empty-weights: need at least one sweep weight")
    latencies = cluster.full_workload_latencies()
    costs = _full_workload_costs(cluster)
    norm_latency = _min_max(latencies)
    norm_cost = _min_max(costs)

    plans = []
    for weight in weights:
        w = weight.w
        if w == 0.0:
            plans.append(inverse_makespan_split(cluster))
            continue
        if w == 1.0:
            plans.append(cheapest_single_platform(cluster))
            continue
        scores = w * norm_cost + (1.0 - w) * norm_latency
        mask = scores < 1.0
        if not mask.any():
            best = int(np.argmin(scores))
            shares = np.zeros(cluster.n_platforms)
            shares[best] = 1.0
        else:
            raw = np.where(mask, 1.0 - scores, 0.0)
            shares = raw / raw.sum()
        entries = np.tile(shares[:, None], (1, cluster.n_tasks))
        plans.append(plan_from_allocation(cluster, AllocationMatrix(entries)))
    return plans


def _min_max(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)

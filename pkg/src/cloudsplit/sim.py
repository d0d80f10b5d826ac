"""Replay plans against perturbed platform behavior.

The simulator integerizes fractional shares into whole work units, perturbs
the latency coefficients multiplicatively (relative noise keeps them
positive and mirrors how prediction error is measured), and re-bills the
realized latencies quantum by quantum. Noise draws come from a Philox
generator keyed by the seed, with normals clipped at three sigma, so every
run is deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .models import AllocationMatrix, ClusterModel, PartitionPlan, Workload


@dataclass(frozen=True)
class NoiseSpec:
    beta_rel_sigma: float = 0.0
    gamma_rel_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.beta_rel_sigma < 0 or self.gamma_rel_sigma < 0:
            raise ValidationError("noise sigmas must be >= 0")


@dataclass(frozen=True)
class SimResult:
    realized_platform_latency_s: np.ndarray
    realized_makespan_s: float
    realized_cost: float
    predicted_makespan_s: float
    relative_makespan_error: float

    def to_dict(self) -> dict:
        return {
            "realized_platform_latency_s": self.realized_platform_latency_s.tolist(),
            "realized_makespan_s": self.realized_makespan_s,
            "realized_cost": self.realized_cost,
            "predicted_makespan_s": self.predicted_makespan_s,
            "relative_makespan_error": self.relative_makespan_error,
        }


def integerize_allocation(allocation: AllocationMatrix, workload: Workload) -> np.ndarray:
    """Whole work units per (platform, task); columns sum exactly to each task's work.

    Entries round half-to-even, then the platform holding the largest share
    of each task absorbs the rounding residual (ties to the lower index).
    """
    entries = allocation.entries
    work = workload.work_units
    scaled = entries * work[None, :]
    units = np.rint(scaled)
    for j in range(entries.shape[1]):
        residual = int(work[j]) - int(units[:, j].sum())
        if residual != 0:
            absorber = int(np.argmax(entries[:, j]))
            units[absorber, j] += residual
    units = units.astype(np.int64)
    if np.any(units < 0):
        raise ValidationError("integerization produced a negative unit count")
    return units


def simulate(plan: PartitionPlan, cluster: ClusterModel, noise: NoiseSpec) -> SimResult:
    """Run a plan's integerized shares under perturbed coefficients and re-bill.

    Setup time is charged once per (platform, task) pair holding any whole
    units; execution on a platform is sequential over its shares.
    """
    mu, tau = cluster.n_platforms, cluster.n_tasks
    if plan.allocation.shape != (mu, tau):
        raise ValidationError(
            f"dimension-mismatch: plan is {plan.allocation.shape}, "
            f"cluster needs {(mu, tau)}"
        )
    gen = np.random.Generator(np.random.Philox(noise.seed))
    beta_eps = np.clip(gen.standard_normal((mu, tau)), -3.0, 3.0) * noise.beta_rel_sigma
    gamma_eps = np.clip(gen.standard_normal((mu, tau)), -3.0, 3.0) * noise.gamma_rel_sigma
    beta = cluster.beta * (1.0 + beta_eps)
    gamma = cluster.gamma * (1.0 + gamma_eps)

    units = integerize_allocation(plan.allocation, cluster.workload)
    run_mask = units > 0
    latencies = (beta * units).sum(axis=1) + (gamma * run_mask).sum(axis=1)
    makespan = float(latencies.max())

    cost = 0.0
    quanta = cluster.quanta
    prices = cluster.prices
    for i in range(mu):
        if latencies[i] > 0:
            cost += math.ceil(latencies[i] / quanta[i]) * prices[i]

    predicted = plan.makespan_s
    rel_error = abs(makespan - predicted) / makespan if makespan > 0 else 0.0
    latencies = latencies.copy()
    latencies.setflags(write=False)
    return SimResult(
        realized_platform_latency_s=latencies,
        realized_makespan_s=makespan,
        realized_cost=float(cost),
        predicted_makespan_s=float(predicted),
        relative_makespan_error=float(rel_error),
    )


def integerization_error_bound(cluster: ClusterModel) -> float:
    """Worst-case makespan drift from rounding shares to whole units.

    Each task's share on a platform moves by at most half a unit, except the
    residual absorber which can move by up to half a unit per platform.
    """
    beta = cluster.beta
    per_platform = 0.5 * beta.sum(axis=1) + 0.5 * cluster.n_platforms * beta.max(axis=1)
    return float(per_platform.max())

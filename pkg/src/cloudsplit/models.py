"""Latency, cost and rate models plus the cluster/allocation/plan data types.

All coefficient matrices are stored platform-major: row i is a platform,
column j is a task. Every type is immutable after construction and safe to
share between threads; the operations here are pure functions.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

# Allocation entries below this are treated as zero support, so setup time is
# not charged for numerically-zero shares left behind by an LP solve.
ALLOCATION_EPSILON = 1e-6

# Tolerance on allocation column sums.
COLUMN_SUM_TOLERANCE = 1e-9

SECONDS_PER_HOUR = 3600.0

CLUSTER_SCHEMA = "cloudsplit/cluster/v1"
PLAN_SCHEMA = "cloudsplit/plan/v1"


def _frozen_array(values: Any, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Task:
    """One divisible atomic task; ``work`` counts its parallel units."""

    id: str
    work: int

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("task id must be a non-empty string")
        if self.work < 0 or self.work != int(self.work):
            raise ValidationError(f"task {self.id!r}: work must be a nonnegative integer")


@dataclass(frozen=True)
class Workload:
    """Ordered collection of tasks with distinct ids."""

    tasks: tuple[Task, ...]

    def __init__(self, tasks: Iterable[Task]):
        object.__setattr__(self, "tasks", tuple(tasks))
        if len(self.tasks) < 1:
            raise ValidationError("workload must contain at least one task")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValidationError("task ids must be distinct within a workload")

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def work_units(self) -> np.ndarray:
        return _frozen_array([t.work for t in self.tasks])


@dataclass(frozen=True)
class Platform:
    """A rentable platform billed in whole time quanta.

    ``price_per_quantum`` is normalized at ingestion; catalogs quoting
    per-hour prices are converted by :func:`cluster_from_dict`.
    """

    id: str
    quantum_s: float
    price_per_quantum: float

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("platform id must be a non-empty string")
        if not self.quantum_s > 0:
            raise ValidationError(f"platform {self.id!r}: quantum_s must be > 0")
        if self.price_per_quantum < 0:
            raise ValidationError(f"platform {self.id!r}: price_per_quantum must be >= 0")


@dataclass(frozen=True)
class LatencyCoefficients:
    """Per-(platform, task) linear latency model coefficients.

    ``beta[i, j]`` is seconds per work unit of task j on platform i and
    ``gamma[i, j]`` the one-off setup seconds charged when platform i runs
    any share of task j.
    """

    beta: np.ndarray
    gamma: np.ndarray

    def __init__(self, beta: Any, gamma: Any):
        beta = _frozen_array(beta)
        gamma = _frozen_array(gamma)
        if beta.ndim != 2 or gamma.ndim != 2:
            raise ValidationError("beta and gamma must be 2-d matrices")
        if beta.shape != gamma.shape:
            raise ValidationError(
                f"beta shape {beta.shape} does not match gamma shape {gamma.shape}"
            )
        if not np.all(beta > 0):
            raise ValidationError("all beta entries must be > 0")
        if not np.all(gamma >= 0):
            raise ValidationError("all gamma entries must be >= 0")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def shape(self) -> tuple[int, int]:
        return self.beta.shape


@dataclass(frozen=True)
class ClusterModel:
    """Platforms plus workload plus fitted latency coefficients."""

    platforms: tuple[Platform, ...]
    workload: Workload
    coeffs: LatencyCoefficients

    def __init__(self, platforms: Iterable[Platform], workload: Workload, coeffs: LatencyCoefficients):
        object.__setattr__(self, "platforms", tuple(platforms))
        object.__setattr__(self, "workload", workload)
        object.__setattr__(self, "coeffs", coeffs)
        if len(self.platforms) < 1:
            raise ValidationError("cluster must contain at least one platform")
        pids = [p.id for p in self.platforms]
        if len(set(pids)) != len(pids):
            raise ValidationError("platform ids must be distinct")
        expected = (len(self.platforms), len(self.workload))
        if coeffs.shape != expected:
            raise ValidationError(
                f"coefficient matrices have shape {coeffs.shape}, expected {expected}"
            )

    @property
    def n_platforms(self) -> int:
        return len(self.platforms)

    @property
    def n_tasks(self) -> int:
        return len(self.workload)

    @property
    def beta(self) -> np.ndarray:
        return self.coeffs.beta

    @property
    def gamma(self) -> np.ndarray:
        return self.coeffs.gamma

    @property
    def work(self) -> np.ndarray:
        return self.workload.work_units

    @property
    def scaled_beta(self) -> np.ndarray:
        """beta[i, j] * work[j]: seconds for platform i to absorb all of task j."""
        return self.beta * self.work[np.newaxis, :]

    @property
    def quanta(self) -> np.ndarray:
        return _frozen_array([p.quantum_s for p in self.platforms])

    @property
    def prices(self) -> np.ndarray:
        return _frozen_array([p.price_per_quantum for p in self.platforms])

    def full_workload_latencies(self) -> np.ndarray:
        """Latency of the entire workload run alone on each platform."""
        return self.scaled_beta.sum(axis=1) + self.gamma.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "schema": CLUSTER_SCHEMA,
            "platforms": [
                {
                    "id": p.id,
                    "quantum_s": p.quantum_s,
                    "price": p.price_per_quantum,
                    "price_unit": "per_quantum",
                }
                for p in self.platforms
            ],
            "tasks": [{"id": t.id, "work": t.work} for t in self.workload.tasks],
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
        }

    def digest(self) -> str:
        """Stable content hash, used to tie outputs back to their input model."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RateInputs:
    """Inputs for deriving a per-quantum rate from ownership costs.

    ``tco_per_period`` and ``profit_margin`` are currency per billing period
    ``period_s``; ``relative_performance`` scales the base rate by how the
    device compares to its peers.
    """

    tco_per_period: float
    profit_margin: float
    quantum_s: float
    period_s: float
    relative_performance: float

    def __post_init__(self) -> None:
        if not self.period_s > 0:
            raise ValidationError("invalid-period: period_s must be > 0")
        if not self.quantum_s > 0:
            raise ValidationError("invalid-quantum: quantum_s must be > 0")
        if not self.relative_performance > 0:
            raise ValidationError("invalid-rdp: relative_performance must be > 0")
        if self.tco_per_period < 0:
            raise ValidationError("invalid-tco: tco_per_period must be >= 0")


@dataclass(frozen=True)
class AllocationMatrix:
    """Fractional task-to-platform assignment; each column sums to one."""

    entries: np.ndarray

    def __init__(self, entries: Any):
        arr = _frozen_array(entries)
        if arr.ndim != 2:
            raise ValidationError("allocation must be a 2-d matrix")
        if np.any(arr < -COLUMN_SUM_TOLERANCE) or np.any(arr > 1 + COLUMN_SUM_TOLERANCE):
            raise ValidationError("allocation entries must lie in [0, 1]")
        sums = arr.sum(axis=0)
        bad = np.abs(sums - 1.0) > COLUMN_SUM_TOLERANCE
        if np.any(bad):
            j = int(np.argmax(bad))
            raise ValidationError(
                f"column-sum-violation: task column {j} sums to {sums[j]!r}, expected 1"
            )
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class PartitionPlan:
    """An allocation together with every derived billing quantity."""

    allocation: AllocationMatrix
    support: np.ndarray
    platform_latency_s: np.ndarray
    makespan_s: float
    billed_quanta: np.ndarray
    total_cost: float

    def to_dict(self) -> dict:
        return {
            "schema": PLAN_SCHEMA,
            "allocation": self.allocation.entries.tolist(),
            "support": self.support.astype(int).tolist(),
            "platform_latency_s": self.platform_latency_s.tolist(),
            "makespan_s": self.makespan_s,
            "billed_quanta": self.billed_quanta.astype(int).tolist(),
            "total_cost": self.total_cost,
        }

    @staticmethod
    def from_dict(payload: Mapping[str, Any], cluster: ClusterModel) -> "PartitionPlan":
        schema = payload.get("schema", PLAN_SCHEMA)
        if schema != PLAN_SCHEMA:
            raise ValidationError(f"schema mismatch: expected {PLAN_SCHEMA}, got {schema!r}")
        return plan_from_allocation(cluster, AllocationMatrix(payload["allocation"]))


def predict_latency(beta: float, gamma: float, work: float) -> float:
    """Predicted seconds to run ``work`` units: beta * work + gamma."""
    if not beta > 0:
        raise ValidationError("invalid-coefficient: beta must be > 0")
    if gamma < 0:
        raise ValidationError("invalid-coefficient: gamma must be >= 0")
    if work < 0:
        raise ValidationError("work must be >= 0")
    return beta * work + gamma


def predict_cost(latency_s: float, platform: Platform) -> float:
    """Billed cost of a run: every started quantum is charged in full."""
    if latency_s < 0:
        raise ValidationError("latency_s must be >= 0")
    if latency_s == 0:
        return 0.0
    quanta = math.ceil(latency_s / platform.quantum_s)
    return quanta * platform.price_per_quantum


def compute_rate(inputs: RateInputs) -> float:
    """Per-quantum rate from ownership cost, margin and relative performance.

    The base rate is (TCO + margin) scaled by the quantum-to-period ratio;
    the result is that base rate scaled by the device's performance relative
    to its peers.
    """
    base = (inputs.tco_per_period + inputs.profit_margin) * (
        inputs.quantum_s / inputs.period_s
    )
    return base * inputs.relative_performance


def plan_from_allocation(cluster: ClusterModel, allocation: AllocationMatrix) -> PartitionPlan:
    """Derive latencies, makespan, billed quanta and total cost for an allocation.

    Entries below ``ALLOCATION_EPSILON`` are snapped to zero and the affected
    columns renormalized before anything is derived, so LP round-off never
    charges setup time for a numerically-zero share.
    """
    if allocation.shape != (cluster.n_platforms, cluster.n_tasks):
        raise ValidationError(
            f"dimension-mismatch: allocation is {allocation.shape}, "
            f"cluster needs {(cluster.n_platforms, cluster.n_tasks)}"
        )
    entries = allocation.entries.copy()
    tiny = (entries != 0.0) & (entries < ALLOCATION_EPSILON)
    entries[entries < ALLOCATION_EPSILON] = 0.0
    for j in np.nonzero(tiny.any(axis=0))[0]:
        col_sum = entries[:, j].sum()
        if col_sum <= 0:
            raise ValidationError(
                f"column-sum-violation: task column {j} has no support above epsilon"
            )
        entries[:, j] /= col_sum

    support = entries > 0
    latencies = (cluster.scaled_beta * entries).sum(axis=1) + (
        cluster.gamma * support
    ).sum(axis=1)
    makespan = float(latencies.max())

    quanta_counts = np.zeros(cluster.n_platforms, dtype=np.int64)
    any_support = support.any(axis=1)
    quanta = cluster.quanta
    for i in np.nonzero(any_support)[0]:
        quanta_counts[i] = math.ceil(latencies[i] / quanta[i])
    total_cost = float((quanta_counts * cluster.prices).sum())

    return PartitionPlan(
        allocation=AllocationMatrix(entries),
        support=_frozen_array(support, dtype=bool),
        platform_latency_s=_frozen_array(latencies),
        makespan_s=makespan,
        billed_quanta=_frozen_array(quanta_counts, dtype=np.int64),
        total_cost=total_cost,
    )


def cluster_from_dict(payload: Mapping[str, Any]) -> ClusterModel:
    """Build a ClusterModel from the documented JSON layout.

    Prices quoted ``per_hour`` are converted to per-quantum at load time so
    everything downstream multiplies quantum counts by price directly.
    """
    schema = payload.get("schema", CLUSTER_SCHEMA)
    if schema != CLUSTER_SCHEMA:
        raise ValidationError(f"schema mismatch: expected {CLUSTER_SCHEMA}, got {schema!r}")
    try:
        raw_platforms = payload["platforms"]
        raw_tasks = payload["tasks"]
        beta = payload["beta"]
        gamma = payload["gamma"]
    except KeyError as exc:
        raise ValidationError(f"cluster document missing key {exc.args[0]!r}") from None

    platforms = []
    for entry in raw_platforms:
        unit = entry.get("price_unit", "per_quantum")
        price = float(entry["price"])
        quantum_s = float(entry["quantum_s"])
        if unit == "per_hour":
            price = price * quantum_s / SECONDS_PER_HOUR
        elif unit != "per_quantum":
            raise ValidationError(f"unknown price_unit {unit!r}")
        platforms.append(Platform(id=entry["id"], quantum_s=quantum_s, price_per_quantum=price))

    workload = Workload(Task(id=t["id"], work=int(t["work"])) for t in raw_tasks)
    return ClusterModel(platforms, workload, LatencyCoefficients(beta, gamma))


def cluster_from_json(text: str) -> ClusterModel:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"cluster document is not valid JSON: {exc}") from None
    return cluster_from_dict(payload)

"""cloudsplit: partition divisible workloads across pay-per-quantum platforms.

The package splits a workload of independent, divisible tasks across
heterogeneous rentable compute platforms and maps out the trade-off between
how fast the workload finishes and what the rental bill comes to, using both
an exact mixed-integer formulation and quick baseline heuristics, with model
fitting and a replay simulator to validate plans.
"""

__version__ = "0.1.0"

from .models import (
    AllocationMatrix,
    ClusterModel,
    LatencyCoefficients,
    PartitionPlan,
    Platform,
    RateInputs,
    Task,
    Workload,
    cluster_from_dict,
    cluster_from_json,
    compute_rate,
    plan_from_allocation,
    predict_cost,
    predict_latency,
)

__all__ = [
    "AllocationMatrix",
    "ClusterModel",
    "LatencyCoefficients",
    "PartitionPlan",
    "Platform",
    "RateInputs",
    "Task",
    "Workload",
    "__version__",
    "cluster_from_dict",
    "cluster_from_json",
    "compute_rate",
    "plan_from_allocation",
    "predict_cost",
    "predict_latency",
]

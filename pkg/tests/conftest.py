from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cloudsplit.models import (
    ClusterModel,
    LatencyCoefficients,
    Platform,
    Task,
    Workload,
)


def build_cluster(beta, gamma, work, quanta, prices):
    """Cluster from plain nested lists, ids auto-assigned."""
    beta = np.asarray(beta, dtype=float)
    platforms = [
        Platform(id=f"p{i}", quantum_s=float(quanta[i]), price_per_quantum=float(prices[i]))
        for i in range(beta.shape[0])
    ]
    tasks = [Task(id=f"t{j}", work=int(work[j])) for j in range(beta.shape[1])]
    return ClusterModel(platforms, Workload(tasks), LatencyCoefficients(beta, gamma))


@pytest.fixture
def two_by_two():
    return build_cluster(
        beta=[[1e-3, 2e-3], [2.5e-3, 1e-3]],
        gamma=[[2.0, 3.0], [0.5, 1.0]],
        work=[10_000, 20_000],
        quanta=[60.0, 30.0],
        prices=[0.5, 0.3],
    )

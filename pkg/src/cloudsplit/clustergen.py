"""Synthetic cluster fabrication.

Platforms are drawn from archetypes shaped like real rentable hardware:
fast but expensive with a coarse billing quantum, slow and cheap with a fine
quantum, and high-throughput devices that pay a heavy per-task setup price.
The adversarial preset stacks setup overheads and coarse quanta so that
partitioners which ignore them leave a lot on the table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .models import ClusterModel, LatencyCoefficients, Platform, Task, Workload


@dataclass(frozen=True)
class Archetype:
    name: str
    beta: float  # seconds per work unit
    gamma: float  # setup seconds per (platform, task)
    quantum_s: float
    price_per_quantum: float


ARCHETYPES = (
    Archetype("fast-coarse", 2.0e-6, 30.0, 3600.0, 2.00),
    Archetype("cheap-fine", 2.0e-5, 2.0, 60.0, 0.012),
    Archetype("overhead-heavy", 4.0e-6, 240.0, 600.0, 0.20),
    Archetype("balanced", 1.0e-5, 10.0, 900.0, 0.16),
)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def random_cluster(
    n_platforms: int,
    n_tasks: int,
    seed: int,
    *,
    work_range: tuple[float, float] = (1.0e6, 3.0e7),
    gamma_scale: float = 1.0,
    zero_gamma: bool = False,
) -> ClusterModel:
    """Cluster with archetype-derived platforms and log-uniform work sizes."""
    if n_platforms < 1 or n_tasks < 1:
        raise ValidationError("need at least one platform and one task")
    gen = _rng(seed)
    platforms = []
    betas = np.zeros((n_platforms, n_tasks))
    gammas = np.zeros((n_platforms, n_tasks))
    for i in range(n_platforms):
        arch = ARCHETYPES[int(gen.integers(len(ARCHETYPES)))]
        beta_i = arch.beta * float(gen.uniform(0.7, 1.4))
        gamma_i = arch.gamma * gamma_scale * float(gen.uniform(0.7, 1.4))
        platforms.append(
            Platform(
                id=f"{arch.name}-{i}",
                quantum_s=arch.quantum_s,
                price_per_quantum=arch.price_per_quantum * float(gen.uniform(0.85, 1.2)),
            )
        )
        betas[i] = beta_i * gen.uniform(0.8, 1.25, size=n_tasks)
        if not zero_gamma:
            gammas[i] = gamma_i * gen.uniform(0.6, 1.5, size=n_tasks)

    lo, hi = work_range
    work = np.exp(gen.uniform(np.log(lo), np.log(hi), size=n_tasks))
    tasks = [Task(id=f"task{j:03d}", work=int(round(w))) for j, w in enumerate(work)]
    return ClusterModel(platforms, Workload(tasks), LatencyCoefficients(betas, gammas))


def adversarial_cluster(seed: int = 0, *, n_platforms: int = 6, n_tasks: int = 16) -> ClusterModel:
    """Cluster built to punish partitioners that ignore setup time and quanta.

    A couple of very fast devices carry heavy per-task setup costs and coarse
    billing quanta; a couple of modest fine-quantum devices are cheap to dip
    into. Spreading every task across everything pays the setup bill many
    times over and rounds up a quantum on every platform.
    """
    gen = _rng(seed)
    platforms = []
    betas = np.zeros((n_platforms, n_tasks))
    gammas = np.zeros((n_platforms, n_tasks))
    for i in range(n_platforms):
        kind = i % 3
        if kind == 0:  # fast, heavy setup, coarse quantum, pricey
            beta_i, gamma_i, quantum, price = 1.5e-6, 900.0, 3600.0, 2.4
        elif kind == 1:  # modest speed, tiny setup, fine quantum, cheap
            beta_i, gamma_i, quantum, price = 1.2e-5, 1.0, 60.0, 0.011
        else:  # quick but steep setup on a mid quantum
            beta_i, gamma_i, quantum, price = 3.0e-6, 600.0, 900.0, 0.45
        jitter = float(gen.uniform(0.9, 1.15))
        platforms.append(
            Platform(id=f"adv{i}", quantum_s=quantum, price_per_quantum=price * jitter)
        )
        betas[i] = beta_i * jitter * gen.uniform(0.9, 1.2, size=n_tasks)
        gammas[i] = gamma_i * gen.uniform(0.8, 1.3, size=n_tasks)

    work = np.exp(gen.uniform(np.log(2.0e7), np.log(9.0e7), size=n_tasks))
    tasks = [Task(id=f"task{j:03d}", work=int(round(w))) for j, w in enumerate(work)]
    return ClusterModel(platforms, Workload(tasks), LatencyCoefficients(betas, gammas))


def demo_cluster(
    n_platforms: int = 16, n_tasks: int = 128, seed: int = 7
) -> ClusterModel:
    """Large mixed cluster for smoke runs; setup overheads stay mild."""
    return random_cluster(
        n_platforms,
        n_tasks,
        seed,
        work_range=(5.0e6, 8.0e7),
        gamma_scale=0.2,
    )


def make_cluster(archetype: str, n_platforms: int, n_tasks: int, seed: int) -> ClusterModel:
    if archetype == "mixed":
        return random_cluster(n_platforms, n_tasks, seed)
    if archetype == "adversarial":
        return adversarial_cluster(seed, n_platforms=n_platforms, n_tasks=n_tasks)
    if archetype == "demo":
        return demo_cluster(n_platforms, n_tasks, seed)
    raise ValidationError(f"unknown archetype {archetype!r}")

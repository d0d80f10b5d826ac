"""Benchmark-driven latency model fitting and a Monte Carlo pricing workload.

The fit weights each sample by 1 / latency^2, which minimizes relative rather
than absolute error; benchmark latencies span orders of magnitude, so an
unweighted fit would be dominated by the largest runs.

Random generation uses numpy's Philox counter-based bit generator, seeded
explicitly everywhere, so every number in this module reproduces bit-for-bit
for a fixed seed within one release.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateDesignError,
    InsufficientSamplesError,
    NonpositiveSlopeError,
    ValidationError,
)
from .models import Task, Workload

_MC_CHUNK = 1 << 20


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class BenchmarkSample:
    """One measured (work, latency) point."""

    work: int
    latency_s: float

    def __post_init__(self) -> None:
        if self.work < 0:
            raise ValidationError("work must be >= 0")
        if not self.latency_s > 0:
            raise ValidationError("latency_s must be > 0")


@dataclass(frozen=True)
class FitResult:
    beta: float
    gamma: float
    max_relative_error: float
    sample_count: int
    warnings: tuple[str, ...] = ()

    def predict(self, work: float) -> float:
        return self.beta * work + self.gamma


@dataclass(frozen=True)
class ErrorReport:
    """Relative prediction errors of a fit against a holdout set."""

    per_sample: tuple[float, ...]
    mean: float
    max: float


@dataclass(frozen=True)
class McOption:
    """European call under geometric Brownian motion."""

    spot: float
    strike: float
    rate: float
    volatility: float
    maturity: float

    def __post_init__(self) -> None:
        if not self.spot > 0:
            raise ValidationError("spot must be > 0")
        if not self.strike > 0:
            raise ValidationError("strike must be > 0")
        if not self.volatility > 0:
            raise ValidationError("volatility must be > 0")
        if not self.maturity > 0:
            raise ValidationError("maturity must be > 0")


def fit_latency_model(samples: Sequence[BenchmarkSample]) -> FitResult:
    """Weighted least squares fit of latency = beta * work + gamma.

    Weights are 1 / latency^2. A slightly negative intercept is clamped to
    zero (with the slope refitted through the origin) and flagged with a
    warning rather than rejected; tiny negative intercepts are routine noise
    artifacts at small work values.
    """
    if len(samples) < 2:
        raise InsufficientSamplesError("insufficient-samples: need at least 2 samples")
    work = np.array([s.work for s in samples], dtype=float)
    latency = np.array([s.latency_s for s in samples], dtype=float)
    if np.unique(work).size < 2:
        raise DegenerateDesignError("degenerate-design: need at least 2 distinct work values")

    sqrt_w = 1.0 / latency
    design = np.column_stack([work * sqrt_w, sqrt_w])
    target = latency * sqrt_w
    (beta, gamma), *_ = np.linalg.lstsq(design, target, rcond=None)

    warnings: tuple[str, ...] = ()
    if gamma < 0:
        w = sqrt_w**2
        beta = float((w * work * latency).sum() / (w * work * work).sum())
        gamma = 0.0
        warnings = ("negative intercept clamped to 0; slope refitted through origin",)
    beta = float(beta)
    gamma = float(gamma)
    if beta <= 0:
        raise NonpositiveSlopeError(f"nonpositive-slope: fitted beta = {beta!r}")

    predicted = beta * work + gamma
    max_rel = float(np.max(np.abs(predicted - latency) / latency))
    return FitResult(
        beta=beta,
        gamma=gamma,
        max_relative_error=max_rel,
        sample_count=len(samples),
        warnings=warnings,
    )


def prediction_error(fit: FitResult, holdout: Sequence[BenchmarkSample]) -> ErrorReport:
    """Per-sample |predicted - observed| / observed over a holdout set."""
    if len(holdout) == 0:
        raise ValidationError("empty-holdout: need at least one holdout sample")
    errors = tuple(
        abs(fit.predict(s.work) - s.latency_s) / s.latency_s for s in holdout
    )
    return ErrorReport(per_sample=errors, mean=float(np.mean(errors)), max=float(np.max(errors)))


def mc_price(option: McOption, paths: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of a European call price.

    Terminal prices are drawn under the risk-neutral measure and payoffs
    discounted; the reduction order is fixed (sequential chunks of one
    stream), so results are deterministic per seed.
    """
    if paths < 2:
        raise ValidationError("invalid-paths: need at least 2 paths")
    gen = _rng(seed)
    drift = (option.rate - 0.5 * option.volatility**2) * option.maturity
    diffusion = option.volatility * math.sqrt(option.maturity)
    discount = math.exp(-option.rate * option.maturity)

    total = 0.0
    total_sq = 0.0
    remaining = paths
    while remaining > 0:
        n = min(remaining, _MC_CHUNK)
        z = gen.standard_normal(n)
        payoff = np.maximum(option.spot * np.exp(drift + diffusion * z) - option.strike, 0.0)
        payoff *= discount
        total += float(payoff.sum())
        total_sq += float((payoff * payoff).sum())
        remaining -= n

    mean = total / paths
    variance = max(0.0, (total_sq - paths * mean * mean) / (paths - 1))
    stderr = math.sqrt(variance / paths)
    return mean, stderr


def required_paths(
    option: McOption, target_accuracy: float, pilot_paths: int, seed: int
) -> int:
    """Paths needed so the projected standard error meets ``target_accuracy``.

    Runs a pilot of ``pilot_paths`` and projects via the 1/sqrt(n) law.
    """
    if not target_accuracy > 0:
        raise ValidationError("invalid-target: target_accuracy must be > 0")
    if pilot_paths < 100:
        raise ValidationError("invalid-pilot: pilot_paths must be >= 100")
    _, stderr = mc_price(option, pilot_paths, seed)
    pilot_stddev = stderr * math.sqrt(pilot_paths)
    if pilot_stddev == 0.0:
        return 1
    return max(1, math.ceil((pilot_stddev / target_accuracy) ** 2))


def generate_benchmark_samples(
    beta: float,
    gamma: float,
    *,
    points: int,
    repeats: int = 1,
    work_min: int,
    work_max: int,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> list[BenchmarkSample]:
    """Synthesize benchmark CSV data from a ground-truth line.

    Work values are spaced evenly between ``work_min`` and ``work_max``;
    latencies get multiplicative Gaussian noise of the given sigma.
    """
    if points < 2:
        raise ValidationError("need at least 2 benchmark points")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    if not 0 < work_min <= work_max:
        raise ValidationError("need 0 < work_min <= work_max")
    gen = _rng(seed)
    grid = np.linspace(work_min, work_max, points)
    samples = []
    for n in grid:
        work = int(round(n))
        for _ in range(repeats):
            latency = beta * work + gamma
            if noise_sigma > 0:
                latency *= 1.0 + noise_sigma * float(gen.standard_normal())
            samples.append(BenchmarkSample(work=work, latency_s=max(latency, 1e-12)))
    return samples


def benchmark_work_grid_for_budget(
    beta: float, gamma: float, *, budget_s: float, points: int, repeats: int
) -> tuple[int, int]:
    """Pick (work_min, work_max) with a 10x spread whose total run time fits a budget.

    Solves for the largest grid with work_max = 10 * work_min such that the
    summed true latencies of all points and repeats stay within ``budget_s``.
    """
    if not budget_s > 0:
        raise ValidationError("budget_s must be > 0")
    grid_unit = np.linspace(0.1, 1.0, points)
    # total = repeats * (beta * work_max * sum(grid_unit) + points * gamma)
    spend_on_setup = repeats * points * gamma
    if spend_on_setup >= budget_s:
        raise ValidationError("budget too small for the requested setup overhead")
    work_max = (budget_s / repeats - points * gamma) / (beta * float(grid_unit.sum()))
    work_max = max(work_max, 10.0)
    return int(round(work_max / 10.0)), int(round(work_max))


def generate_option_workload(
    count: int,
    *,
    seed: int,
    target_accuracy: float = 0.001,
    pilot_paths: int = 4096,
) -> tuple[Workload, list[McOption]]:
    """Fabricate a workload of option-pricing tasks sized for a target accuracy.

    Each task's work units are the Monte Carlo path count that a pilot run
    projects is needed to price the option to ``target_accuracy``.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    gen = _rng(seed)
    tasks = []
    options = []
    for k in range(count):
        spot = 100.0 * float(gen.uniform(0.8, 1.2))
        option = McOption(
            spot=spot,
            strike=spot * float(gen.uniform(0.85, 1.15)),
            rate=float(gen.uniform(0.01, 0.06)),
            volatility=float(gen.uniform(0.1, 0.45)),
            maturity=float(gen.uniform(0.25, 2.0)),
        )
        paths = required_paths(option, target_accuracy, pilot_paths, seed=seed * 100003 + k)
        tasks.append(Task(id=f"opt{k:03d}", work=paths))
        options.append(option)
    return Workload(tasks), options

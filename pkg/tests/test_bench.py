from __future__ import annotations

import math

import numpy as np
import pytest

from cloudsplit.bench import (
    BenchmarkSample,
    McOption,
    fit_latency_model,
    generate_benchmark_samples,
    mc_price,
    prediction_error,
    required_paths,
)
from cloudsplit.errors import (
    DegenerateDesignError,
    InsufficientSamplesError,
    ValidationError,
)
from oracles import black_scholes_call, wls_line_fit


def line_samples(beta, gamma, work_values):
    return [BenchmarkSample(int(n), beta * n + gamma) for n in work_values]


class TestFit:
    def test_noiseless_line_recovered(self):
        fit = fit_latency_model(line_samples(2e-6, 1.5, [1e5, 1e6, 1e7]))
        assert fit.beta == pytest.approx(2e-6, rel=1e-12)
        assert fit.gamma == pytest.approx(1.5, rel=1e-12)
        assert fit.max_relative_error < 1e-12

    def test_matches_normal_equations_oracle_under_noise(self):
        gen = np.random.Generator(np.random.Philox(21))
        work = np.linspace(1e5, 2e6, 20)
        latencies = (3e-6 * work + 2.0) * (1.0 + 0.05 * gen.standard_normal(20))
        samples = [BenchmarkSample(int(n), float(l)) for n, l in zip(work, latencies)]
        fit = fit_latency_model(samples)
        beta_ref, gamma_ref = wls_line_fit(work, latencies)
        assert fit.beta == pytest.approx(beta_ref, rel=1e-9)
        assert fit.gamma == pytest.approx(gamma_ref, rel=1e-9)

    def test_single_work_value_is_degenerate(self):
        with pytest.raises(DegenerateDesignError):
            fit_latency_model(line_samples(1e-6, 1.0, [500, 500, 500]))

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            fit_latency_model(line_samples(1e-6, 1.0, [500]))

    def test_negative_intercept_clamped_with_warning(self):
        samples = [
            BenchmarkSample(1000, 0.9e-3 * 1000),
            BenchmarkSample(10_000, 1.05e-3 * 10_000),
            BenchmarkSample(100_000, 1.0e-3 * 100_000),
        ]
        fit = fit_latency_model(samples)
        assert fit.gamma == 0.0
        if fit.warnings:
            assert "clamped" in fit.warnings[0]

    def test_order_invariant(self):
        gen = np.random.Generator(np.random.Philox(3))
        work = np.linspace(1e4, 1e6, 15)
        latencies = (5e-6 * work + 4.0) * (1.0 + 0.03 * gen.standard_normal(15))
        samples = [BenchmarkSample(int(n), float(l)) for n, l in zip(work, latencies)]
        forward = fit_latency_model(samples)
        backward = fit_latency_model(list(reversed(samples)))
        assert forward.beta == pytest.approx(backward.beta, rel=1e-12)
        assert forward.gamma == pytest.approx(backward.gamma, rel=1e-12)


class TestPredictionError:
    def test_perfect_fit_has_zero_error(self):
        samples = line_samples(2e-6, 1.5, [1e5, 1e6, 1e7])
        fit = fit_latency_model(samples)
        report = prediction_error(fit, line_samples(2e-6, 1.5, [5e5, 2e6]))
        assert report.mean <= 1e-12
        assert report.max <= 1e-12

    def test_training_set_self_consistency(self):
        gen = np.random.Generator(np.random.Philox(9))
        work = np.linspace(1e5, 1e6, 12)
        latencies = (2e-6 * work + 3.0) * (1.0 + 0.04 * gen.standard_normal(12))
        samples = [BenchmarkSample(int(n), float(l)) for n, l in zip(work, latencies)]
        fit = fit_latency_model(samples)
        report = prediction_error(fit, samples)
        assert report.max == pytest.approx(fit.max_relative_error, rel=1e-12)

    def test_empty_holdout_rejected(self):
        fit = fit_latency_model(line_samples(2e-6, 1.5, [1e5, 1e6]))
        with pytest.raises(ValidationError, match="empty-holdout"):
            prediction_error(fit, [])

    def test_extrapolation_within_ten_percent(self):
        gen = np.random.Generator(np.random.Philox(33))
        beta, gamma = 2e-6, 5.0
        work = np.linspace(1e5, 1e6, 12)
        noisy = (beta * work + gamma) * (1.0 + 0.05 * gen.standard_normal(12))
        fit = fit_latency_model(
            [BenchmarkSample(int(n), float(l)) for n, l in zip(work, noisy)]
        )
        held_work = np.array([4e6, 7e6, 1e7])
        held = (beta * held_work + gamma) * (1.0 + 0.05 * gen.standard_normal(3))
        report = prediction_error(
            fit, [BenchmarkSample(int(n), float(l)) for n, l in zip(held_work, held)]
        )
        assert report.mean <= 0.10


class TestMcPrice:
    option = McOption(spot=100.0, strike=100.0, rate=0.05, volatility=0.2, maturity=1.0)

    def test_matches_closed_form_within_three_stderr(self):
        estimate, stderr = mc_price(self.option, paths=1_000_000, seed=42)
        reference = black_scholes_call(100.0, 100.0, 0.05, 0.2, 1.0)
        assert reference == pytest.approx(10.4506, abs=1e-4)
        assert abs(estimate - reference) <= 3.0 * stderr

    def test_vanishing_volatility_is_deterministic_payoff(self):
        option = McOption(spot=100.0, strike=50.0, rate=0.0, volatility=1e-9, maturity=1.0)
        estimate, _ = mc_price(option, paths=1000, seed=1)
        assert estimate == pytest.approx(50.0, abs=1e-3)

    def test_same_seed_bit_identical(self):
        one = mc_price(self.option, paths=50_000, seed=7)
        two = mc_price(self.option, paths=50_000, seed=7)
        assert one == two

    def test_stderr_scales_as_inverse_sqrt_paths(self):
        _, base = mc_price(self.option, paths=100_000, seed=5)
        _, quad = mc_price(self.option, paths=400_000, seed=5)
        assert quad == pytest.approx(base / 2.0, rel=0.2)

    def test_path_floor(self):
        with pytest.raises(ValidationError, match="invalid-paths"):
            mc_price(self.option, paths=1, seed=0)


class TestRequiredPaths:
    option = McOption(spot=100.0, strike=100.0, rate=0.05, volatility=0.2, maturity=1.0)

    def test_projection_arithmetic(self):
        # stub the pilot via a nearly deterministic payoff with known spread
        paths = required_paths(self.option, target_accuracy=0.01, pilot_paths=20_000, seed=3)
        _, pilot_stderr = mc_price(self.option, 20_000, 3)
        expected = math.ceil((pilot_stderr * math.sqrt(20_000) / 0.01) ** 2)
        assert paths == expected

    def test_zero_variance_clamps_to_one(self):
        option = McOption(spot=100.0, strike=200.0, rate=0.0, volatility=1e-9, maturity=1.0)
        assert required_paths(option, target_accuracy=0.001, pilot_paths=200, seed=0) == 1

    def test_projected_accuracy_holds(self):
        paths = required_paths(self.option, target_accuracy=0.01, pilot_paths=50_000, seed=11)
        _, stderr = mc_price(self.option, paths=paths, seed=99)
        assert stderr <= 0.012

    def test_monotone_in_target(self):
        loose = required_paths(self.option, target_accuracy=0.1, pilot_paths=10_000, seed=2)
        tight = required_paths(self.option, target_accuracy=0.01, pilot_paths=10_000, seed=2)
        assert tight >= loose

    def test_invalid_target(self):
        with pytest.raises(ValidationError, match="invalid-target"):
            required_paths(self.option, target_accuracy=0.0, pilot_paths=200, seed=0)


class TestSampleGenerator:
    def test_noiseless_samples_lie_on_line(self):
        samples = generate_benchmark_samples(
            2e-6, 1.5, points=5, work_min=100_000, work_max=1_000_000
        )
        for s in samples:
            assert s.latency_s == pytest.approx(2e-6 * s.work + 1.5, rel=1e-12)

    def test_deterministic_per_seed(self):
        kwargs = dict(points=6, work_min=10_000, work_max=90_000, noise_sigma=0.05, seed=4)
        assert generate_benchmark_samples(1e-5, 2.0, **kwargs) == generate_benchmark_samples(
            1e-5, 2.0, **kwargs
        )

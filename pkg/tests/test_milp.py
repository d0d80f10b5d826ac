from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from cloudsplit.errors import NoSolutionError, ValidationError
from cloudsplit.milp import (
    LinearConstraint,
    MixedIntegerProgram,
    SolveOptions,
    VariableSpec,
    alloc_var,
    build_milp,
    extract_plan,
    quanta_var,
    solve_lp_relaxation,
    solve_milp,
    support_var,
)
from cloudsplit.clustergen import random_cluster
from cloudsplit.heuristic import cheapest_single_platform, inverse_makespan_split
from conftest import build_cluster
from oracles import grid_partition_oracle

OPTIONS = SolveOptions()


class TestBuild:
    def test_counts_with_cap(self, two_by_two):
        cluster = random_cluster(2, 3, seed=1)
        program = build_milp(cluster, cost_cap=100.0)
        assert len(program.variables) == 2 * 3 + 2 * 3 + 2 + 1
        assert len(program.constraints) == 3 + 2 + 6 + 2 + 1

    def test_counts_without_cap(self):
        cluster = random_cluster(1, 1, seed=2)
        program = build_milp(cluster, cost_cap=None)
        assert len(program.variables) == 4
        assert len(program.constraints) == 3
        assert not any(c.name == "budget" for c in program.constraints)

    def test_variable_classes_and_bounds(self, two_by_two):
        program = build_milp(two_by_two, cost_cap=50.0)
        by_name = {v.name: v for v in program.variables}
        for i in range(2):
            for j in range(2):
                a = by_name[alloc_var(i, j)]
                assert (a.lower, a.upper, a.integrality) == (0.0, 1.0, "continuous")
                b = by_name[support_var(i, j)]
                assert (b.lower, b.upper, b.integrality) == (0.0, 1.0, "binary")
        totals = two_by_two.scaled_beta.sum(axis=1) + two_by_two.gamma.sum(axis=1)
        for i in range(2):
            d = by_name[quanta_var(i)]
            assert d.integrality == "integer"
            assert d.upper == math.ceil(totals[i] / two_by_two.quanta[i])
        assert by_name["makespan"].upper == pytest.approx(totals.max())

    def test_hand_built_feasible_point_satisfies_all_rows(self, two_by_two):
        cluster = two_by_two
        program = build_milp(cluster, cost_cap=1e9)
        mu, tau = 2, 2
        values = {}
        for i in range(mu):
            for j in range(tau):
                values[alloc_var(i, j)] = 1.0 / mu
                values[support_var(i, j)] = 1.0
        latencies = cluster.scaled_beta.sum(axis=1) / mu + cluster.gamma.sum(axis=1)
        for i in range(mu):
            values[quanta_var(i)] = math.ceil(latencies[i] / cluster.quanta[i])
        values["makespan"] = float(latencies.max())
        violations = program.evaluate_constraints(values)
        assert max(violations) <= 1e-9

    def test_negative_cap_rejected(self, two_by_two):
        with pytest.raises(ValidationError, match="invalid-cost-cap"):
            build_milp(two_by_two, cost_cap=-1.0)

    def test_coefficients_stay_bounded(self):
        cluster = random_cluster(3, 4, seed=9)
        program = build_milp(cluster, cost_cap=10.0)
        limit = max(float(cluster.scaled_beta.max()), float(cluster.quanta.max()), 1.0)
        for constraint in program.constraints:
            for coef in constraint.coefficients.values():
                assert abs(coef) <= limit + 1e-9

    def test_lp_format_sections(self, two_by_two):
        text = build_milp(two_by_two, cost_cap=10.0).to_lp_format()
        for token in ("Minimize", "Subject To", "Bounds", "Binaries", "Generals", "End"):
            assert token in text
        assert "makespan" in text
        assert "budget:" in text


class TestLpRelaxation:
    def test_single_variable(self):
        program = MixedIntegerProgram(
            variables=(VariableSpec("x", 0.0, 10.0),),
            constraints=(LinearConstraint({"x": 1.0}, ">=", 3.0, name="floor"),),
            objective={"x": 1.0},
        )
        solution = solve_lp_relaxation(program)
        assert solution.status == "optimal"
        assert solution.values["x"] == pytest.approx(3.0, abs=1e-9)

    def test_two_variable_box(self):
        program = MixedIntegerProgram(
            variables=(VariableSpec("x"), VariableSpec("y")),
            constraints=(LinearConstraint({"x": 1.0, "y": 1.0}, "<=", 1.0),),
            objective={"x": -1.0, "y": -1.0},
        )
        solution = solve_lp_relaxation(program)
        assert solution.objective_value == pytest.approx(-1.0, abs=1e-9)

    def test_relaxation_of_partition_program_drops_integrality(self, two_by_two):
        program = build_milp(two_by_two, cost_cap=None)
        relax = solve_lp_relaxation(program)
        assert relax.status == "optimal"
        milp = solve_milp(program, OPTIONS)
        assert relax.objective_value <= milp.objective_value + 1e-9


class TestSolveMilp:
    def test_forced_single_allocation(self):
        cluster = build_cluster([[1e-3]], [[2.0]], [1000], [60.0], [0.5])
        solution = solve_milp(build_milp(cluster, None), OPTIONS)
        assert solution.status == "optimal"
        assert solution.values[alloc_var(0, 0)] == pytest.approx(1.0, abs=1e-9)
        assert solution.values[support_var(0, 0)] == 1.0
        assert solution.objective_value == pytest.approx(3.0, abs=1e-9)

    def test_symmetric_platforms_split_evenly(self):
        cluster = build_cluster(
            [[1e-3], [1e-3]], [[0.0], [0.0]], [10_000], [1.0, 1.0], [1.0, 1.0]
        )
        solution = solve_milp(build_milp(cluster, None), OPTIONS)
        assert solution.status == "optimal"
        assert solution.objective_value == pytest.approx(5.0, abs=1e-6)

    def test_generic_integer_program(self):
        # no structure tag: exercises the generic node path against brute force
        program = MixedIntegerProgram(
            variables=(
                VariableSpec("x", 0.0, 10.0, "integer"),
                VariableSpec("y", 0.0, 10.0, "integer"),
            ),
            constraints=(
                LinearConstraint({"x": 6.0, "y": 4.0}, "<=", 24.0),
                LinearConstraint({"x": 1.0, "y": 2.0}, "<=", 6.0),
            ),
            objective={"x": -5.0, "y": -4.0},
        )
        solution = solve_milp(program, OPTIONS)
        best = min(
            -5 * x - 4 * y
            for x in range(11)
            for y in range(11)
            if 6 * x + 4 * y <= 24 and x + 2 * y <= 6
        )
        assert solution.status == "optimal"
        assert solution.objective_value == pytest.approx(best, abs=1e-9)
        assert solution.values["x"] == pytest.approx(round(solution.values["x"]), abs=1e-9)

    def test_generic_binary_knapsack(self):
        values = [5.0, 4.0, 3.0, 6.0, 2.0]
        weights = [4.0, 3.0, 2.0, 5.0, 1.0]
        program = MixedIntegerProgram(
            variables=tuple(VariableSpec(f"b{k}", 0.0, 1.0, "binary") for k in range(5)),
            constraints=(
                LinearConstraint({f"b{k}": weights[k] for k in range(5)}, "<=", 8.0),
            ),
            objective={f"b{k}": -values[k] for k in range(5)},
        )
        solution = solve_milp(program, OPTIONS)
        best = min(
            -sum(v * pick for v, pick in zip(values, picks))
            for picks in itertools.product([0, 1], repeat=5)
            if sum(w * pick for w, pick in zip(weights, picks)) <= 8.0
        )
        assert solution.status == "optimal"
        assert solution.objective_value == pytest.approx(best, abs=1e-9)

    def test_desk_instances_match_grid_oracle(self):
        for seed, (mu, tau), cap_scale in [
            (201, (2, 2), None),
            (202, (2, 3), 1.8),
            (203, (3, 1), 1.4),
        ]:
            cluster = random_cluster(mu, tau, seed=seed, work_range=(1e6, 2e7))
            cap = None
            if cap_scale is not None:
                cap = cheapest_single_platform(cluster).total_cost * cap_scale
            solution = solve_milp(build_milp(cluster, cap), OPTIONS)
            assert solution.status == "optimal"
            oracle = grid_partition_oracle(
                cluster.scaled_beta, cluster.gamma, cluster.quanta, cluster.prices, cap
            )
            # the solver may only beat the gridded search
            assert solution.objective_value <= oracle * (1 + 1e-3)
            slack = float(
                (cluster.scaled_beta.sum(axis=1) * (1 + mu) / 400.0).max()
            )
            assert oracle - solution.objective_value <= max(slack, 1e-3 * oracle)

    def test_solution_integrality_and_feasibility(self, two_by_two):
        cap = cheapest_single_platform(two_by_two).total_cost * 2.0
        program = build_milp(two_by_two, cap)
        solution = solve_milp(program, OPTIONS)
        assert solution.status == "optimal"
        for i in range(2):
            for j in range(2):
                b = solution.values[support_var(i, j)]
                assert min(abs(b), abs(b - 1.0)) <= OPTIONS.integrality_tol
            d = solution.values[quanta_var(i)]
            assert abs(d - round(d)) <= OPTIONS.integrality_tol
        violations = program.evaluate_constraints(solution.values)
        assert max(violations) < 1e-6

    def test_removing_cap_never_increases_optimum(self, two_by_two):
        cheap = cheapest_single_platform(two_by_two).total_cost
        tight = solve_milp(build_milp(two_by_two, cheap), OPTIONS)
        loose = solve_milp(build_milp(two_by_two, cheap * 3), OPTIONS)
        uncapped = solve_milp(build_milp(two_by_two, None), OPTIONS)
        assert loose.objective_value <= tight.objective_value + 1e-9
        assert uncapped.objective_value <= loose.objective_value + 1e-9

    def test_milp_bounded_by_any_feasible_plan(self, two_by_two):
        for plan in (cheapest_single_platform(two_by_two), inverse_makespan_split(two_by_two)):
            solution = solve_milp(build_milp(two_by_two, None), OPTIONS)
            assert solution.objective_value <= plan.makespan_s + 1e-9

    def test_cap_below_one_quantum_infeasible(self, two_by_two):
        cap = 0.5 * float(two_by_two.prices.min())
        solution = solve_milp(build_milp(two_by_two, cap), OPTIONS)
        assert solution.status == "infeasible"

    def test_cap_below_dominant_platform_cost_infeasible(self):
        # platform 0 dominates: fastest and cheapest at once
        cluster = build_cluster(
            [[1e-4], [1e-2]], [[0.0], [0.0]], [100_000], [100.0, 100.0], [0.5, 5.0]
        )
        cheap = cheapest_single_platform(cluster).total_cost
        solution = solve_milp(build_milp(cluster, cheap * 0.9), OPTIONS)
        assert solution.status == "infeasible"

    def test_double_run_identical(self):
        cluster = random_cluster(3, 3, seed=77)
        cap = cheapest_single_platform(cluster).total_cost * 1.5
        one = solve_milp(build_milp(cluster, cap), OPTIONS)
        two = solve_milp(build_milp(cluster, cap), OPTIONS)
        assert one.objective_value == two.objective_value
        assert one.status == two.status
        assert one.nodes_explored == two.nodes_explored
        assert one.values == two.values

    def test_node_limit_reports_gap(self):
        cluster = random_cluster(4, 6, seed=31)
        options = SolveOptions(node_limit=2, time_limit_s=60.0)
        solution = solve_milp(build_milp(cluster, None), options)
        assert solution.status in ("feasible-gap", "optimal")
        if solution.status == "feasible-gap":
            assert solution.gap > 0


class TestExtractPlan:
    def test_snap_and_renormalize(self):
        cluster = build_cluster(
            [[1e-3], [1e-3]], [[1.0], [1.0]], [1000], [60.0, 60.0], [0.5, 0.5]
        )
        solution = solve_milp(build_milp(cluster, None), OPTIONS)
        # emulate a solver answer carrying round-off dust in one column
        values = dict(solution.values)
        values[alloc_var(0, 0)] = 1.0 - 3e-9
        values[alloc_var(1, 0)] = 3e-9
        doctored = type(solution)(
            values=values,
            objective_value=1e-3 * 1000 * (1.0 - 3e-9) + 1.0,
            status="optimal",
            gap=0.0,
            nodes_explored=1,
        )
        plan = extract_plan(doctored, cluster)
        assert plan.allocation.entries[0, 0] == 1.0
        assert plan.allocation.entries[1, 0] == 0.0

    def test_clean_solution_cost_matches_priced_quanta(self, two_by_two):
        cap = cheapest_single_platform(two_by_two).total_cost * 2.0
        solution = solve_milp(build_milp(two_by_two, cap), OPTIONS)
        plan = extract_plan(solution, two_by_two)
        priced = sum(
            solution.values[quanta_var(i)] * two_by_two.prices[i] for i in range(2)
        )
        assert plan.total_cost == pytest.approx(priced, abs=1e-9)

    def test_no_solution_raises(self, two_by_two):
        solution = solve_milp(build_milp(two_by_two, 0.5 * float(two_by_two.prices.min())), OPTIONS)
        with pytest.raises(NoSolutionError, match="no-solution"):
            extract_plan(solution, two_by_two)

    def test_rebuilt_plan_consistent_with_objective(self):
        for seed in (5, 6, 7):
            cluster = random_cluster(3, 2, seed=seed)
            solution = solve_milp(build_milp(cluster, None), OPTIONS)
            plan = extract_plan(solution, cluster)
            assert plan.makespan_s <= solution.objective_value + 1e-6

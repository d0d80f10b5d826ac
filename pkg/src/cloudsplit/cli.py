"""Command-line front end: fit, rate, solve, pareto, simulate, compare, gen.

Every command writes its primary outputs plus a run manifest into --out.
Primary outputs are deterministic for identical inputs and flags; timing
lives only in the manifest. File layouts are documented in docs/formats.md.

Exit codes: 0 success, 1 usage error, 2 input validation error, 3 solver
infeasible or unbounded, 4 solver hit a limit but returned an incumbent.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bench import (
    BenchmarkSample,
    fit_latency_model,
    generate_benchmark_samples,
    prediction_error,
)
from .clustergen import make_cluster
from .errors import InfeasibleError, NoSolutionError, UnboundedError, ValidationError
from .heuristic import SweepWeight, cheapest_single_platform, weighted_sweep
from .milp import SolveOptions, build_milp, extract_plan, solve_milp
from .models import (
    ClusterModel,
    PartitionPlan,
    RateInputs,
    cluster_from_dict,
    compute_rate,
)
from .pareto import TradeoffCurve, epsilon_sweep, heuristic_sweep
from .sim import NoiseSpec, simulate

MANIFEST_SCHEMA = "cloudsplit/manifest/v1"
FIT_SCHEMA = "cloudsplit/fit/v1"
RATE_SCHEMA = "cloudsplit/rate/v1"
SOLVE_SCHEMA = "cloudsplit/solve/v1"
CURVE_SCHEMA = "cloudsplit/curve/v1"
SIM_SCHEMA = "cloudsplit/sim/v1"
COMPARE_SCHEMA = "cloudsplit/compare/v1"

USAGE_ERROR, VALIDATION_ERROR, INFEASIBLE, LIMIT_WITH_INCUMBENT = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _digest_files(paths: Sequence[Path]) -> str:
    h = hashlib.sha256()
    for path in sorted(paths):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_manifest(
    out_dir: Path, command: str, inputs: Sequence[Path], options: dict, started: float
) -> None:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": command,
        "input_digest": _digest_files(inputs),
        "options": {k: v for k, v in sorted(options.items())},
        "tool_version": __version__,
        "wall_time_s": time.monotonic() - started,
    }
    _write_json(out_dir / "manifest.json", manifest)


def _load_cluster(path: Path) -> ClusterModel:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"cluster file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from None
    return cluster_from_dict(payload)


def _read_samples_csv(path: Path) -> list[BenchmarkSample]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"samples file not found: {path}") from None
    samples = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, start=1):
        if not row or (lineno == 1 and row[0].strip().lower() == "work"):
            continue
        if len(row) < 2:
            raise ValidationError(f"malformed-csv: {path} line {lineno}: expected work,latency_s")
        try:
            samples.append(BenchmarkSample(work=int(float(row[0])), latency_s=float(row[1])))
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"malformed-csv: {path} line {lineno}: {exc}") from None
    if not samples:
        raise ValidationError(f"malformed-csv: {path}: no sample rows")
    return samples


def _solve_options(args: argparse.Namespace) -> SolveOptions:
    return SolveOptions(
        time_limit_s=args.time_limit,
        relative_gap_tol=args.gap,
        node_limit=args.node_limit,
    )


def _plan_payload(plan: PartitionPlan, cluster: ClusterModel, solver: dict) -> dict:
    payload = plan.to_dict()
    payload["schema"] = SOLVE_SCHEMA
    payload["cluster_digest"] = cluster.digest()
    payload["solver"] = solver
    return payload


def _curve_rows(curve: TradeoffCurve) -> list[dict]:
    return [
        {"method": p.method, "cost": p.cost, "makespan_s": p.makespan_s, "gap": p.solver_gap}
        for p in curve.points
    ]


def _write_curve_csv(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "cost", "makespan_s", "gap"])
        for row in rows:
            writer.writerow([row["method"], repr(row["cost"]), repr(row["makespan_s"]), repr(row["gap"])])


def cmd_fit(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    samples_path = Path(args.samples_csv)
    samples = _read_samples_csv(samples_path)
    fit = fit_latency_model(samples)
    report = prediction_error(fit, samples)
    payload = {
        "schema": FIT_SCHEMA,
        "beta": fit.beta,
        "gamma": fit.gamma,
        "max_relative_error": fit.max_relative_error,
        "mean_relative_error": report.mean,
        "sample_count": fit.sample_count,
        "warnings": list(fit.warnings),
    }
    _write_json(out_dir / "fit.json", payload)
    _write_manifest(out_dir, "fit", [samples_path], vars(args), started)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_rate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    rate_path = Path(args.rate_json)
    try:
        raw = json.loads(rate_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"rate inputs file not found: {rate_path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{rate_path}: not valid JSON: {exc}") from None
    try:
        inputs = RateInputs(
            tco_per_period=float(raw["tco_per_period"]),
            profit_margin=float(raw["profit_margin"]),
            quantum_s=float(raw["quantum_s"]),
            period_s=float(raw["period_s"]),
            relative_performance=float(raw["relative_performance"]),
        )
    except KeyError as exc:
        raise ValidationError(f"rate inputs missing key {exc.args[0]!r}") from None
    rate = compute_rate(inputs)
    payload = {"schema": RATE_SCHEMA, "price_per_quantum": rate}
    _write_json(out_dir / "rate.json", payload)
    _write_manifest(out_dir, "rate", [rate_path], vars(args), started)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    cluster_path = Path(args.cluster_json)
    cluster = _load_cluster(cluster_path)
    exit_code = 0
    if args.method == "heuristic":
        if args.weight is None:
            plan = cheapest_single_platform(cluster)
        else:
            plan = weighted_sweep(cluster, [SweepWeight(args.weight)])[0]
        solver = {"method": "heuristic", "status": "optimal", "gap": 0.0, "nodes": 0}
    else:
        program = build_milp(cluster, args.cost_cap)
        solution = solve_milp(program, _solve_options(args))
        if solution.status in ("infeasible", "unbounded"):
            print(f"solver status: {solution.status}", file=sys.stderr)
            _write_manifest(out_dir, "solve", [cluster_path], vars(args), started)
            return INFEASIBLE
        if solution.status == "limit-hit":
            print("solver hit limits without an incumbent", file=sys.stderr)
            _write_manifest(out_dir, "solve", [cluster_path], vars(args), started)
            return LIMIT_WITH_INCUMBENT
        plan = extract_plan(solution, cluster)
        solver = {
            "method": "milp",
            "status": solution.status,
            "gap": solution.gap,
            "nodes": solution.nodes_explored,
            "objective": solution.objective_value,
        }
        if solution.status == "feasible-gap":
            exit_code = LIMIT_WITH_INCUMBENT
    payload = _plan_payload(plan, cluster, solver)
    _write_json(out_dir / "plan.json", payload)
    _write_manifest(out_dir, "solve", [cluster_path], vars(args), started)
    print(json.dumps({"makespan_s": plan.makespan_s, "total_cost": plan.total_cost,
                      "status": solver["status"]}, sort_keys=True))
    return exit_code


def _sweep_curves(cluster: ClusterModel, args: argparse.Namespace) -> dict[str, TradeoffCurve]:
    curves: dict[str, TradeoffCurve] = {}
    if args.method in ("milp", "both"):
        curves["milp"] = epsilon_sweep(cluster, args.points, _solve_options(args))
    if args.method in ("heuristic", "both"):
        curves["heuristic"] = heuristic_sweep(cluster, args.points)
    return curves


def cmd_pareto(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    cluster_path = Path(args.cluster_json)
    cluster = _load_cluster(cluster_path)
    curves = _sweep_curves(cluster, args)

    rows: list[dict] = []
    plans: dict[str, list[dict]] = {}
    for method, curve in sorted(curves.items()):
        rows.extend(_curve_rows(curve))
        plans[method] = [p.plan.to_dict() for p in curve.points]
    _write_curve_csv(out_dir / "curve.csv", rows)
    _write_json(
        out_dir / "plans.json",
        {"schema": CURVE_SCHEMA, "cluster_digest": cluster.digest(), "plans": plans},
    )
    _write_manifest(out_dir, "pareto", [cluster_path], vars(args), started)
    print(f"wrote {len(rows)} curve points to {out_dir / 'curve.csv'}")
    return 0


def _pick_row_points(curve: TradeoffCurve) -> dict[str, "ParetoPointLike"]:
    points = curve.points
    middle_index = sorted(d.index for d in curve.diagnostics)[
        (len(curve.diagnostics) - 1) // 2
    ]
    median_diag = next(
        (d for d in curve.diagnostics if d.index == middle_index and d.cost is not None),
        None,
    )
    if median_diag is not None:
        median = min(
            points,
            key=lambda p: (abs(p.cost - median_diag.cost), abs(p.makespan_s - median_diag.makespan_s)),
        )
    else:
        median = points[(len(points) - 1) // 2]
    return {"cheapest": points[0], "median": median, "fastest": points[-1]}


def _ratio(h: float, m: float) -> float:
    if h == m:
        return 1.0
    if m == 0:
        return float("inf")
    return h / m


def cmd_compare(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    cluster_path = Path(args.cluster_json)
    cluster = _load_cluster(cluster_path)
    milp_curve = epsilon_sweep(cluster, args.points, _solve_options(args))
    heuristic_curve = heuristic_sweep(cluster, args.points)
    milp_rows = _pick_row_points(milp_curve)
    heur_rows = _pick_row_points(heuristic_curve)

    # The median row is the point at the middle swept level of each method.
    table = {}
    for label in ("cheapest", "median", "fastest"):
        h, m = heur_rows[label], milp_rows[label]
        table[label] = {
            "heuristic": {"cost": h.cost, "makespan_s": h.makespan_s},
            "milp": {"cost": m.cost, "makespan_s": m.makespan_s},
            "ratio": {
                "cost": _ratio(h.cost, m.cost),
                "makespan_s": _ratio(h.makespan_s, m.makespan_s),
            },
        }
    payload = {"schema": COMPARE_SCHEMA, "cluster_digest": cluster.digest(), "rows": table}
    _write_json(out_dir / "compare.json", payload)
    _write_manifest(out_dir, "compare", [cluster_path], vars(args), started)

    print(f"{'level':<10} {'heur cost':>12} {'heur mk_s':>12} {'milp cost':>12} "
          f"{'milp mk_s':>12} {'cost h/m':>9} {'mk h/m':>9}")
    for label in ("cheapest", "median", "fastest"):
        row = table[label]
        print(
            f"{label:<10} {row['heuristic']['cost']:>12.4f} {row['heuristic']['makespan_s']:>12.1f} "
            f"{row['milp']['cost']:>12.4f} {row['milp']['makespan_s']:>12.1f} "
            f"{row['ratio']['cost']:>9.3f} {row['ratio']['makespan_s']:>9.3f}"
        )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    cluster_path = Path(args.cluster_json)
    plan_path = Path(args.plan)
    cluster = _load_cluster(cluster_path)
    try:
        plan_payload = json.loads(plan_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"plan file not found: {plan_path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{plan_path}: not valid JSON: {exc}") from None
    schema = plan_payload.get("schema", SOLVE_SCHEMA)
    if schema not in (SOLVE_SCHEMA, "cloudsplit/plan/v1"):
        raise ValidationError(f"schema mismatch: expected a plan document, got {schema!r}")
    from .models import AllocationMatrix, plan_from_allocation

    plan = plan_from_allocation(cluster, AllocationMatrix(plan_payload["allocation"]))

    rows = []
    errors = []
    ratios = []
    for k in range(args.seeds):
        seed = args.seed + k
        result = simulate(
            plan, cluster, NoiseSpec(args.noise_beta, args.noise_gamma, seed)
        )
        rows.append(
            (seed, result.realized_makespan_s, result.realized_cost, result.relative_makespan_error)
        )
        errors.append(result.relative_makespan_error)
        ratios.append(result.realized_makespan_s / plan.makespan_s)

    csv_path = out_dir / "sim.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "realized_makespan_s", "realized_cost", "relative_error"])
        for seed, makespan, cost, err in rows:
            writer.writerow([seed, repr(makespan), repr(cost), repr(err)])
    summary = {
        "schema": SIM_SCHEMA,
        "seeds": args.seeds,
        "noise_beta": args.noise_beta,
        "noise_gamma": args.noise_gamma,
        "predicted_makespan_s": plan.makespan_s,
        "mean_relative_error": float(np.mean(errors)),
        "max_relative_error": float(np.max(errors)),
        "mean_realized_over_predicted": float(np.mean(ratios)),
    }
    _write_json(out_dir / "sim_summary.json", summary)
    _write_manifest(out_dir, "simulate", [cluster_path, plan_path], vars(args), started)
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    cluster = make_cluster(args.archetype, args.platforms, args.tasks, args.seed)
    _write_json(out_dir / "cluster.json", cluster.to_dict())
    _write_manifest(out_dir, "gen", [], vars(args), started)
    print(f"wrote {out_dir / 'cluster.json'} ({args.platforms} platforms, {args.tasks} tasks)")
    return 0


def cmd_bench_gen(args: argparse.Namespace) -> int:
    started = time.monotonic()
    out_dir = Path(args.out)
    samples = generate_benchmark_samples(
        args.beta,
        args.gamma,
        points=args.points,
        repeats=args.repeats,
        work_min=args.work_min,
        work_max=args.work_max,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    path = out_dir / "samples.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["work", "latency_s"])
        for s in samples:
            writer.writerow([s.work, repr(s.latency_s)])
    _write_manifest(out_dir, "bench-gen", [], vars(args), started)
    print(f"wrote {len(samples)} samples to {path}")
    return 0


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--time-limit", type=float, default=60.0, help="seconds per solve")
    parser.add_argument("--gap", type=float, default=1e-4, help="relative optimality gap")
    parser.add_argument("--node-limit", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cloudsplit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"cloudsplit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit latency coefficients from a samples CSV")
    p.add_argument("samples_csv")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rate", help="compute a per-quantum rate from ownership inputs")
    p.add_argument("rate_json")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("solve", help="produce one partition plan")
    p.add_argument("cluster_json")
    p.add_argument("--method", choices=["milp", "heuristic"], default="milp")
    p.add_argument("--cost-cap", type=float, default=None)
    p.add_argument("--weight", type=float, default=None, help="heuristic sweep weight in [0,1]")
    p.add_argument("--out", default="out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pareto", help="emit a latency-cost trade-off curve")
    p.add_argument("cluster_json")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--method", choices=["milp", "heuristic", "both"], default="both")
    p.add_argument("--out", default="out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("simulate", help="replay a plan under coefficient noise")
    p.add_argument("cluster_json")
    p.add_argument("--plan", required=True)
    p.add_argument("--noise-beta", type=float, default=0.0)
    p.add_argument("--noise-gamma", type=float, default=0.0)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="three-row heuristic vs milp report")
    p.add_argument("cluster_json")
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--out", default="out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", help="fabricate a synthetic cluster")
    p.add_argument("--platforms", type=int, default=6)
    p.add_argument("--tasks", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--archetype", choices=["mixed", "adversarial", "demo"], default="mixed")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench-gen", help="fabricate benchmark samples CSV")
    p.add_argument("--beta", type=float, default=2e-6)
    p.add_argument("--gamma", type=float, default=1.5)
    p.add_argument("--points", type=int, default=12)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--work-min", type=int, default=100_000)
    p.add_argument("--work-max", type=int, default=1_000_000)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_bench_gen)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_ERROR
    except (InfeasibleError, UnboundedError, NoSolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())

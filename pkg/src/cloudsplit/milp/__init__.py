"""Mixed-integer programming: problem builder, simplex and branch-and-bound."""

from .branch_and_bound import extract_plan, solve_lp_relaxation, solve_milp
from .program import (
    MAKESPAN_VAR,
    LinearConstraint,
    MilpSolution,
    MixedIntegerProgram,
    SolveOptions,
    VariableSpec,
    alloc_var,
    build_milp,
    quanta_var,
    support_var,
)
from .simplex import LpResult, solve_lp

__all__ = [
    "MAKESPAN_VAR",
    "LinearConstraint",
    "LpResult",
    "MilpSolution",
    "MixedIntegerProgram",
    "SolveOptions",
    "VariableSpec",
    "alloc_var",
    "build_milp",
    "extract_plan",
    "quanta_var",
    "solve_lp",
    "solve_lp_relaxation",
    "solve_milp",
    "support_var",
]

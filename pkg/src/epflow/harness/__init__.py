"""Problem set-ups, run orchestration, error analysis and file output."""
from .analysis import convergence_table, error_norms, format_table, reference_solution
from .problems import (PROBLEMS, ProblemConfig, build_problem, load_config, problem_accuracy,
                       problem_piston, problem_wilkins)
from .runner import RunReport, run, run_many

__all__ = [
    "PROBLEMS", "ProblemConfig", "RunReport", "build_problem", "convergence_table", "error_norms",
    "format_table", "load_config", "problem_accuracy", "problem_piston", "problem_wilkins",
    "reference_solution", "run", "run_many",
]

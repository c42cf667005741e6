"""Instance generation, file formats, rate fitting, benchmarks and the CLI."""

from .bench import SUITES, Suite, run_benchmark, sweep
from .generate import InfeasibleSpecError, ProblemSpec, generate
from .io import (Assertion, Report, load_problem, read_matrix, read_trace,
                 write_matrix, write_trace)
from .rates import RateFit, SlopeFit, estimate_rate, slope_fit

__all__ = ["SUITES", "Suite", "run_benchmark", "sweep", "InfeasibleSpecError",
           "ProblemSpec", "generate", "Assertion", "Report", "load_problem",
           "read_matrix", "read_trace", "write_matrix", "write_trace", "RateFit",
           "SlopeFit", "estimate_rate", "slope_fit"]

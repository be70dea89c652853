"""Accelerated high-order convex optimization with restart, continuous-time
dynamics, shipped problems, baselines, and an experiment CLI."""

from .engine import (AcceleratedSolver, CoefficientStrategy, EngineConfig,
                     IndicatorPolicy, ProxyFunction, RunResult, TraceRecord,
                     estimate_h_star, run)
from .errors import AcceloptError, InvalidConfigError
from .oracle import (ObjectiveOracle, SimpleConvexTerm, check_gradient,
                     check_hess_vec, l1_term, zero_term)
from .problems import (SparseDataset, make_l1_least_squares, make_logistic,
                       make_quadratic, parse_libsvm, serialize_libsvm,
                       synthetic_logistic_dataset)
from .restart import (InnerSolverHandle, RestartConfig, epoch_schedule,
                      run_restarted, solver_handle_from_engine,
                      uaf_rate_constants)

__all__ = [
    "AcceleratedSolver", "CoefficientStrategy", "EngineConfig",
    "IndicatorPolicy", "ProxyFunction", "RunResult", "TraceRecord",
    "estimate_h_star", "run", "AcceloptError", "InvalidConfigError",
    "ObjectiveOracle", "SimpleConvexTerm", "check_gradient", "check_hess_vec",
    "l1_term", "zero_term", "SparseDataset", "make_l1_least_squares",
    "make_logistic", "make_quadratic", "parse_libsvm", "serialize_libsvm",
    "synthetic_logistic_dataset", "InnerSolverHandle", "RestartConfig",
    "epoch_schedule", "run_restarted", "solver_handle_from_engine",
    "uaf_rate_constants",
]

__version__ = "0.1.0"

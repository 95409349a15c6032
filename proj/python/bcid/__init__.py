"""Boundary-only coefficient identification for -div(eps grad u) = f."""

from ._core import (
    ConfigurationError,
    ContractViolation,
    DataError,
    Error,
    IngestionError,
    NumericError,
    __version__,
    config_hash,
    fit_loglog,
    fundamental_solution,
    gauss_legendre,
    network_forward,
    problem_names,
    run_checks,
    run_experiment,
    solve_forward,
)

__all__ = [
    "ConfigurationError",
    "ContractViolation",
    "DataError",
    "Error",
    "IngestionError",
    "NumericError",
    "__version__",
    "config_hash",
    "fit_loglog",
    "fundamental_solution",
    "gauss_legendre",
    "network_forward",
    "problem_names",
    "run_checks",
    "run_experiment",
    "solve_forward",
]

"""Finite Gaussian mixture Gibbs samplers (systematic, random and discomfort-informed scans)."""

from ._core import (
    IoError,
    NumericalError,
    UsageError,
    adjusted_rand_index,
    default_m,
    ess,
    generate,
    log_component_density,
    posterior_similarity_matrix,
    run_chain,
    solve_lambda,
    standardize,
    time_to_converge,
    transition_point,
    weight_pair,
)

__all__ = [
    "IoError",
    "NumericalError",
    "UsageError",
    "adjusted_rand_index",
    "default_m",
    "ess",
    "generate",
    "log_component_density",
    "posterior_similarity_matrix",
    "run_chain",
    "solve_lambda",
    "standardize",
    "time_to_converge",
    "transition_point",
    "weight_pair",
]

"""Hyperbolic spin Ruijsenaars-Schneider models on U x SL(N+1) x U."""

from ._spinrs import (
    ConfigError,
    DimensionError,
    Error,
    SingularityError,
    apply_R,
    canonical_config,
    eom_field,
    integrate,
    mdybe_residual,
    run_check,
    simulate_config,
    solve_factorization,
    theta_defect,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "Error",
    "SingularityError",
    "apply_R",
    "canonical_config",
    "eom_field",
    "integrate",
    "mdybe_residual",
    "run_check",
    "simulate_config",
    "solve_factorization",
    "theta_defect",
]

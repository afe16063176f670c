"""Drift filtering with expert opinions and log-utility portfolio values."""

from ._core import (
    ConfigError,
    ExpertSchedule,
    GridSpec,
    MarketModel,
    NumericError,
    PreconditionError,
    Regime,
    bayes_update,
    build_periodic_gamma,
    covariance_path,
    efficiency,
    limit_cycle,
    load_model,
    optimal_strategy,
    run_experiment,
    simulate_log_wealth,
    solve_are,
    value_function,
)

__all__ = [
    "ConfigError",
    "ExpertSchedule",
    "GridSpec",
    "MarketModel",
    "NumericError",
    "PreconditionError",
    "Regime",
    "bayes_update",
    "build_periodic_gamma",
    "covariance_path",
    "efficiency",
    "limit_cycle",
    "load_model",
    "optimal_strategy",
    "run_experiment",
    "simulate_log_wealth",
    "solve_are",
    "value_function",
]

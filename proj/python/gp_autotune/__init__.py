"""Gaussian-process configuration tuning over finite grids."""

from ._core import (
    AutotuneError,
    ConditioningError,
    ConfigError,
    ContractViolation,
    DomainError,
    GpModel,
    InfeasibleDesignError,
    Parameter,
    ScheduleError,
    Space,
    branin,
    dixon2,
    hartmann3,
    kappa,
    learn_hyperparameters,
    lhd_sample,
    merit,
    riemann_zeta,
    rosenbrock,
    snr,
    tune,
)

__all__ = [
    "AutotuneError",
    "ConditioningError",
    "ConfigError",
    "ContractViolation",
    "DomainError",
    "GpModel",
    "InfeasibleDesignError",
    "Parameter",
    "ScheduleError",
    "Space",
    "branin",
    "dixon2",
    "hartmann3",
    "kappa",
    "learn_hyperparameters",
    "lhd_sample",
    "merit",
    "riemann_zeta",
    "rosenbrock",
    "snr",
    "tune",
]

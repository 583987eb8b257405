"""Forward-projecting cyber risk engine with collapse-aware semantics."""

from .core import (
    Attribution,
    CiimOutput,
    Collapse,
    ConfigError,
    DomainError,
    KernelParams,
    PerturbationSources,
    Projection,
    Regime,
    RiskState,
    aggregate_perturbation,
    classify_regime,
    eval_ciim,
    normalize_score,
)

__version__ = "0.1.0"

__all__ = [
    "Attribution",
    "CiimOutput",
    "Collapse",
    "ConfigError",
    "DomainError",
    "KernelParams",
    "PerturbationSources",
    "Projection",
    "Regime",
    "RiskState",
    "aggregate_perturbation",
    "classify_regime",
    "eval_ciim",
    "normalize_score",
    "__version__",
]

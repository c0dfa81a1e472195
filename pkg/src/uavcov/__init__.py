"""Coverage analysis for UAV networks with directional wireless backhaul.

Two engines compute end-user coverage probability for a Poisson field of
cone-antenna UAVs over a Rayleigh-height building grid: a closed-form
analytical engine and a Monte Carlo engine that also simulates the BS
backhaul and per-UAV height optimization.
"""
from .analytic import (
    AnalyticError,
    CoverageResult,
    OptimumHeight,
    QuadratureError,
    conditional_coverage,
    coverage_probability,
    optimum_height,
    serving_distance_density,
)
from .montecarlo import (
    Estimate,
    backhaul_estimate,
    coverage_estimate,
    scenario_estimate,
)
from .params import ConfigError, SystemParams, load_config, validate

__version__ = "0.1.0"

__all__ = [
    "AnalyticError",
    "ConfigError",
    "CoverageResult",
    "Estimate",
    "OptimumHeight",
    "QuadratureError",
    "SystemParams",
    "backhaul_estimate",
    "conditional_coverage",
    "coverage_estimate",
    "coverage_probability",
    "load_config",
    "optimum_height",
    "scenario_estimate",
    "serving_distance_density",
    "validate",
    "__version__",
]

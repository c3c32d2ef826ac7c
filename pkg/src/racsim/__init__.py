"""Simulation and closed-form analysis of reputation-and-audit-bit defenses
(RAC and RACA) for distributed detection under Byzantine attack."""

from .model import (AttackParams, ConfigError, Hypothesis, Population, Role,
                    ScenarioConfig, SensorModel, SensorState, build_population,
                    validate_config)

__all__ = [
    "AttackParams", "ConfigError", "Hypothesis", "Population", "Role",
    "ScenarioConfig", "SensorModel", "SensorState", "build_population",
    "validate_config",
]

__version__ = "0.1.0"

"""Allelopathic two-species competition with a fear effect: equilibria, bifurcations, ODE and reaction-diffusion simulation."""
from .errors import (
    AllelofearError,
    AssumptionViolation,
    ConfigError,
    DivergenceError,
    DomainError,
    IntegrationError,
    KindError,
    NumericalError,
    PreconditionError,
    StiffnessError,
)
from .model import ModelParams, RawParams, State2, cubic, jacobian, kinetics, nondimensionalize, thresholds
from .equilibria import Equilibrium, EquilibriumKind, all_equilibria, boundary_equilibria, interior_equilibria

__version__ = "0.1.0"

__all__ = [
    "AllelofearError", "AssumptionViolation", "ConfigError", "DivergenceError", "DomainError",
    "IntegrationError", "KindError", "NumericalError", "PreconditionError", "StiffnessError",
    "ModelParams", "RawParams", "State2", "cubic", "jacobian", "kinetics", "nondimensionalize", "thresholds",
    "Equilibrium", "EquilibriumKind", "all_equilibria", "boundary_equilibria", "interior_equilibria",
]

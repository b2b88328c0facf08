"""Numerical lab for stability of Jordan *-homomorphisms on finite-dimensional C*-algebras."""

from .algebra import AlgebraShape, Element, element, op_norm, unit, zero
from .config import ExperimentConfig, load_config, parse_config
from .report import StabilityReport
from .runner import run

__all__ = ["AlgebraShape", "Element", "ExperimentConfig", "StabilityReport", "element",
           "load_config", "op_norm", "parse_config", "run", "unit", "zero"]
__version__ = "0.1.0"

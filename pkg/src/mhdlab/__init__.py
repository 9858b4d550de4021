"""Exact solution families of ideal MHD, with a derivative-exact residual oracle."""

from .core import (
    ConstraintError,
    DomainError,
    MhdConfig,
    MhdLabError,
    MhdState,
    SpacetimePoint,
    validate_params,
)
from .mhdcheck import ResidualReport, residual
from .reduced import ReducedProfile, assemble_field, build_family
from .solutions import CLOSED_FORM_IDS, SolutionFamily, make_family

__version__ = "0.1.0"

__all__ = [
    "CLOSED_FORM_IDS",
    "ConstraintError",
    "DomainError",
    "MhdConfig",
    "MhdLabError",
    "MhdState",
    "ReducedProfile",
    "ResidualReport",
    "SolutionFamily",
    "SpacetimePoint",
    "assemble_field",
    "build_family",
    "make_family",
    "residual",
    "validate_params",
]

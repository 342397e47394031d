"""Numerical lab for Schlesinger isomonodromic deformations, the Garnier map and Lauricella F_D."""

from .errors import (
    ConfigError,
    DegreeCollapse,
    DomainError,
    GeometryError,
    IntegrationError,
    IslError,
    PreconditionError,
    RepresentationError,
)
from .fuchsian import FuchsianFamily, MonodromyRep, monodromy, random_family
from .garnier import ThetaParams
from .lauricella import LauricellaParams, fd_value
from .schlesinger import DeformationPath, SchlesingerState, integrate_flow

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegreeCollapse",
    "DeformationPath",
    "DomainError",
    "FuchsianFamily",
    "GeometryError",
    "IntegrationError",
    "IslError",
    "LauricellaParams",
    "MonodromyRep",
    "PreconditionError",
    "RepresentationError",
    "SchlesingerState",
    "ThetaParams",
    "fd_value",
    "integrate_flow",
    "monodromy",
    "random_family",
]

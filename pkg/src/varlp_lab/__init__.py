"""Numerical toolkit for variable-exponent Lebesgue spaces.

Exponent fields and grids live in :mod:`varlp_lab.exponent`; rearrangements
in :mod:`varlp_lab.rearrange`; Luxemburg norms in :mod:`varlp_lab.norms`;
maximal/averaging operators in :mod:`varlp_lab.operators`; condition
checkers in :mod:`varlp_lab.conditions` and their nested-level studies in
:mod:`varlp_lab.studies`.
"""

from ._core import BACKEND
from .conditions import ConditionParams, ConditionReport, Verdict
from .errors import (
    AlignmentError,
    ConvergenceError,
    DomainError,
    FamilyError,
    InvalidExponentError,
    PreconditionError,
    ShapeError,
    VarlpError,
)
from .exponent import Cube, ExponentField, GridFunction, conjugate, discretize
from .norms import luxemburg_norm, modular
from .operators import CubeFamily, averaging, maximal
from .rearrange import RearrangementProfile, profile_at, rearrange

__all__ = [
    "BACKEND",
    "AlignmentError",
    "ConditionParams",
    "ConditionReport",
    "ConvergenceError",
    "Cube",
    "CubeFamily",
    "DomainError",
    "ExponentField",
    "FamilyError",
    "GridFunction",
    "InvalidExponentError",
    "PreconditionError",
    "RearrangementProfile",
    "ShapeError",
    "VarlpError",
    "Verdict",
    "averaging",
    "conjugate",
    "discretize",
    "luxemburg_norm",
    "maximal",
    "modular",
    "profile_at",
    "rearrange",
]

__version__ = "0.1.0"

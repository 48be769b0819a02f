"""Isomorphic Busemann-Petty numerical laboratory"""

from .ballbody import ball_body, klartag_ratio_study, verify_norm_axioms
from .errors import LabError
from .experiments import bp_check, complex_bp_check, hyperplane_study
from .geometry import StarBody
from .measures import DensitySpec
from .quadrature import Estimate, RuleSet

__all__ = [
    "DensitySpec",
    "Estimate",
    "LabError",
    "RuleSet",
    "StarBody",
    "ball_body",
    "bp_check",
    "complex_bp_check",
    "hyperplane_study",
    "klartag_ratio_study",
    "verify_norm_axioms",
]

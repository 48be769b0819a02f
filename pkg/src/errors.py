"""
Error hierarchy for the isomorphic Busemann-Petty laboratory

Every failure raised by the package derives from LabError so that the CLI can
map it to an exit code in one place.
"""

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base exception for laboratory errors"""
    pass


class InputDomainError(LabError):
    """Argument outside the mathematical domain of an operation"""
    pass


class BodyIntegrityError(LabError):
    """Star body oracle produced a non-positive or non-finite radius"""
    pass


class DensityIntegrityError(LabError):
    """Density oracle produced a negative or non-finite value"""
    pass


class ConfigError(LabError):
    """Unsupported rule, method, flag combination or run configuration"""
    pass


class QuadratureError(LabError):
    """Quadrature refinement failed to converge or an oracle failed at a node"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ResolutionError(LabError):
    """Series truncation residual above the requested tolerance"""
    pass


class ConditioningError(LabError):
    """Division by a vanishing transform multiplier"""
    pass


class DegenerateBodyError(LabError):
    """Body carries zero measure under the given density"""
    pass


class BoundViolationError(LabError):
    """An asserted inequality or constant failed numerically"""
    pass

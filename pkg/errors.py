"""
Error Types
===========

Exception hierarchy shared by the kernel, solver and pull-in modules.
"""

from typing import Optional


class HLMAError(Exception):
    """Base class for every error raised by the toolkit."""


class EllipticDomainError(HLMAError, ValueError):
    """Modulus outside the range where K(k) is finite."""


class GeometryError(HLMAError, ValueError):
    """Invalid radii, thickness ratio or orientation."""


class SingularGeometryError(HLMAError):
    """Coincident or touching filaments, or a sample point on a filament."""


class SingularSystemError(HLMAError):
    """Inductance matrix could not be factorized."""

    def __init__(self, message: str, pivot: Optional[int] = None):
        super().__init__(message)
        self.pivot = pivot


class ModelValidityError(HLMAError):
    """Pull-in model used outside its range of validity."""


class NoPullInError(HLMAError):
    """Equilibrium curve has no interior maximum."""


class ScenarioError(HLMAError):
    """Scenario file is missing fields or holds invalid values."""


class GeometryWarning(UserWarning):
    """Geometry accepted but outside the recommended range."""

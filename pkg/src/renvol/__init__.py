"""Numerical workbench for the W-volume and renormalized-volume calculus
of surfaces in hyperbolic 3-space."""

from . import (equidistant, extremize, halfspace, infinity, liouville,
               surfaces, variational, wvolume)
from .errors import (DiscretizationError, FoliationBreakdown, GeometryError,
                     PreconditionError, TransformSingular)

__version__ = "0.1.0"

__all__ = [
    "equidistant", "extremize", "halfspace", "infinity", "liouville",
    "surfaces", "variational", "wvolume",
    "DiscretizationError", "FoliationBreakdown", "GeometryError",
    "PreconditionError", "TransformSingular",
]

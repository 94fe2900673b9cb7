"""Smoothed-analysis laboratory for symmetric random matrices.

Kernels for determinants, minors and inverses, seeded random matrix
ensembles, exact verifiers for the determinant identities behind the
entrywise inverse bound, and Monte Carlo tail checks with exact binomial
confidence bounds.
"""

from smilab.errors import (
    ConfigError,
    ConfigParseError,
    DimensionError,
    DomainError,
    SingularMatrixError,
    UnsupportedFamilyError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "DimensionError",
    "DomainError",
    "SingularMatrixError",
    "UnsupportedFamilyError",
]

"""Flow curvature manifolds of polynomial slow-fast systems.

Exact polynomial algebra (``poly``), a small system language (``sysdsl``),
curvature manifolds and Darboux checks (``curvature``), the
Lorenz-Krishnamurthy variants (``models``) and floating-point experiments
(``numerics``).
"""

from .poly import Poly, RationalFunction, divide_exact, poly_from_document, poly_to_document
from .sysdsl import OdeSystem, ParseError, parse_expression, parse_system, serialize_system
from .curvature import (
    ManifoldEq,
    curvature_manifold,
    darboux_check,
    factor_check,
    flow_jet,
    lie_derivative,
    tlsa_jet,
)

__version__ = "0.1.0"

__all__ = [
    "Poly",
    "RationalFunction",
    "divide_exact",
    "poly_to_document",
    "poly_from_document",
    "OdeSystem",
    "ParseError",
    "parse_expression",
    "parse_system",
    "serialize_system",
    "ManifoldEq",
    "curvature_manifold",
    "darboux_check",
    "factor_check",
    "flow_jet",
    "tlsa_jet",
    "lie_derivative",
    "__version__",
]

"""Exact symbolic verification engine for generalized geometry on frame-presented manifolds.

Everything is computed over the Gaussian rationals: no floats, no tolerances.
Manifolds are presented by a global frame with constant-coefficient structure
equations; functions are opaque symbols carrying jet indices that reduce to a
normal form via the frame commutation rules.
"""

__version__ = "0.1.0"

from .scalars import (
    GRat,
    SymKey,
    Scalar,
    SFrac,
    ConstraintIdeal,
    LieStructure,
    frame_derive,
    parse_scalar,
)

__all__ = [
    "GRat",
    "SymKey",
    "Scalar",
    "SFrac",
    "ConstraintIdeal",
    "LieStructure",
    "frame_derive",
    "parse_scalar",
    "__version__",
]

"""Cake-cutting mechanisms with exact arithmetic and strategy analysis."""

from cakecut.valuation import (
    Allocation,
    Piece,
    Unsatisfiable,
    Valuation,
    ZeroRemainder,
    frac,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Piece",
    "Unsatisfiable",
    "Valuation",
    "ZeroRemainder",
    "frac",
    "__version__",
]

"""Finite-stage constructions of sets avoiding polynomial point configurations."""

from __future__ import annotations

from .polycore import RationalPoly, parse_poly, poly_eval, poly_partial, top_monomial_chain
from .presets import ConfigurationSpec, builtin_preset, catalog

__all__ = [
    "RationalPoly",
    "parse_poly",
    "poly_eval",
    "poly_partial",
    "top_monomial_chain",
    "ConfigurationSpec",
    "builtin_preset",
    "catalog",
]

__version__ = "0.1.0"

"""Numerical renormalization of dissipative gap maps."""

from .diffeo import Diffeo, compose, zoom
from .errors import (
    DomainError,
    GapRenormError,
    NotRenormalizableError,
    NumericError,
    UnrealizableCombinatoricsError,
)
from .gapmap import GapMap, Sign, affine_gap_map, build_gap_map
from .renorm import Combinatorics, renormalize, renormalize_n

__all__ = [
    "Combinatorics",
    "Diffeo",
    "DomainError",
    "GapMap",
    "GapRenormError",
    "NotRenormalizableError",
    "NumericError",
    "Sign",
    "UnrealizableCombinatoricsError",
    "affine_gap_map",
    "build_gap_map",
    "compose",
    "renormalize",
    "renormalize_n",
    "zoom",
]

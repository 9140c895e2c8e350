"""Numerical toolkit for weighted Bergman, Hardy and Fock space problems."""

from .geometry import SpaceParams, Region, TreeNode, DyadicRect
from .symbols import parse_symbol

__version__ = "0.1.0"
__all__ = ["SpaceParams", "Region", "TreeNode", "DyadicRect", "parse_symbol", "__version__"]

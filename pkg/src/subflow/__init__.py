"""Smooth functions, derivations and integral curves on subsets of R^n.

A space is a finite union of constraint pieces (plus isolated points) inside
a fixed R^n; smooth functions on it are restrictions of ambient expressions.
"""

from . import corpus, deriv, expr, flow, space
from .deriv import GlobalDerivation, PointDerivation, Section, TangentPair
from .errors import SubflowError
from .expr import ScalarExpr, parse
from .flow import FlowSettings, flow_map, maximal_curve
from .space import ConstraintPiece, EmbeddedSpace, SmoothFunction, SmoothMap, restrict

__version__ = "0.1.0"

__all__ = [
    "ConstraintPiece", "EmbeddedSpace", "FlowSettings", "GlobalDerivation", "PointDerivation",
    "ScalarExpr", "Section", "SmoothFunction", "SmoothMap", "SubflowError", "TangentPair",
    "corpus", "deriv", "expr", "flow", "flow_map", "maximal_curve", "parse", "restrict", "space",
]

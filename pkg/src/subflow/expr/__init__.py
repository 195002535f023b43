"""Expression language for smooth ambient functions on R^n."""

from .dual import Dual
from .nodes import Bin, Call, Diff, Lit, Neg, Pow, Var
from .scalar import (
    DualValue,
    ScalarExpr,
    compose,
    constant,
    derivative,
    difference,
    dual_evaluate,
    emit,
    evaluate,
    gradient,
    parse,
    partial,
    product,
    total,
    variable,
)

__all__ = [
    "Bin", "Call", "Diff", "Dual", "DualValue", "Lit", "Neg", "Pow", "ScalarExpr", "Var",
    "compose", "constant", "derivative", "difference", "dual_evaluate", "emit",
    "evaluate", "gradient", "parse", "partial", "product", "total", "variable",
]

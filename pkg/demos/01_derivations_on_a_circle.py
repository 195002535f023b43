"""
Derivations on a circle
=======================

A derivation on a subset of R^n is written as sum_i F^i d_i with ambient
coefficients.  On the unit circle the rotation field kills the radius.
"""

import numpy as np

from subflow import EmbeddedSpace, ConstraintPiece, GlobalDerivation, restrict
from subflow.deriv import apply, chain_rule_residual, lie_bracket, value_at
from subflow.expr import parse
from subflow.space import sample

circle = EmbeddedSpace(2, (ConstraintPiece.from_strings(2, ["x1*x1 + x2*x2 - 1"]),), name="circle")
rot = GlobalDerivation(circle, ("-x2", "x1"))

# X(r^2) vanishes identically on the circle
radius = restrict(circle, "x1*x1 + x2*x2")
for x in sample(circle, 4, seed=0):
    print("X(r^2) at", np.round(x, 3), "=", apply(rot, radius)(x))

# the chain rule holds to rounding at every sampled point
F = parse("sin(x1) + x2^2", 2)
fs = [restrict(circle, "x1^2"), restrict(circle, "x1 + x2")]
worst = max(chain_rule_residual(value_at(rot, x), F, fs).relative for x in sample(circle, 50, 1))
print("worst relative chain-rule residual:", worst)

# brackets are computed symbolically
plane = EmbeddedSpace(2, (ConstraintPiece(),), name="plane")
B = lie_bracket(GlobalDerivation(plane, ("0", "x1")), GlobalDerivation(plane, ("x2", "0")))
print("[x1 d2, x2 d1] at (1, 2) =", B.field((1.0, 2.0)))

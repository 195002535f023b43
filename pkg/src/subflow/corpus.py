"""Canonical spaces, fields, maps and expressions used by tests, demos and CLI models.

Every function here is smooth on all of its ambient space, so sweeps never
hit a domain error.
"""

from __future__ import annotations

from .deriv import AtlasEntry, GlobalDerivation
from .space import ConstraintPiece, EmbeddedSpace, SmoothMap, restrict


def _piece(n, eq=(), ineq=()):
    return ConstraintPiece.from_strings(n, eq, ineq)


HALF_LINE = EmbeddedSpace(1, (_piece(1, ineq=["x1"]),), box=((-1.0, 3.0),), name="halfline")
LINE = EmbeddedSpace(1, (_piece(1),), box=((-4.0, 4.0),), name="line")
PLANE = EmbeddedSpace(2, (_piece(2),), name="plane")
CIRCLE = EmbeddedSpace(2, (_piece(2, eq=["x1*x1 + x2*x2 - 1"]),), name="circle")
CROSS = EmbeddedSpace(2, (_piece(2, eq=["x1*x2"]),), name="cross")
L_CORNER = EmbeddedSpace(
    2, (_piece(2, eq=["x2"], ineq=["-x1"]), _piece(2, eq=["x1"], ineq=["-x2"])), name="lcorner"
)

SPACES = {s.name: s for s in (HALF_LINE, CIRCLE, CROSS, L_CORNER)}

# Coefficient fields, written so that each is a derivation of the space it sits on.
FIELDS = {
    "halfline": ["1", "-1", "x1", "x1*x1", "exp(x1) - 1", "sin(x1)"],
    "circle": ["-x2, x1", "x2, -x1", "-x2*cos(x1), x1*cos(x1)", "-x2*exp(x2), x1*exp(x2)",
               "0, 0"],
    "cross": ["x1, x2", "x1*x1, x2", "sin(x1), -x2", "x1*exp(x2), x2*cos(x1)"],
    "lcorner": ["x1, x2", "x1*x1, x2*x2", "-x1, -x2*x2"],
}

FUNCTIONS = {
    "halfline": ["x1", "x1*x1 + 3", "sin(x1)", "exp(-x1)", "sqrt(1 + x1*x1)", "tanh(x1)",
                 "log(2 + x1*x1)"],
    "circle": ["x1", "x2", "x1*x1 + x2*x2", "x1*x2 - 2", "sin(x1) + cos(x2)", "exp(x1)*x2",
               "log(3 + x1)", "tanh(x1 - x2)"],
    "cross": ["x1", "x2", "x1*x1 - x2", "cos(x1 + x2)", "exp(x2)/(2 + x1*x1)",
              "sqrt(4 + x1*x1 + x2*x2)"],
    "lcorner": ["x1 + x2", "x1*x1*x2 + 1", "sin(x1)*cos(x2)", "exp(x1 - x2)", "tanh(x1)"],
}

# Outer functions F: R^k -> R for chain-rule sweeps.
OUTER = {
    1: ["x1", "sin(x1)", "x1^3 - x1", "exp(x1)", "tanh(2*x1)", "sqrt(1 + x1*x1)"],
    2: ["x1*x2", "sin(x1) + x2^2", "x1/(1 + x2*x2)", "exp(x1 - x2)", "cos(x1*x2) + x1"],
    3: ["x1*x2*x3", "x1 + x2*x3", "sin(x1)*x2 - x3^2", "exp(x1)*cos(x2) + tanh(x3)",
        "(x1 - x2)^2 + x3"],
}

# Expressions for AD and round-trip checks; the arity is the largest index used.
EXPRESSIONS = [
    "x1", "-x1", "3.5", "x1 + x2", "x1 - x2 - x3", "x1*x2/x3", "x1^2", "x1^-1.5",
    "(x1 + 1)^3", "2^3^0.5", "-x1^2", "(-x1)^2", "sin(x1)", "cos(x1*x2)", "exp(-x1*x1)",
    "log(1 + x1*x1)", "sqrt(2 + sin(x1))", "tanh(x1 - x2)", "x1*exp(x2)/(1 + x3*x3)",
    "sin(cos(exp(x1/4)))", "-(x1 - x2)*(x1 + x2)", "x1^0.5 + log(x2)", "1/(x1*x1 + x2*x2)",
]


def derivation(space: str, index: int = 0) -> GlobalDerivation:
    S = SPACES[space]
    return GlobalDerivation(S, tuple(c.strip() for c in FIELDS[space][index].split(",")))


def functions(space: str):
    S = SPACES[space]
    return [restrict(S, e) for e in FUNCTIONS[space]]


ROTATION = GlobalDerivation(CIRCLE, ("-x2", "x1"))

ROTATION_ATLAS = GlobalDerivation(
    CIRCLE,
    ("-x2", "x1"),
    (
        AtlasEntry(_piece(2, ineq=["x1"]), ("-x2", "x1")),
        AtlasEntry(
            _piece(2, ineq=["-x1"]),
            ("-x2 + 5*(x1*x1 + x2*x2 - 1)", "x1 + 5*(x1*x1 + x2*x2 - 1)"),
        ),
    ),
)

MAPS = {
    "inclusion": SmoothMap(CIRCLE, PLANE, ("x1", "x2")),
    "parametrization": SmoothMap(LINE, CIRCLE, ("cos(x1)", "sin(x1)")),
    "projection": SmoothMap(CIRCLE, LINE, ("x1",)),
}

# Functions on each map target used to test the pushforward identity.
TARGET_FUNCTIONS = {
    "plane": ["x1", "x2", "x1*x2 + sin(x1)", "exp(x1 - x2)"],
    "circle": FUNCTIONS["circle"],
    "line": ["x1", "x1^3", "cos(x1)", "exp(x1)/(1 + x1*x1)"],
}

"""Immutable expression-tree nodes and the canonical text emitter.

Every node is a frozen dataclass, so structural equality (``==``) and
hashing come for free and trees can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Var:
    index: int  # 1-based, x1..x99


@dataclass(frozen=True)
class Lit:
    value: float

    def __post_init__(self):
        v = self.value
        if not (v >= 0.0 and v < float("inf")):
            raise ValueError(f"literal must be finite and non-negative, got {v!r}")


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"  # variable-free


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class Diff:
    """First partial derivative of ``arg`` with respect to ``x<index>``."""

    arg: "Node"
    index: int


Node = Union[Var, Lit, Neg, Bin, Pow, Call, Diff]

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def precedence(node: Node) -> int:
    if isinstance(node, Bin):
        return _PREC_ADD if node.op in "+-" else _PREC_MUL
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Pow):
        return _PREC_POW
    return _PREC_ATOM


def format_number(value: float) -> str:
    if value.is_integer() and value < 1e16:
        return str(int(value))
    return repr(value)


def _wrap(text: str, cond: bool) -> str:
    return f"({text})" if cond else text


def emit_node(node: Node) -> str:
    """Render ``node`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Lit):
        return format_number(node.value)
    if isinstance(node, Neg):
        return "-" + _wrap(emit_node(node.arg), precedence(node.arg) < _PREC_NEG)
    if isinstance(node, Bin):
        p = precedence(node)
        left = _wrap(emit_node(node.left), precedence(node.left) < p)
        right = _wrap(emit_node(node.right), precedence(node.right) <= p)
        return f"{left} {node.op} {right}"
    if isinstance(node, Pow):
        base = _wrap(emit_node(node.base), precedence(node.base) <= _PREC_POW)
        exponent = _wrap(emit_node(node.exponent), precedence(node.exponent) < _PREC_NEG)
        return f"{base}^{exponent}"
    if isinstance(node, Call):
        return f"{node.name}({emit_node(node.arg)})"
    if isinstance(node, Diff):
        return f"diff({emit_node(node.arg)}, x{node.index})"
    raise TypeError(f"not an expression node: {node!r}")


def walk(node: Node):
    """Yield every node of the tree, parents before children."""
    yield node
    if isinstance(node, (Neg, Call, Diff)):
        yield from walk(node.arg)
    elif isinstance(node, Bin):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Pow):
        yield from walk(node.base)
        yield from walk(node.exponent)


def max_variable(node: Node) -> int:
    """Largest variable index referenced anywhere in the tree (0 if none)."""
    top = 0
    for n in walk(node):
        if isinstance(n, Var):
            top = max(top, n.index)
        elif isinstance(n, Diff):
            top = max(top, n.index)
    return top


def is_constant(node: Node) -> bool:
    return not any(isinstance(n, (Var, Diff)) for n in walk(node))

"""ScalarExpr: a parsed smooth ambient function on R^n.

Evaluation compiles the tree once into nested closures over a generic number
type (``float`` or :class:`~subflow.expr.dual.Dual`), so the same compiled
form serves plain evaluation, gradients and nested ``diff()`` nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..errors import ArityError, DomainError
from . import dual
from .dual import Dual, real
from .nodes import (
    Bin, Call, Diff, Lit, Neg, Node, Pow, Var, emit_node, is_constant, max_variable, walk,
)
from .parser import parse_node

TINY_DIVISOR = 1e-300


@dataclass(frozen=True)
class ScalarExpr:
    """An expression tree over ``x1..x<arity>``.

    Arithmetic operators build new trees without any simplification, so
    ``f * g`` is exactly the node ``Bin('*', f.node, g.node)``.
    """

    node: Node
    arity: int

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError(f"arity must be positive, got {self.arity}")
        top = max_variable(self.node)
        if top > self.arity:
            raise ArityError(f"expression references x{top} but arity is {self.arity}")

    @cached_property
    def _compiled(self) -> Callable:
        return _compile(self.node)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def __str__(self) -> str:
        return emit(self)

    # arithmetic builds trees -------------------------------------------------
    def _coerce(self, other) -> Node:
        if isinstance(other, ScalarExpr):
            if other.arity != self.arity:
                raise ArityError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other.node
        if isinstance(other, (int, float)):
            return constant_node(float(other))
        return NotImplemented

    def _bin(self, op, other, reverse=False):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        left, right = (o, self.node) if reverse else (self.node, o)
        return ScalarExpr(Bin(op, left, right), self.arity)

    def __add__(self, other):
        return self._bin("+", other)

    def __radd__(self, other):
        return self._bin("+", other, reverse=True)

    def __sub__(self, other):
        return self._bin("-", other)

    def __rsub__(self, other):
        return self._bin("-", other, reverse=True)

    def __mul__(self, other):
        return self._bin("*", other)

    def __rmul__(self, other):
        return self._bin("*", other, reverse=True)

    def __truediv__(self, other):
        return self._bin("/", other)

    def __rtruediv__(self, other):
        return self._bin("/", other, reverse=True)

    def __neg__(self):
        return ScalarExpr(Neg(self.node), self.arity)

    def __pow__(self, exponent: float):
        return ScalarExpr(Pow(self.node, constant_node(float(exponent))), self.arity)


class DualValue(NamedTuple):
    value: float
    partials: np.ndarray


def constant_node(c: float) -> Node:
    if not math.isfinite(c):
        raise ValueError(f"non-finite constant {c!r}")
    return Lit(c) if c >= 0 else Neg(Lit(-c))


def constant(c: float, arity: int) -> ScalarExpr:
    return ScalarExpr(constant_node(float(c)), arity)


def variable(index: int, arity: int) -> ScalarExpr:
    return ScalarExpr(Var(index), arity)


def parse(source: str, arity: int) -> ScalarExpr:
    """Parse ``source`` into an expression over ``x1..x<arity>``.

    Raises :class:`~subflow.errors.ParseError` (with ``position``) on bad
    syntax and :class:`~subflow.errors.ArityError` when a variable index
    exceeds ``arity``.
    """
    return ScalarExpr(parse_node(source, arity), arity)


def emit(e: ScalarExpr) -> str:
    return emit_node(e.node)


def _point(e: ScalarExpr, x) -> tuple:
    pt = tuple(float(v) for v in np.ravel(np.asarray(x, dtype=float)))
    if len(pt) != e.arity:
        raise ArityError(f"point has length {len(pt)}, expression arity is {e.arity}")
    return pt


def evaluate(e: ScalarExpr, x) -> float:
    """IEEE double evaluation of ``e`` at ``x``."""
    return float(e._compiled(_point(e, x)))


def dual_evaluate(e: ScalarExpr, x) -> DualValue:
    """Value and all first partials in one forward pass."""
    pt = _point(e, x)
    n = len(pt)
    seeded = tuple(Dual(v, [1.0 if j == i else 0.0 for j in range(n)]) for i, v in enumerate(pt))
    out = e._compiled(seeded)
    if isinstance(out, Dual):
        return DualValue(float(out.value), np.array(out.partials, dtype=float))
    return DualValue(float(out), np.zeros(n))


def gradient(e: ScalarExpr, x) -> np.ndarray:
    return dual_evaluate(e, x).partials


def partial(e: ScalarExpr, i: int, x) -> float:
    """Exact first partial of ``e`` with respect to ``x<i>`` at ``x``."""
    if not 1 <= i <= e.arity:
        raise ArityError(f"variable index {i} outside 1..{e.arity}")
    pt = _point(e, x)
    seeded = tuple(Dual(v, (1.0 if j == i - 1 else 0.0,)) for j, v in enumerate(pt))
    out = e._compiled(seeded)
    return float(out.partials[0]) if isinstance(out, Dual) else 0.0


def compose(F: ScalarExpr, args: Sequence[ScalarExpr]) -> ScalarExpr:
    """Substitute ``args[i-1]`` for every ``x<i>`` in ``F``."""
    if len(args) != F.arity:
        raise ArityError(f"F has arity {F.arity} but {len(args)} arguments were given")
    if not args:
        raise ArityError("compose needs at least one argument")
    n = args[0].arity
    if any(a.arity != n for a in args):
        raise ArityError("all composition arguments must share one arity")
    if any(isinstance(node, Diff) for node in walk(F.node)):
        raise ValueError("cannot compose into an expression containing diff()")
    subs = [a.node for a in args]
    return ScalarExpr(_substitute(F.node, subs), n)


def _substitute(node: Node, subs: list) -> Node:
    if isinstance(node, Var):
        return subs[node.index - 1]
    if isinstance(node, Lit):
        return node
    if isinstance(node, Neg):
        return Neg(_substitute(node.arg, subs))
    if isinstance(node, Bin):
        return Bin(node.op, _substitute(node.left, subs), _substitute(node.right, subs))
    if isinstance(node, Pow):
        return Pow(_substitute(node.base, subs), node.exponent)
    if isinstance(node, Call):
        return Call(node.name, _substitute(node.arg, subs))
    raise TypeError(f"cannot substitute into {node!r}")


# structural builders used by derivation algebra --------------------------------
# They drop additive zeros and multiplicative ones/zeros; nothing else.

ZERO = Lit(0.0)
ONE = Lit(1.0)


def derivative(e: ScalarExpr, i: int) -> ScalarExpr:
    """Expression for the i-th partial of ``e``, evaluated lazily by dual passes."""
    if not 1 <= i <= e.arity:
        raise ArityError(f"variable index {i} outside 1..{e.arity}")
    node = e.node
    if is_constant(node):
        return ScalarExpr(ZERO, e.arity)
    if isinstance(node, Var):
        return ScalarExpr(ONE if node.index == i else ZERO, e.arity)
    return ScalarExpr(Diff(node, i), e.arity)


def _mul_node(a: Node, b: Node) -> Node:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


def _add_node(a: Node, b: Node) -> Node:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Bin("+", a, b)


def _sub_node(a: Node, b: Node) -> Node:
    if b == ZERO:
        return a
    if a == ZERO:
        return Neg(b)
    return Bin("-", a, b)


def product(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    _check_same(a, b)
    return ScalarExpr(_mul_node(a.node, b.node), a.arity)


def difference(a: ScalarExpr, b: ScalarExpr) -> ScalarExpr:
    _check_same(a, b)
    return ScalarExpr(_sub_node(a.node, b.node), a.arity)


def total(terms: Sequence[ScalarExpr], arity: int) -> ScalarExpr:
    node: Node = ZERO
    for t in terms:
        if t.arity != arity:
            raise ArityError(f"arity mismatch: {t.arity} vs {arity}")
        node = _add_node(node, t.node)
    return ScalarExpr(node, arity)


def _check_same(a: ScalarExpr, b: ScalarExpr):
    if a.arity != b.arity:
        raise ArityError(f"arity mismatch: {a.arity} vs {b.arity}")


# compilation ---------------------------------------------------------------------

def _domain(message: str, node: Node):
    raise DomainError(message, emit_node(node))


def _compile(node: Node) -> Callable:
    if isinstance(node, Var):
        k = node.index - 1
        return lambda p: p[k]
    if isinstance(node, Lit):
        v = node.value
        return lambda p: v
    if isinstance(node, Neg):
        a = _compile(node.arg)
        return lambda p: -a(p)
    if isinstance(node, Bin):
        return _compile_bin(node)
    if isinstance(node, Pow):
        return _compile_pow(node)
    if isinstance(node, Call):
        return _compile_call(node)
    if isinstance(node, Diff):
        return _compile_diff(node)
    raise TypeError(f"not an expression node: {node!r}")


def _compile_bin(node: Bin) -> Callable:
    a, b = _compile(node.left), _compile(node.right)
    op = node.op
    if op == "+":
        return lambda p: a(p) + b(p)
    if op == "-":
        return lambda p: a(p) - b(p)
    if op == "*":
        return lambda p: a(p) * b(p)

    def divide(p):
        num, den = a(p), b(p)
        if abs(real(den)) < TINY_DIVISOR:
            _domain(f"division by {real(den)!r}", node)
        return num / den

    return divide


def _compile_pow(node: Pow) -> Callable:
    c = float(_compile(node.exponent)(()))
    base = _compile(node.base)
    integral = c.is_integer()

    def power(p):
        v = base(p)
        r = real(v)
        if not integral and r <= 0.0:
            _domain(f"non-integer power of non-positive base {r!r}", node)
        if c < 0 and abs(r) < TINY_DIVISOR:
            _domain(f"negative power of {r!r}", node)
        try:
            return dual.power(v, c)
        except OverflowError:
            _domain("overflow", node)

    return power


def _compile_call(node: Call) -> Callable:
    a = _compile(node.arg)
    fn = dual.PRIMITIVES[node.name]
    if node.name in ("log", "sqrt"):
        def guarded(p):
            v = a(p)
            if real(v) <= 0.0:
                _domain(f"{node.name} of non-positive value {real(v)!r}", node)
            return fn(v)
        return guarded
    if node.name == "exp":
        def exp(p):
            try:
                return fn(a(p))
            except OverflowError:
                _domain("overflow", node)
        return exp
    return lambda p: fn(a(p))


def _compile_diff(node: Diff) -> Callable:
    inner = _compile(node.arg)
    k = node.index - 1

    def differentiate(p):
        seeded = tuple(Dual(v, (1.0 if j == k else 0.0,)) for j, v in enumerate(p))
        out = inner(seeded)
        if isinstance(out, Dual) and out.level == seeded[0].level:
            return out.partials[0]
        return 0.0

    return differentiate

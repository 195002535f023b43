"""Forward-mode dual numbers with support for nesting.

A :class:`Dual` carries a value and a tuple of first partials. Values and
partials may themselves be duals of a lower nesting level, which is how
``diff()`` nodes are evaluated inside an outer derivative pass. Operations
between duals of different levels treat the lower-level operand as a
constant, so perturbations from different passes never mix.
"""

from __future__ import annotations

import math


class Dual:
    __slots__ = ("value", "partials", "level")

    def __init__(self, value, partials):
        self.value = value
        self.partials = tuple(partials)
        self.level = value.level + 1 if isinstance(value, Dual) else 1

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.partials!r})"

    def _same(self, other) -> bool:
        return isinstance(other, Dual) and other.level == self.level

    def _higher(self, other) -> bool:
        return isinstance(other, Dual) and other.level > self.level

    def __add__(self, other):
        if self._same(other):
            return Dual(self.value + other.value,
                        [a + b for a, b in zip(self.partials, other.partials)])
        if self._higher(other):
            return NotImplemented
        return Dual(self.value + other, self.partials)

    def __radd__(self, other):
        return Dual(other + self.value, self.partials)

    def __sub__(self, other):
        if self._same(other):
            return Dual(self.value - other.value,
                        [a - b for a, b in zip(self.partials, other.partials)])
        if self._higher(other):
            return NotImplemented
        return Dual(self.value - other, self.partials)

    def __rsub__(self, other):
        return Dual(other - self.value, [-a for a in self.partials])

    def __neg__(self):
        return Dual(-self.value, [-a for a in self.partials])

    def __mul__(self, other):
        if self._same(other):
            u, v = self.value, other.value
            return Dual(u * v, [u * b + a * v for a, b in zip(self.partials, other.partials)])
        if self._higher(other):
            return NotImplemented
        return Dual(self.value * other, [a * other for a in self.partials])

    def __rmul__(self, other):
        return Dual(other * self.value, [other * a for a in self.partials])

    def __truediv__(self, other):
        if self._same(other):
            q = self.value / other.value
            return Dual(q, [(a - q * b) / other.value
                            for a, b in zip(self.partials, other.partials)])
        if self._higher(other):
            return NotImplemented
        return Dual(self.value / other, [a / other for a in self.partials])

    def __rtruediv__(self, other):
        q = other / self.value
        return Dual(q, [-(q * b) / self.value for b in self.partials])


def real(a) -> float:
    """Innermost real value of a possibly nested dual."""
    while isinstance(a, Dual):
        a = a.value
    return a


def _lift(a, fa, dfa):
    # chain rule: f(a) with derivative f'(a) applied to every partial
    return Dual(fa, [dfa * p for p in a.partials])


def sin(a):
    if isinstance(a, Dual):
        return _lift(a, sin(a.value), cos(a.value))
    return math.sin(a)


def cos(a):
    if isinstance(a, Dual):
        return _lift(a, cos(a.value), -sin(a.value))
    return math.cos(a)


def exp(a):
    if isinstance(a, Dual):
        e = exp(a.value)
        return _lift(a, e, e)
    return math.exp(a)


def log(a):
    if isinstance(a, Dual):
        return _lift(a, log(a.value), 1.0 / a.value)
    return math.log(a)


def sqrt(a):
    if isinstance(a, Dual):
        s = sqrt(a.value)
        return _lift(a, s, 0.5 / s)
    return math.sqrt(a)


def tanh(a):
    if isinstance(a, Dual):
        t = tanh(a.value)
        return _lift(a, t, 1.0 - t * t)
    return math.tanh(a)


def power(a, c: float):
    """``a**c`` for a constant real exponent ``c``."""
    if c == 0.0:
        return 1.0
    if isinstance(a, Dual):
        return _lift(a, power(a.value, c), c * power(a.value, c - 1.0))
    return a ** c


PRIMITIVES = {"sin": sin, "cos": cos, "exp": exp, "log": log, "sqrt": sqrt, "tanh": tanh}

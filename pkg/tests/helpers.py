"""Shared generators and small utilities for the test suite."""

import re

import numpy as np

from subflow.errors import DomainError
from subflow.expr import Bin, Call, Diff, Lit, Neg, Pow, Var, evaluate, gradient
from subflow.expr.nodes import FUNCTIONS


def arity_of(src: str) -> int:
    return max([int(m) for m in re.findall(r"x(\d+)", src)] + [1])


def _literal(rng) -> Lit:
    kind = rng.integers(3)
    if kind == 0:
        return Lit(float(rng.integers(0, 10)))
    if kind == 1:
        return Lit(float(rng.uniform(0, 5)))
    return Lit(float(10.0 ** rng.integers(-12, 20)))


def random_expression(rng, n: int, depth: int = 4):
    """A random expression tree over x1..xn, mixing every node kind."""
    if depth == 0 or rng.random() < 0.2:
        return Var(int(rng.integers(1, n + 1))) if rng.random() < 0.6 else _literal(rng)
    kind = rng.integers(6)
    sub = lambda: random_expression(rng, n, depth - 1)  # noqa: E731
    if kind == 0:
        return Neg(sub())
    if kind == 1:
        return Pow(sub(), _literal(rng) if rng.random() < 0.7 else Neg(_literal(rng)))
    if kind == 2:
        return Call(FUNCTIONS[rng.integers(len(FUNCTIONS))], sub())
    if kind == 3 and rng.random() < 0.15:
        return Diff(sub(), int(rng.integers(1, n + 1)))
    return Bin("+-*/"[rng.integers(4)], sub(), sub())


def in_domain_points(e, rng, count: int, half_width: float = 2.0, margin: float = 0.05):
    """Uniform points where ``e`` and its gradient are defined in a small box around them."""
    out = []
    tries = 0
    while len(out) < count and tries < 50 * count:
        tries += 1
        x = rng.uniform(-half_width, half_width, e.arity)
        try:
            gradient(e, x)
            for i in range(e.arity):
                for s in (-margin, margin):
                    y = x.copy()
                    y[i] += s
                    evaluate(e, y)
        except DomainError:
            continue
        out.append(x)
    assert len(out) == count, "could not find enough in-domain points"
    return out

"""Point derivations, global derivations and numerical identity checks.

Global derivations are stored in the normal form ``X = Σ F^i ∂/∂x^i`` with
ambient coefficient expressions; their action on a smooth function is the
ambient expression ``Σ F^i ∂_i f`` restricted to the space. Every
``*_residual`` function computes both sides of an identity along independent
paths and returns a :class:`Residual`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import (
    ArityError, AtlasAgreementError, LocalityPreconditionError, OffSpaceError, SpaceMismatchError,
)
from .expr import (
    ScalarExpr, compose, derivative, difference, evaluate, gradient, parse, product, total,
)
from .space import (
    ConstraintPiece, EmbeddedSpace, SmoothFunction, SmoothMap, contains, map_eval, residual, sample,
)

AGREEMENT_TOL = 1e-7
AGREEMENT_SAMPLES = 512


class Residual(float):
    """Absolute residual of an identity, carrying ``scale = 1 + max|term|``."""

    scale: float

    def __new__(cls, value: float, scale: float = 1.0):
        obj = super().__new__(cls, value)
        obj.scale = float(scale)
        return obj

    @classmethod
    def between(cls, lhs: float, rhs: float, *terms: float) -> "Residual":
        magnitude = max([abs(lhs), abs(rhs)] + [abs(t) for t in terms])
        return cls(abs(lhs - rhs), 1.0 + magnitude)

    @property
    def relative(self) -> float:
        return float(self) / self.scale

    def within(self, tol: float) -> bool:
        return float(self) <= tol * self.scale

    def __repr__(self) -> str:
        return f"Residual({float(self)!r}, scale={self.scale!r})"


def _pair(grad: np.ndarray, v: Sequence[float]) -> float:
    s = 0.0
    for g, c in zip(grad, v):
        s += float(g) * float(c)
    return s


def _coefficients(items, n: int) -> tuple[ScalarExpr, ...]:
    out = tuple(parse(c, n) if isinstance(c, str) else c for c in items)
    if len(out) != n or any(c.arity != n for c in out):
        raise ArityError(f"need {n} coefficient expressions of arity {n}")
    return out


@dataclass(frozen=True)
class PointDerivation:
    """Tangent vector ``v`` at ``base``, acting by ``v(f) = ∇f(base)·v``."""

    base: tuple[float, ...]
    vector: tuple[float, ...]
    space: EmbeddedSpace | None = dc_field(default=None, repr=False, compare=False)

    def __post_init__(self):
        base = tuple(float(c) for c in np.ravel(self.base))
        vec = tuple(float(c) for c in np.ravel(self.vector))
        if len(base) != len(vec):
            raise ArityError("base point and vector lengths differ")
        if self.space is not None and len(base) != self.space.ambient_dim:
            raise ArityError("base point length differs from the space dimension")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "vector", vec)

    def act(self, f: SmoothFunction | ScalarExpr) -> float:
        e = f.ambient if isinstance(f, SmoothFunction) else f
        return _pair(gradient(e, self.base), self.vector)

    __call__ = act


class TangentPair(PointDerivation):
    """Element ``(x, v)`` of TS, on which ``τ*f`` and ``df`` are evaluated."""


def tangent_vector(S: EmbeddedSpace, x, v, tol: float | None = None) -> PointDerivation:
    """Checked constructor: ``x`` must lie on ``S``."""
    if not contains(S, x, tol):
        raise OffSpaceError("base point is not on the space", point=x, residual=residual(S, x))
    return PointDerivation(x, v, S)


@dataclass(frozen=True)
class AtlasEntry:
    """Region-local coefficient set used by the flow engine for restarts."""

    region: ConstraintPiece
    coefficients: tuple[ScalarExpr, ...]


@dataclass(frozen=True)
class GlobalDerivation:
    space: EmbeddedSpace
    coefficients: tuple[ScalarExpr, ...]
    atlas: tuple[AtlasEntry, ...] = ()

    def __post_init__(self):
        n = self.space.ambient_dim
        object.__setattr__(self, "coefficients", _coefficients(self.coefficients, n))
        entries = []
        for entry in self.atlas:
            for e in entry.region.equalities + entry.region.inequalities:
                if e.arity != n:
                    raise ArityError("atlas region arity differs from the space dimension")
            entries.append(AtlasEntry(entry.region, _coefficients(entry.coefficients, n)))
        object.__setattr__(self, "atlas", tuple(entries))

    def __call__(self, f: SmoothFunction) -> SmoothFunction:
        return apply(self, f)

    def field(self, x, extension: int | None = None) -> np.ndarray:
        """Ambient coefficient values at ``x`` (no membership check)."""
        coeffs = self.coefficients if extension is None else self.atlas[extension].coefficients
        return np.array([evaluate(c, x) for c in coeffs])

    def scaled(self, f: SmoothFunction | ScalarExpr) -> "GlobalDerivation":
        """The module action ``f·X``."""
        e = _ambient(f, self.space)
        return GlobalDerivation(self.space, tuple(product(e, c) for c in self.coefficients))

    def validate_atlas(self, tol: float = AGREEMENT_TOL, samples: int = 256, seed: int = 0) -> None:
        """Raise :class:`AtlasAgreementError` naming the worst sampled point."""
        for k, entry in enumerate(self.atlas):
            for i, (a, b) in enumerate(zip(entry.coefficients, self.coefficients)):
                worst, point = disagreement(self.space, a, b, samples=samples, seed=seed,
                                            region=entry.region)
                if worst > tol:
                    raise AtlasAgreementError(
                        f"atlas entry {k} coefficient {i + 1} differs from the default by "
                        f"{worst:.3g} at {point.tolist()}", point=point, disagreement=worst)


def _ambient(f, S: EmbeddedSpace) -> ScalarExpr:
    if isinstance(f, SmoothFunction):
        if f.space != S:
            raise SpaceMismatchError("function and derivation live on different spaces")
        return f.ambient
    if f.arity != S.ambient_dim:
        raise ArityError("expression arity differs from the space dimension")
    return f


def _action_expr(coeffs: Sequence[ScalarExpr], e: ScalarExpr) -> ScalarExpr:
    return total([product(c, derivative(e, i + 1)) for i, c in enumerate(coeffs)], e.arity)


def apply(X: GlobalDerivation, f: SmoothFunction) -> SmoothFunction:
    """``X(f)`` as the restriction of ``Σ F^i ∂_i f``."""
    return SmoothFunction(_action_expr(X.coefficients, _ambient(f, X.space)), X.space)


def value_at(X: GlobalDerivation, x) -> PointDerivation:
    return tangent_vector(X.space, x, X.field(x))


def leibniz_residual(v: PointDerivation, f1: SmoothFunction, f2: SmoothFunction) -> Residual:
    """``|v(f1 f2) − (v(f1) f2(x) + f1(x) v(f2))|``."""
    x = v.base
    lhs = v.act(f1.ambient * f2.ambient)
    t1 = v.act(f1) * evaluate(f2.ambient, x)
    t2 = evaluate(f1.ambient, x) * v.act(f2)
    s = 0.0
    s += t1
    s += t2
    return Residual.between(lhs, s, t1, t2)


def _weighted_actions(v: PointDerivation, F: ScalarExpr, fs: Sequence[SmoothFunction]):
    # right-hand side of the chain rule: Σ ∂_iF(f(x)) v(f_i)
    x = v.base
    values = [evaluate(f.ambient, x) for f in fs]
    dF = gradient(F, values)
    terms = [float(dF[i]) * v.act(f) for i, f in enumerate(fs)]
    s = 0.0
    for t in terms:
        s += t
    return s, terms


def chain_rule_residual(v: PointDerivation, F: ScalarExpr, fs: Sequence[SmoothFunction]) -> Residual:
    """``|v(F(f1..fk)) − Σ ∂_iF(f1(x)..fk(x)) v(f_i)|``.

    The left side differentiates the composed expression; the right side
    combines k separate actions with the partials of ``F``.
    """
    if F.arity != len(fs):
        raise ArityError(f"F has arity {F.arity} but {len(fs)} functions were given")
    lhs = v.act(compose(F, [f.ambient for f in fs]))
    rhs, terms = _weighted_actions(v, F, fs)
    return Residual.between(lhs, rhs, *terms)


def pushforward(phi: SmoothMap, v: PointDerivation) -> PointDerivation:
    """``Tφ(v)`` at ``φ(x)`` with vector ``J_φ(x)·v``."""
    y = map_eval(phi, v.base)
    w = [_pair(gradient(c, v.base), v.vector) for c in phi.components]
    return PointDerivation(y, w, phi.target)


def pushforward_residual(phi: SmoothMap, v: PointDerivation, f: SmoothFunction) -> Residual:
    """``|Tφ(v) f − v(φ* f)|``."""
    lhs = pushforward(phi, v).act(f)
    rhs = v.act(phi.pullback(f))
    return Residual.between(lhs, rhs)


def lie_bracket(X: GlobalDerivation, Y: GlobalDerivation) -> GlobalDerivation:
    """Coefficients ``[X,Y]^i = Σ_j F^j ∂_j G^i − G^j ∂_j F^i``."""
    if X.space != Y.space:
        raise SpaceMismatchError("derivations live on different spaces")
    coeffs = [
        difference(_action_expr(X.coefficients, G), _action_expr(Y.coefficients, F))
        for F, G in zip(X.coefficients, Y.coefficients)
    ]
    return GlobalDerivation(X.space, tuple(coeffs))


def _nested(X: GlobalDerivation, Y: GlobalDerivation, f: SmoothFunction, x) -> tuple[float, float]:
    return evaluate(apply(X, apply(Y, f)).ambient, x), evaluate(apply(Y, apply(X, f)).ambient, x)


def bracket_residual(X: GlobalDerivation, Y: GlobalDerivation, f: SmoothFunction, x) -> Residual:
    """Symbolic bracket coefficients against ``X(Y f) − Y(X f)`` at ``x``."""
    lhs = evaluate(apply(lie_bracket(X, Y), f).ambient, x)
    xy, yx = _nested(X, Y, f, x)
    return Residual.between(lhs, xy - yx, xy, yx)


def antisymmetry_residual(X: GlobalDerivation, Y: GlobalDerivation, f: SmoothFunction, x) -> Residual:
    a = evaluate(apply(lie_bracket(X, Y), f).ambient, x)
    b = evaluate(apply(lie_bracket(Y, X), f).ambient, x)
    return Residual.between(a, -b)


def jacobi_residual(X: GlobalDerivation, Y: GlobalDerivation, Z: GlobalDerivation,
                    f: SmoothFunction, x) -> Residual:
    terms = [
        evaluate(apply(lie_bracket(A, lie_bracket(B, C)), f).ambient, x)
        for A, B, C in ((X, Y, Z), (Y, Z, X), (Z, X, Y))
    ]
    return Residual.between(terms[0] + terms[1], -terms[2], *terms)


def module_identity_residual(f1: SmoothFunction, f2: SmoothFunction, X1: GlobalDerivation,
                             X2: GlobalDerivation, g: SmoothFunction, x) -> Residual:
    """``[f1 X1, f2 X2] g`` against ``f1 f2 [X1,X2] g + f1 X1(f2) X2 g − f2 X2(f1) X1 g``.

    The left side brackets the scaled derivations symbolically; the right
    side evaluates the combination from nested actions at ``x``.
    """
    lhs = evaluate(apply(lie_bracket(X1.scaled(f1), X2.scaled(f2)), g).ambient, x)
    a1, a2 = evaluate(f1.ambient, x), evaluate(f2.ambient, x)
    xy, yx = _nested(X1, X2, g, x)
    t1 = a1 * a2 * (xy - yx)
    t2 = a1 * evaluate(apply(X1, f2).ambient, x) * evaluate(apply(X2, g).ambient, x)
    t3 = a2 * evaluate(apply(X2, f1).ambient, x) * evaluate(apply(X1, g).ambient, x)
    return Residual.between(lhs, t1 + t2 - t3, t1, t2, t3)


def locality_witness(S: EmbeddedSpace, x, e: ScalarExpr | str) -> ScalarExpr:
    """An expression that vanishes on every piece of ``S`` through ``x``.

    Built as ``e · h_1 · ... · h_m`` with one equality constraint from each
    piece containing ``x``. Adding it to ``f`` gives a function that agrees
    with ``f`` on S near ``x`` (and, for pieces not through ``x``, possibly
    differs far away). Raises ``ValueError`` if some piece through ``x`` has
    no equality constraint: analytic expressions cannot vanish on an open
    subset of such a piece without vanishing on all of it.
    """
    e = parse(e, S.ambient_dim) if isinstance(e, str) else e
    active = [p for p in S.pieces if p.contains(x, S.membership_tol)]
    if not active:
        raise OffSpaceError("point is not on any constraint piece", point=x)
    out = e
    for piece in active:
        if not piece.equalities:
            raise ValueError("a piece through x has no equality constraint to build a witness from")
        out = out * piece.equalities[0]
    return out


def locality_check(X: GlobalDerivation, f: SmoothFunction, g: SmoothFunction, x, radius: float,
                   samples: int = 256, seed: int = 0) -> bool:
    """Whether ``X(f)(x) == X(g)(x)`` for functions agreeing on S near ``x``.

    Raises :class:`LocalityPreconditionError` if ``f`` and ``g`` differ by
    more than 1e-12 at a sampled point of S within ``radius`` of ``x``.
    """
    S = X.space
    x = np.asarray(x, dtype=float)
    if not contains(S, x):
        raise OffSpaceError("base point is not on the space", point=x, residual=residual(S, x))
    box = [(c - radius, c + radius) for c in x]
    near = [p for p in sample(S, samples, seed, box) if math.dist(p, x) <= radius]
    for p in [x] + near:
        d = abs(evaluate(f.ambient, p) - evaluate(g.ambient, p))
        if d > 1e-12:
            raise LocalityPreconditionError(
                f"f and g differ by {d:.3g} at {np.asarray(p).tolist()} inside the ball")
    a = evaluate(apply(X, f).ambient, x)
    b = evaluate(apply(X, g).ambient, x)
    return Residual.between(a, b).within(1e-9)


def tangent_pair_eval(p: PointDerivation, f: SmoothFunction) -> tuple[float, float]:
    """``(τ*f(p), df(p)) = (f(x), v(f))``."""
    return f(p.base), p.act(f)


@dataclass(frozen=True)
class Section:
    """Section ``x ↦ (x, ξ(x))`` of the tangent bundle projection."""

    space: EmbeddedSpace
    assignment: tuple[ScalarExpr, ...]

    def __post_init__(self):
        object.__setattr__(self, "assignment", _coefficients(self.assignment, self.space.ambient_dim))

    def __call__(self, x) -> TangentPair:
        if not contains(self.space, x):
            raise OffSpaceError("point is not on the space", point=x, residual=residual(self.space, x))
        return TangentPair(x, [evaluate(a, x) for a in self.assignment], self.space)

    def pullback_tau(self, f: SmoothFunction, x) -> float:
        """``ξ*(τ*f)(x)``, evaluated through the tangent pair ``ξ(x)``."""
        return f(self(x).base)

    def pullback_d(self, f: SmoothFunction, x) -> float:
        """``ξ*(df)(x) = ξ(x) f``."""
        return self(x).act(f)


def section_from_derivation(X: GlobalDerivation) -> Section:
    return Section(X.space, X.coefficients)


def derivation_from_section(xi: Section) -> GlobalDerivation:
    return GlobalDerivation(xi.space, xi.assignment)


def section_residuals(X: GlobalDerivation, f: SmoothFunction, x) -> tuple[Residual, Residual]:
    """Residuals of ``ξ*(τ*f) = f`` and ``ξ*(df) = X(f)`` for ``ξ`` built from ``X``."""
    xi = section_from_derivation(X)
    a = Residual.between(xi.pullback_tau(f, x), f(x))
    b = Residual.between(xi.pullback_d(f, x), evaluate(apply(X, f).ambient, x))
    return a, b


TANGENT = "TANGENT"
OBSTRUCTED = "OBSTRUCTED"


@dataclass(frozen=True)
class TangencyReport:
    classification: str
    steps: tuple[float, ...]
    ratios: tuple[float, ...]


def tangency_probe(S: EmbeddedSpace, x, v, steps: int = 8, t0: float = 1e-2) -> TangencyReport:
    """Screen whether the line ``x + t v`` leaves ``S`` to first order.

    For ``t = ±2^-k t0`` records ``max residual(S, x + t v)/|t|``; the
    direction is TANGENT when that ratio keeps shrinking by a factor of at
    least 1.5 per halving (or vanishes), OBSTRUCTED otherwise.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if not contains(S, x):
        raise OffSpaceError("base point is not on the space", point=x, residual=residual(S, x))
    ts, ratios = [], []
    for k in range(steps):
        t = t0 * 2.0 ** -k
        r = max(residual(S, x + t * v), residual(S, x - t * v))
        ts.append(t)
        ratios.append(r / t)
    shrinking = all(b * 1.5 <= a for a, b in zip(ratios, ratios[1:]))
    vanishing = all(r <= S.membership_tol for r in ratios)
    return TangencyReport(TANGENT if shrinking or vanishing else OBSTRUCTED, tuple(ts), tuple(ratios))


def disagreement(S: EmbeddedSpace, e1: ScalarExpr, e2: ScalarExpr, samples: int = AGREEMENT_SAMPLES,
                 seed: int = 0, region: ConstraintPiece | None = None):
    """Worst scaled ``|e1 − e2| / (1 + max(|e1|, |e2|))`` over sampled points of S."""
    if e1.arity != e2.arity or e1.arity != S.ambient_dim:
        raise ArityError("expression arities must match the space dimension")
    worst, where = 0.0, None
    for p in sample(S, samples, seed):
        if region is not None and not region.contains(p, S.membership_tol):
            continue
        a, b = evaluate(e1, p), evaluate(e2, p)
        d = abs(a - b) / (1.0 + max(abs(a), abs(b)))
        if where is None or d > worst:
            worst, where = d, p
    return worst, where


def agree_on_space(S: EmbeddedSpace, e1: ScalarExpr, e2: ScalarExpr, tol: float = AGREEMENT_TOL,
                   samples: int = AGREEMENT_SAMPLES, seed: int = 0) -> bool:
    """Whether two ambient expressions are indistinguishable on sampled points of S."""
    worst, _ = disagreement(S, e1, e2, samples, seed)
    return worst <= tol

"""Embedded subcartesian spaces S ⊆ R^n and smooth functions/maps on them.

A space is a finite union of constraint pieces ``{h_k = 0, g_j >= 0}`` plus
optional isolated points. Smooth functions are restrictions of ambient
expressions; nothing here reifies the topology beyond the membership oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArityError, DomainError, InvalidMapError, OffSpaceError, SpaceMismatchError
from .expr import ScalarExpr, compose, evaluate, gradient, parse

DEFAULT_MEMBERSHIP_TOL = 1e-9
DEFAULT_BOX_HALFWIDTH = 2.0
SAMPLE_ITERATIONS = 200


def _as_point(x, n: int) -> np.ndarray:
    pt = np.ravel(np.asarray(x, dtype=float))
    if pt.shape != (n,):
        raise ArityError(f"point has length {pt.size}, ambient dimension is {n}")
    return pt


def _exprs(items, n: int) -> tuple[ScalarExpr, ...]:
    out = []
    for item in items:
        e = parse(item, n) if isinstance(item, str) else item
        if e.arity != n:
            raise ArityError(f"constraint arity {e.arity} differs from ambient dimension {n}")
        out.append(e)
    return tuple(out)


@dataclass(frozen=True)
class ConstraintPiece:
    """``{x : h_k(x) = 0 for all k, g_j(x) >= 0 for all j}``; empty lists mean all of R^n."""

    equalities: tuple[ScalarExpr, ...] = ()
    inequalities: tuple[ScalarExpr, ...] = ()

    @classmethod
    def from_strings(cls, dim: int, equalities: Sequence = (), inequalities: Sequence = ()):
        return cls(_exprs(equalities, dim), _exprs(inequalities, dim))

    def residual(self, x) -> float:
        r = 0.0
        for h in self.equalities:
            r = max(r, abs(evaluate(h, x)))
        for g in self.inequalities:
            r = max(r, -evaluate(g, x))
        return r

    def contains(self, x, tol: float) -> bool:
        return (all(abs(evaluate(h, x)) <= tol for h in self.equalities)
                and all(evaluate(g, x) >= -tol for g in self.inequalities))


@dataclass(frozen=True)
class EmbeddedSpace:
    ambient_dim: int
    pieces: tuple[ConstraintPiece, ...] = ()
    points: tuple[tuple[float, ...], ...] = ()
    membership_tol: float = DEFAULT_MEMBERSHIP_TOL
    box: tuple[tuple[float, float], ...] | None = None  # default sampling box
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.ambient_dim
        if n < 1:
            raise ArityError("ambient_dim must be at least 1")
        if not self.pieces and not self.points:
            raise ValueError("a space needs at least one piece or one explicit point")
        for piece in self.pieces:
            for e in piece.equalities + piece.inequalities:
                if e.arity != n:
                    raise ArityError(f"constraint arity {e.arity} differs from ambient dimension {n}")
        pts = tuple(tuple(float(c) for c in p) for p in self.points)
        if any(len(p) != n for p in pts):
            raise ArityError("explicit point length differs from ambient dimension")
        object.__setattr__(self, "points", pts)
        if self.membership_tol < 0:
            raise ValueError("membership_tol must be non-negative")

    def sampling_box(self) -> tuple[tuple[float, float], ...]:
        if self.box is not None:
            return self.box
        return tuple((-DEFAULT_BOX_HALFWIDTH, DEFAULT_BOX_HALFWIDTH) for _ in range(self.ambient_dim))

    def with_piece(self, piece: ConstraintPiece) -> "EmbeddedSpace":
        return EmbeddedSpace(self.ambient_dim, self.pieces + (piece,), self.points,
                             self.membership_tol, self.box, self.name)

    def contains(self, x, tol: float | None = None) -> bool:
        return contains(self, x, tol)

    def residual(self, x) -> float:
        return residual(self, x)


def contains(S: EmbeddedSpace, x, tol: float | None = None) -> bool:
    """Membership within ``tol`` (default ``S.membership_tol``)."""
    tol = S.membership_tol if tol is None else tol
    if tol < 0:
        raise ValueError("tol must be non-negative")
    pt = _as_point(x, S.ambient_dim)
    if any(piece.contains(pt, tol) for piece in S.pieces):
        return True
    return any(math.dist(pt, p) <= tol for p in S.points)


def residual(S: EmbeddedSpace, x) -> float:
    """Smallest constraint violation over pieces and explicit points (0 on S)."""
    pt = _as_point(x, S.ambient_dim)
    best = math.inf
    for piece in S.pieces:
        best = min(best, piece.residual(pt))
        if best == 0.0:
            return 0.0
    for p in S.points:
        best = min(best, math.dist(pt, p))
    return best


def _newton_move(S: EmbeddedSpace, x: np.ndarray):
    # one Newton step on the worst constraint of the closest piece, along the
    # coordinate where that constraint is steepest
    best_piece, best_r = None, math.inf
    for piece in S.pieces:
        r = piece.residual(x)
        if r < best_r:
            best_piece, best_r = piece, r
    for p in S.points:
        if math.dist(x, p) < best_r:
            return np.array(p)
    if best_piece is None:
        return None
    worst, worst_val, worst_r = None, 0.0, -math.inf
    for h in best_piece.equalities:
        v = evaluate(h, x)
        if abs(v) > worst_r:
            worst, worst_val, worst_r = h, v, abs(v)
    for g in best_piece.inequalities:
        v = evaluate(g, x)
        if -v > worst_r:
            worst, worst_val, worst_r = g, v, -v
    if worst is None:
        return None
    grad = gradient(worst, x)
    j = int(np.argmax(np.abs(grad)))
    if grad[j] == 0.0 or not math.isfinite(grad[j]):
        return None
    y = x.copy()
    y[j] -= worst_val / grad[j]
    return y


def _descend(S: EmbeddedSpace, x: np.ndarray, step: float, tol: float) -> tuple[np.ndarray, float]:
    # coordinate descent on the residual: a Newton move on one coordinate when
    # it helps, otherwise a compass sweep that halves its step on failure
    r = residual(S, x)
    for _ in range(SAMPLE_ITERATIONS):
        if r <= tol:
            break
        try:
            y = _newton_move(S, x)
            ry = residual(S, y) if y is not None else math.inf
        except DomainError:
            ry = math.inf
        if ry < r:
            x, r = y, ry
            continue
        best_x, best_r = None, r
        for j in range(x.size):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[j] += sign * step
                try:
                    ry = residual(S, y)
                except DomainError:
                    continue
                if ry < best_r:
                    best_x, best_r = y, ry
        if best_x is None:
            step *= 0.5
        else:
            x, r = best_x, best_r
    return x, r


def sample(S: EmbeddedSpace, count: int, seed: int = 0, box=None) -> list[np.ndarray]:
    """Up to ``count`` points of ``S`` inside ``box``, reproducible from ``seed``.

    Candidates are drawn uniformly from the box and pulled onto S by a
    coordinate-descent on the residual. Candidates that fail to converge are
    dropped, so the result may be shorter than ``count``.
    """
    box = S.sampling_box() if box is None else tuple(tuple(map(float, b)) for b in box)
    if len(box) != S.ambient_dim or any(lo > hi for lo, hi in box):
        raise ValueError("box must give one (lo, hi) pair per ambient coordinate")
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    rng = np.random.default_rng(seed)
    step0 = 0.25 * max(float(np.max(hi - lo)), 1e-3)
    tol = S.membership_tol
    out: list[np.ndarray] = []
    for _ in range(10 * count):
        if len(out) >= count:
            break
        x = lo + (hi - lo) * rng.random(S.ambient_dim)
        try:
            x, r = _descend(S, x, step0, 1e-3 * tol)
        except DomainError:
            continue
        if r > tol:
            continue
        snapped = _snap_to_explicit(S, x)
        if snapped is not None:
            x = snapped
        elif not np.all((x >= lo - tol) & (x <= hi + tol)):
            continue
        out.append(x)
    return out


def _snap_to_explicit(S: EmbeddedSpace, x: np.ndarray):
    if any(piece.contains(x, S.membership_tol) for piece in S.pieces):
        return None
    for p in S.points:
        if math.dist(x, p) <= S.membership_tol:
            return np.array(p)
    return None


@dataclass(frozen=True)
class SmoothFunction:
    """Restriction ``ambient|_S`` of an ambient expression to a space."""

    ambient: ScalarExpr
    space: EmbeddedSpace

    def __post_init__(self):
        if self.ambient.arity != self.space.ambient_dim:
            raise ArityError(
                f"expression arity {self.ambient.arity} differs from space dimension "
                f"{self.space.ambient_dim}"
            )

    def __call__(self, x, tol: float | None = None) -> float:
        if not contains(self.space, x, tol):
            raise OffSpaceError(f"point {list(np.ravel(x))} is not on the space",
                                point=x, residual=residual(self.space, x))
        return evaluate(self.ambient, x)

    def _other(self, other):
        if isinstance(other, SmoothFunction):
            if other.space != self.space:
                raise SpaceMismatchError("functions live on different spaces")
            return other.ambient
        return other

    def __add__(self, other):
        return SmoothFunction(self.ambient + self._other(other), self.space)

    def __sub__(self, other):
        return SmoothFunction(self.ambient - self._other(other), self.space)

    def __mul__(self, other):
        return SmoothFunction(self.ambient * self._other(other), self.space)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return SmoothFunction(-self.ambient, self.space)


def restrict(S: EmbeddedSpace, e: ScalarExpr | str) -> SmoothFunction:
    if isinstance(e, str):
        e = parse(e, S.ambient_dim)
    return SmoothFunction(e, S)


@dataclass(frozen=True)
class SmoothMap:
    """Map between embedded spaces given by ambient component expressions."""

    source: EmbeddedSpace
    target: EmbeddedSpace
    components: tuple[ScalarExpr, ...]
    validation_tol: float = 1e-8

    def __post_init__(self):
        comps = _exprs(self.components, self.source.ambient_dim)
        if len(comps) != self.target.ambient_dim:
            raise ArityError(
                f"map has {len(comps)} components, target dimension is {self.target.ambient_dim}"
            )
        object.__setattr__(self, "components", comps)

    def ambient(self, x) -> np.ndarray:
        return np.array([evaluate(c, x) for c in self.components])

    def __call__(self, x) -> np.ndarray:
        return map_eval(self, x)

    def pullback(self, f: SmoothFunction) -> SmoothFunction:
        """``f ∘ φ`` as a function on the source."""
        if f.space != self.target:
            raise SpaceMismatchError("function is not defined on the map's target")
        return SmoothFunction(compose(f.ambient, self.components), self.source)

    def validate(self, count: int = 64, seed: int = 0) -> None:
        """Raise :class:`InvalidMapError` if a sampled source point lands off the target."""
        for x in sample(self.source, count, seed):
            map_eval(self, x)


def map_eval(phi: SmoothMap, x) -> np.ndarray:
    if not contains(phi.source, x):
        raise OffSpaceError("point is not on the map's source", point=x,
                            residual=residual(phi.source, x))
    y = phi.ambient(x)
    r = residual(phi.target, y)
    if r > phi.validation_tol:
        raise InvalidMapError(
            f"image {y.tolist()} of {list(np.ravel(x))} is off the target (residual {r:.3g})"
        )
    return y

"""Flow maps, one-parameter-group residuals and refinement checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..deriv import GlobalDerivation, apply
from ..errors import OffSpaceError, OutOfDomainError
from ..expr import evaluate
from ..space import SmoothFunction, residual
from .engine import POINT, FlowSettings, LiftedCurve, maximal_curve


def flow_map(X: GlobalDerivation, x0, t: float, settings: FlowSettings | None = None) -> np.ndarray:
    """``e^{tX}(x0)``: the maximal curve through ``x0`` evaluated at ``t``.

    Only the side of the curve containing ``t`` is constructed, up to ``|t|``.
    Raises :class:`OutOfDomainError` (carrying the computed domain) when the
    curve stops before reaching ``t``.
    """
    settings = settings or FlowSettings()
    x0 = np.asarray(x0, dtype=float).ravel()
    if t == 0.0:
        r = residual(X.space, x0)
        if r > settings.band_tol:
            raise OffSpaceError("start point is off the space", point=x0, residual=r)
        return x0.copy()
    direction = 1 if t > 0 else -1
    lifted = maximal_curve(X, x0, settings, directions=(direction,), t_limit=abs(t))
    curve = lifted.curve
    if not curve.covers(t):
        raise OutOfDomainError(f"e^(tX) is undefined at t = {t!r}", curve.domain)
    return curve(t)


def local_group_residual(X: GlobalDerivation, x0, s: float, t: float,
                         settings: FlowSettings | None = None) -> float:
    """``|e^{sX}(e^{tX}(x0)) − e^{(s+t)X}(x0)|``."""
    mid = flow_map(X, x0, t, settings)
    return float(np.linalg.norm(flow_map(X, mid, s, settings) - flow_map(X, x0, s + t, settings)))


@dataclass(frozen=True)
class UniquenessReport:
    sup_distance: float
    left_end_difference: float
    right_end_difference: float
    kinds: tuple[str, str]
    terminations: tuple[tuple[str, str], tuple[str, str]]

    @property
    def endpoint_difference(self) -> float:
        return max(self.left_end_difference, self.right_end_difference)


def curve_distance(a: LiftedCurve, b: LiftedCurve) -> float:
    """Sup of ``|a(t) − b(t)|`` over every sample time of either curve in the common domain."""
    lo = max(a.curve.domain[0], b.curve.domain[0])
    hi = min(a.curve.domain[1], b.curve.domain[1])
    times = {0.0}
    for c in (a.curve, b.curve):
        times.update(t for t, _, _, _ in c.samples() if lo <= t <= hi)
    return max(float(np.linalg.norm(a(t) - b(t))) for t in sorted(times))


def uniqueness_probe(X: GlobalDerivation, x0, settings: FlowSettings | None = None) -> UniquenessReport:
    """Compare the maximal curve with one built at tolerances divided by 100."""
    settings = settings or FlowSettings()
    coarse = maximal_curve(X, x0, settings)
    fine = maximal_curve(X, x0, settings.refined())
    ca, cb = coarse.curve, fine.curve
    return UniquenessReport(
        sup_distance=curve_distance(coarse, fine),
        left_end_difference=abs(ca.domain[0] - cb.domain[0]),
        right_end_difference=abs(ca.domain[1] - cb.domain[1]),
        kinds=(ca.domain_kind, cb.domain_kind),
        terminations=((ca.left.termination, ca.right.termination),
                      (cb.left.termination, cb.right.termination)),
    )


def _derivative_weights(offsets: np.ndarray) -> np.ndarray:
    # finite-difference weights for d/dt at offset 0, exact for degree < len(offsets)
    scale = float(np.max(np.abs(offsets)))
    u = offsets / scale
    m = len(u)
    V = np.vander(u, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs) / scale


def ode_residual(X: GlobalDerivation, curve: LiftedCurve, f: SmoothFunction) -> float:
    """Max over interior samples of ``|d/dt f(c(t)) − X(f)(c(t))|``.

    The time derivative is a centred five-point difference over neighbouring
    samples of the same segment (fourth order on the non-uniform grid).
    """
    if curve.curve.domain_kind == POINT:
        raise ValueError("ode_residual needs an interval curve")
    Xf = apply(X, f).ambient
    worst = 0.0
    for seg in curve.curve.segments:
        values = np.array([evaluate(f.ambient, x) for x in seg.points])
        for i in range(2, len(seg.times) - 2):
            offsets = seg.times[i - 2:i + 3] - seg.times[i]
            d = float(_derivative_weights(offsets) @ values[i - 2:i + 3])
            worst = max(worst, abs(d - evaluate(Xf, seg.points[i])))
    return worst

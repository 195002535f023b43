"""Maximal lifted integral curves of global derivations.

The construction mirrors the local-existence / restart argument: integrate an
ambient extension of the derivation, keep the part of the solution that stays
on the space, locate the exit by bisection, and restart from the limit point
with the first extension (atlas entry, then default) that is not blocked
there. Each end of the domain carries a tag saying why construction stopped.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from ..deriv import GlobalDerivation
from ..errors import DomainError, OffSpaceError, OutOfDomainError
from ..space import ConstraintPiece, EmbeddedSpace, residual
from . import integrator as dp

BUDGET = "BUDGET"
EXIT_NO_LIMIT = "EXIT_NO_LIMIT"
EXIT_LIMIT_EXHAUSTED = "EXIT_LIMIT_EXHAUSTED"
FIXED_POINT_CONVERGENCE = "FIXED_POINT_CONVERGENCE"

POINT = "POINT"
INTERVAL = "INTERVAL"

DIVERGENCE_NORM = 1e12
FIXED_POINT_SPEED = 1e-13
FIXED_POINT_STREAK = 2


@dataclass(frozen=True)
class FlowSettings:
    rtol: float = 1e-9
    atol: float = 1e-12
    band_tol: float = 1e-6
    exit_bisect_tol: float = 1e-10
    t_budget: float = 100.0
    max_restarts: int = 16
    probe_h: float = 1e-8
    max_step: float = math.inf
    reproject: bool = False

    def __post_init__(self):
        for name in ("rtol", "atol", "band_tol", "exit_bisect_tol", "t_budget", "probe_h", "max_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")
        if not self.exit_bisect_tol < self.probe_h:
            raise ValueError("exit_bisect_tol must be smaller than probe_h")

    def refined(self, factor: float = 100.0) -> "FlowSettings":
        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor,
                       exit_bisect_tol=self.exit_bisect_tol / factor)


@dataclass(frozen=True)
class Extension:
    """An ambient coefficient set valid on ``space ∩ region``.

    ``ident`` is ``None`` for the derivation's default coefficients and the
    atlas index otherwise.
    """

    derivation: GlobalDerivation
    ident: int | None = None

    @property
    def region(self) -> ConstraintPiece | None:
        return None if self.ident is None else self.derivation.atlas[self.ident].region

    @property
    def label(self) -> str:
        return "default" if self.ident is None else str(self.ident)

    def __call__(self, x) -> np.ndarray:
        return self.derivation.field(x, self.ident)

    def domain_residual(self, x) -> float:
        r = residual(self.derivation.space, x)
        region = self.region
        return r if region is None else max(r, region.residual(x))


@dataclass
class CurveSegment:
    """Samples of one ambient solution, increasing in ``t``.

    ``velocities`` are the segment's own field values, used for Hermite
    interpolation between samples.
    """

    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    extension_id: int | None = None

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> np.ndarray:
        if t <= self.t_start:
            return self.points[0].copy()
        if t >= self.t_end:
            return self.points[-1].copy()
        i = bisect.bisect_right(self.times, t) - 1
        return dp.hermite(self.times[i], self.points[i], self.velocities[i],
                          self.times[i + 1], self.points[i + 1], self.velocities[i + 1], t)


@dataclass(frozen=True)
class DomainEnd:
    t: float
    closed: bool
    termination: str


@dataclass
class IntegralCurve:
    start: np.ndarray
    segments: list[CurveSegment]
    domain_kind: str
    left: DomainEnd
    right: DomainEnd
    restart_attempts: int = 0
    handoffs: int = 0

    @property
    def domain(self) -> tuple[float, float]:
        return self.left.t, self.right.t

    def covers(self, t: float) -> bool:
        lo, hi = self.domain
        return (lo < t < hi) or (t == lo and self.left.closed) or (t == hi and self.right.closed) or t == 0.0

    def __call__(self, t: float) -> np.ndarray:
        if not self.covers(t):
            raise OutOfDomainError(f"t = {t!r} is outside the curve's domain", self.domain)
        if t == 0.0 or not self.segments:
            return self.start.copy()
        starts = [s.t_start for s in self.segments]
        i = max(0, bisect.bisect_right(starts, t) - 1)
        return self.segments[i](t)

    def samples(self):
        """``(t, point, segment_index, extension_id)`` rows, strictly increasing in t."""
        last = -math.inf
        for k, seg in enumerate(self.segments):
            for t, x in zip(seg.times, seg.points):
                if t > last:
                    last = float(t)
                    yield float(t), x, k, seg.extension_id
        if not self.segments:
            yield 0.0, self.start, -1, None


@dataclass
class LiftedCurve:
    """Integral curve together with its lift ``t ↦ X(c(t))``."""

    curve: IntegralCurve
    derivation: GlobalDerivation = field(repr=False)

    @cached_property
    def tangent_samples(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        return [(t, x, self.derivation.field(x)) for t, x, _, _ in self.curve.samples()]

    @property
    def initial_value(self) -> tuple[np.ndarray, np.ndarray]:
        return self.curve.start, self.derivation.field(self.curve.start)

    def __call__(self, t: float) -> np.ndarray:
        return self.curve(t)

    def max_residual(self) -> float:
        S = self.derivation.space
        return max(residual(S, x) for _, x, _, _ in self.curve.samples())


@dataclass
class LocalRun:
    segment: CurveSegment | None
    outcome: str  # "budget", "exit", "no_limit", "fixed_point"
    limit_point: np.ndarray
    t_end: float


def _membership_level(S: EmbeddedSpace, r_start: float) -> float:
    return max(S.membership_tol, r_start)


def probe_blocked(ext: Extension, x0, direction: int, settings: FlowSettings) -> bool:
    """Whether the extension immediately leaves its domain from ``x0``.

    Euler probes ``x0 + direction·h·Y(x0)`` for ``h = probe_h, probe_h/2,
    probe_h/4``: blocked when each departure from the domain exceeds the
    membership tolerance and departure/h does not shrink by 1.5 per halving.
    """
    x0 = np.asarray(x0, dtype=float)
    try:
        y = ext(x0)
        base = ext.domain_residual(x0)
        eps = ext.derivation.space.membership_tol
        ratios = []
        for k in range(3):
            h = settings.probe_h * 0.5 ** k
            departure = ext.domain_residual(x0 + direction * h * y) - base
            if departure <= eps:
                return False
            ratios.append(departure / h)
    except DomainError:
        return True
    return not all(b * 1.5 <= a for a, b in zip(ratios, ratios[1:]))


def point_curve_probe(X: GlobalDerivation, x0, settings: FlowSettings | None = None) -> dict[int, bool]:
    """Blocked flag per direction for the default coefficients at ``x0``."""
    settings = settings or FlowSettings()
    ext = Extension(X)
    return {d: probe_blocked(ext, x0, d, settings) for d in (-1, 1)}


def _project(S: EmbeddedSpace, x: np.ndarray, scale: float) -> np.ndarray:
    from ..space import _descend  # compass/Newton descent shared with sampling

    y, r = _descend(S, x.copy(), scale, 1e-3 * S.membership_tol)
    return y if r <= residual(S, x) else x


def integrate_local(ext: Extension, x0, direction: int, settings: FlowSettings,
                    t0: float = 0.0, t_limit: float | None = None) -> LocalRun:
    """Integrate ``ẋ = Y(x)`` from ``(t0, x0)`` while the solution stays on the domain.

    ``t_limit`` is the largest ``|t|`` allowed (default ``settings.t_budget``).
    On the first step that leaves the on-space band the exit parameter is
    bisected to ``exit_bisect_tol`` with fresh single steps from the last
    accepted point.
    """
    S = ext.derivation.space
    if t_limit is None:
        t_limit = settings.t_budget
    tau_max = t_limit - abs(t0)
    y = np.asarray(x0, dtype=float).copy()

    def g(x):
        return direction * ext(x)

    times, points, vels = [t0], [y.copy()], []
    try:
        k = g(y)
    except DomainError:
        return LocalRun(None, "no_limit", y, t0)
    vels.append(direction * k)

    def finish(outcome: str, limit=None) -> LocalRun:
        seg = None
        if len(times) > 1:
            order = slice(None) if direction > 0 else slice(None, None, -1)
            seg = CurveSegment(np.array(times[order]), np.array(points[order]),
                               np.array(vels[order]), ext.ident)
        return LocalRun(seg, outcome, points[-1].copy() if limit is None else limit, times[-1])

    if tau_max <= 0:
        return finish("budget")
    h_max = min(settings.max_step, tau_max)
    h = dp.initial_step(g, y, k, settings.rtol, settings.atol, h_max)
    controller = dp.PIController()
    tau = 0.0
    slow = 1 if np.linalg.norm(k) < FIXED_POINT_SPEED else 0
    r_here = ext.domain_residual(y)

    while True:
        remaining = tau_max - tau
        if remaining <= 1e-14 * max(1.0, tau_max):
            return finish("budget")
        h = min(h, remaining, settings.max_step)
        h_min = 1e-14 * max(1.0, abs(t0) + tau)
        if h < h_min:
            return finish("no_limit")
        try:
            y_new, err_vec, k_new = dp.dp_step(g, y, h, k)
        except DomainError:
            h *= 0.5
            continue
        err = dp.error_norm(err_vec, y, y_new, settings.rtol, settings.atol)
        if err > 1.0 or not dp.is_finite(y_new):
            h = controller.reject(h, err if math.isfinite(err) else 1e10)
            continue
        if np.linalg.norm(y_new) > DIVERGENCE_NORM:
            return finish("no_limit")
        if settings.reproject:
            y_new = _project(S, y_new, settings.band_tol)
            try:
                k_new = g(y_new)
            except DomainError:
                return finish("no_limit")

        r_new = ext.domain_residual(y_new)
        y_mid = dp.hermite(0.0, y, k, h, y_new, k_new, 0.5 * h)
        r_mid = ext.domain_residual(y_mid)
        if r_new > settings.band_tol or r_mid > settings.band_tol:
            hi = 0.5 * h if r_mid > settings.band_tol else h
            lo_step = _bisect_exit(ext, g, y, k, hi, _membership_level(S, r_here),
                                   settings.exit_bisect_tol)
            if lo_step is not None:
                s, y_lo, k_lo = lo_step
                times.append(t0 + direction * (tau + s))
                points.append(y_lo)
                vels.append(direction * k_lo)
            return finish("exit")

        tau += h
        y, k, r_here = y_new, k_new, r_new
        times.append(t0 + direction * tau)
        points.append(y.copy())
        vels.append(direction * k)
        slow = slow + 1 if np.linalg.norm(k) < FIXED_POINT_SPEED else 0
        if slow >= FIXED_POINT_STREAK:
            if tau < tau_max:
                times.append(t0 + direction * tau_max)
                points.append(y.copy())
                vels.append(direction * k)
            return finish("fixed_point")
        h = controller.accept(h, err)


def _bisect_exit(ext: Extension, g, y: np.ndarray, k: np.ndarray, hi: float, level: float,
                 tol: float):
    """Largest on-domain step size in ``[0, hi]`` up to ``tol``.

    Returns ``(s, y(s), g(y(s)))`` or ``None`` if no positive step stays on.
    """
    lo, best = 0.0, None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        try:
            y_mid, _, k_mid = dp.dp_step(g, y, mid, k)
            on = ext.domain_residual(y_mid) <= level
        except DomainError:
            on = False
        if on:
            lo, best = mid, (mid, y_mid, k_mid)
        else:
            hi = mid
    return best


def _select(X: GlobalDerivation, x, direction: int, settings: FlowSettings,
            exclude: Extension | None = None) -> Extension | None:
    # first atlas entry (declaration order) containing x and not blocked, then the default;
    # the extension that just exited is skipped since it would retrace the same solution
    skip = None if exclude is None else exclude.ident
    for i, entry in enumerate(X.atlas):
        if i != skip and entry.region.contains(x, settings.band_tol):
            ext = Extension(X, i)
            if not probe_blocked(ext, x, direction, settings):
                return ext
    if exclude is not None and skip is None:
        return None
    ext = Extension(X)
    return None if probe_blocked(ext, x, direction, settings) else ext


def _one_direction(X: GlobalDerivation, x0: np.ndarray, direction: int, settings: FlowSettings,
                   t_limit: float):
    """Segments (in construction order), end, restart attempts and handoffs for one direction."""
    ext = _select(X, x0, direction, settings)
    if ext is None:
        return [], DomainEnd(0.0, True, EXIT_LIMIT_EXHAUSTED), 0, 0, True
    segments: list[CurveSegment] = []
    attempts = handoffs = 0
    t, x = 0.0, x0
    while True:
        run = integrate_local(ext, x, direction, settings, t0=t, t_limit=t_limit)
        progressed = run.segment is not None and abs(run.t_end - t) > settings.exit_bisect_tol
        if run.segment is not None:
            segments.append(run.segment)
        if run.outcome == "budget":
            return segments, DomainEnd(run.t_end, True, BUDGET), attempts, handoffs, False
        if run.outcome == "fixed_point":
            return segments, DomainEnd(run.t_end, True, FIXED_POINT_CONVERGENCE), attempts, handoffs, False
        if run.outcome == "no_limit":
            return segments, DomainEnd(run.t_end, False, EXIT_NO_LIMIT), attempts, handoffs, False
        # exit with a limit point on the band: try to restart there
        if handoffs > 0 and not progressed:
            return segments, DomainEnd(run.t_end, True, EXIT_LIMIT_EXHAUSTED), attempts, handoffs, False
        if handoffs >= settings.max_restarts:
            return segments, DomainEnd(run.t_end, True, BUDGET), attempts, handoffs, False
        attempts += 1
        x, t = run.limit_point, run.t_end
        ext = _select(X, x, direction, settings, exclude=ext)
        if ext is None:
            return segments, DomainEnd(t, True, EXIT_LIMIT_EXHAUSTED), attempts, handoffs, False
        handoffs += 1


def maximal_curve(X: GlobalDerivation, x0, settings: FlowSettings | None = None,
                  directions: tuple[int, ...] = (-1, 1),
                  t_limit: float | tuple[float, float] | None = None) -> LiftedCurve:
    """Construct the maximal lifted integral curve of ``X`` through ``x0``.

    ``t_limit`` caps ``|t|`` (default ``settings.t_budget``); a pair gives
    separate caps for the backward and forward sides. Restricting
    ``directions`` skips one side; that end is then reported as a closed end
    at 0 tagged BUDGET.
    """
    settings = settings or FlowSettings()
    S = X.space
    x0 = np.asarray(x0, dtype=float).ravel()
    r0 = residual(S, x0)
    if r0 > settings.band_tol:
        raise OffSpaceError(f"start point is off the space (residual {r0:.3g})", point=x0, residual=r0)
    if t_limit is None:
        t_limit = settings.t_budget
    limits = dict(zip((-1, 1), t_limit)) if isinstance(t_limit, tuple) else {-1: t_limit, 1: t_limit}
    ends, pieces, blocked = {}, {}, {}
    attempts = handoffs = 0
    for d in (-1, 1):
        if d not in directions:
            ends[d], pieces[d], blocked[d] = DomainEnd(0.0, True, BUDGET), [], False
            continue
        segs, end, a, h, b = _one_direction(X, x0, d, settings, limits[d])
        ends[d], pieces[d], blocked[d] = end, segs, b
        attempts += a
        handoffs += h
    segments = list(reversed(pieces[-1])) + pieces[1]
    both_blocked = blocked[-1] and blocked[1]
    kind = POINT if both_blocked else INTERVAL
    curve = IntegralCurve(x0.copy(), [] if both_blocked else segments, kind, ends[-1], ends[1],
                          attempts, handoffs)
    return LiftedCurve(curve, X)

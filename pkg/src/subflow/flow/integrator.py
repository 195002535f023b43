"""Dormand–Prince 5(4) stepping with a PI step-size controller.

Only the pieces the curve engine needs: a single trial step (reused for
exit bisection), the error norm, the controller and an initial step guess.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B5 = A[6] + (0.0,)
# difference between the 5th- and embedded 4th-order weights
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
ORDER = 5

Field = Callable[[np.ndarray], np.ndarray]


def dp_step(f: Field, y: np.ndarray, h: float, k1: np.ndarray):
    """One trial step from ``y`` with size ``h``; ``k1 = f(y)``.

    Returns ``(y_new, error_vector, f(y_new))``; the last stage equals
    ``f(y_new)`` (first-same-as-last), so callers can reuse it.
    """
    k = [k1]
    for i in range(1, 7):
        dy = sum((a * kj for a, kj in zip(A[i], k) if a != 0.0), np.zeros_like(y))
        k.append(np.asarray(f(y + h * dy), dtype=float))
    y_new = y + h * sum((b * kj for b, kj in zip(B5, k) if b != 0.0), np.zeros_like(y))
    err = h * sum((e * kj for e, kj in zip(E, k) if e != 0.0), np.zeros_like(y))
    return y_new, err, k[6]


def error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, rtol: float, atol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


class PIController:
    """Step-size controller ``h·err^-α·err_prev^β`` with Hairer's constants."""

    def __init__(self):
        self.err_prev = 1e-4

    def accept(self, h: float, err: float) -> float:
        err = max(err, 1e-10)
        factor = SAFETY * err ** -ALPHA * self.err_prev ** BETA
        self.err_prev = err
        return h * min(MAX_FACTOR, max(MIN_FACTOR, factor))

    def reject(self, h: float, err: float) -> float:
        factor = SAFETY * max(err, 1e-10) ** -ALPHA
        return h * min(1.0, max(MIN_FACTOR, factor))


def initial_step(f: Field, y: np.ndarray, f0: np.ndarray, rtol: float, atol: float,
                 h_max: float) -> float:
    """Starting step from the usual two-evaluation heuristic."""
    scale = atol + np.abs(y) * rtol
    d0 = float(np.sqrt(np.mean((y / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, h_max)
    f1 = np.asarray(f(y + h0 * f0), dtype=float)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / ORDER)
    return min(100 * h0, h1, h_max)


def hermite(t0: float, y0, d0, t1: float, y1, d1, t: float) -> np.ndarray:
    """Cubic Hermite interpolant through two samples with their derivatives."""
    h = t1 - t0
    if h == 0.0:
        return np.array(y0, dtype=float)
    s = (t - t0) / h
    y0 = np.asarray(y0, dtype=float)
    h01 = s * s * (3 - 2 * s)
    h10 = s * (1 - s) ** 2
    h11 = s * s * (s - 1)
    # y0 + h01 (y1 - y0) form: exact on constant data
    return y0 + h01 * (np.asarray(y1) - y0) + h * (h10 * np.asarray(d0) + h11 * np.asarray(d1))


def is_finite(y: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(y)))

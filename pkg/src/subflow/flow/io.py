"""Trajectory CSV and per-curve summary records."""

from __future__ import annotations

import csv
import io
from typing import TextIO

from .engine import LiftedCurve


def trajectory_header(n: int) -> list[str]:
    return (["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"v{i}" for i in range(1, n + 1)]
            + ["segment", "extension_id"])


def _num(v) -> str:
    return repr(float(v))


def write_trajectory_csv(lifted: LiftedCurve, out: TextIO) -> None:
    """One row per sample: ``t,x1..xn,v1..vn,segment,extension_id``.

    ``v`` is the lifted value ``X(c(t))``. Rows are strictly increasing in t;
    junction samples shared by two segments are written once. A point curve
    produces a single row with segment ``-1``.
    """
    n = lifted.derivation.space.ambient_dim
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(trajectory_header(n))
    for (t, x, seg, ext), (_, _, v) in zip(lifted.curve.samples(), lifted.tangent_samples):
        writer.writerow([_num(t)] + [_num(c) for c in x] + [_num(c) for c in v]
                        + [seg, "default" if ext is None else ext])


def trajectory_csv(lifted: LiftedCurve) -> str:
    buf = io.StringIO()
    write_trajectory_csv(lifted, buf)
    return buf.getvalue()


def curve_summary(lifted: LiftedCurve) -> dict:
    c = lifted.curve
    return {
        "start": [float(v) for v in c.start],
        "domain_kind": c.domain_kind,
        "domain": {
            "left": {"t": c.left.t, "closed": c.left.closed, "termination": c.left.termination},
            "right": {"t": c.right.t, "closed": c.right.closed, "termination": c.right.termination},
        },
        "restart_attempts": c.restart_attempts,
        "handoffs": c.handoffs,
        "segments": len(c.segments),
        "extension_ids": ["default" if s.extension_id is None else s.extension_id for s in c.segments],
        "max_residual": lifted.max_residual(),
    }

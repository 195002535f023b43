"""
Leaving the closed half-line
============================

The field -d/dx pushes points of [0, inf) towards the boundary.  The
curve from x = 1 reaches 0 at t = 1, the integrator detects the exit, and
one restart attempt confirms that nothing continues it.
"""

from subflow import FlowSettings, GlobalDerivation, maximal_curve
from subflow.corpus import HALF_LINE

minus = GlobalDerivation(HALF_LINE, ("-1",))

for settings in (FlowSettings(), FlowSettings().refined()):
    c = maximal_curve(minus, (1.0,), settings).curve
    right = c.right
    print(f"rtol={settings.rtol:g}: right end t={right.t!r} closed={right.closed} "
          f"termination={right.termination} restarts={c.restart_attempts}")

# the quadratic field blows up in finite time and has no limit
blow = maximal_curve(GlobalDerivation(HALF_LINE, ("x1*x1",)), (1.0,)).curve
print("x^2 d/dx from 1 ends at", blow.right.t, "with", blow.right.termination)

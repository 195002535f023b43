"""
A curve that cannot move
========================

On the L-shaped union of the two negative half axes, the constant field
(1, 1) is a perfectly good derivation at the corner, yet no curve in the
set follows it.  The maximal integral curve there is a single point.
"""

from subflow import FlowSettings, GlobalDerivation, maximal_curve
from subflow.corpus import L_CORNER
from subflow.flow import curve_summary, point_curve_probe, trajectory_csv

diag = GlobalDerivation(L_CORNER, ("1", "1"))

# both directions are blocked right at the start
print("blocked per direction:", point_curve_probe(diag, (0.0, 0.0)))

lifted = maximal_curve(diag, (0.0, 0.0), FlowSettings(t_budget=3.0))
print("domain kind:", lifted.curve.domain_kind)
print(trajectory_csv(lifted))

# the Euler field, by contrast, slides along an arm
euler = GlobalDerivation(L_CORNER, ("x1", "x2"))
s = curve_summary(maximal_curve(euler, (-1.0, 0.0), FlowSettings(t_budget=3.0)))
print("Euler field domain:", s["domain"]["left"]["t"], s["domain"]["right"]["t"])

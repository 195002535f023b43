"""
Flows and extension handoffs
============================

An extension atlas offers region-local coefficient sets that agree with
the derivation on the space.  The engine swaps between them when a local
run stops, and the stitched curve is still the rotation.
"""

import math

import numpy as np

from subflow import FlowSettings, flow_map, maximal_curve
from subflow.corpus import ROTATION, ROTATION_ATLAS
from subflow.flow import local_group_residual, uniqueness_probe

c = maximal_curve(ROTATION_ATLAS, (1.0, 0.0), FlowSettings(t_budget=4 * math.pi))
print("handoffs:", c.curve.handoffs)
print("extensions used:", ["default" if s.extension_id is None else s.extension_id for s in c.curve.segments])
ts = np.linspace(-4 * math.pi, 4 * math.pi, 401)
print("max distance to (cos t, sin t):", max(np.linalg.norm(c(t) - [math.cos(t), math.sin(t)]) for t in ts))

# time-t maps compose
print("flow to t=pi:", flow_map(ROTATION, (1.0, 0.0), math.pi))
print("group residual at (pi/4, pi/4):", local_group_residual(ROTATION, (1.0, 0.0), math.pi / 4, math.pi / 4))

# tightening tolerances does not move the curve
rep = uniqueness_probe(ROTATION, (1.0, 0.0), FlowSettings(t_budget=10.0))
print("refinement sup distance:", rep.sup_distance)

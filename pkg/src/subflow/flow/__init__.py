"""Maximal integral curves, flow maps and their numerical checks."""

from .engine import (
    BUDGET, EXIT_LIMIT_EXHAUSTED, EXIT_NO_LIMIT, FIXED_POINT_CONVERGENCE, INTERVAL, POINT,
    CurveSegment, DomainEnd, Extension, FlowSettings, IntegralCurve, LiftedCurve, LocalRun,
    integrate_local, maximal_curve, point_curve_probe, probe_blocked,
)
from .maps import (
    UniquenessReport, curve_distance, flow_map, local_group_residual, ode_residual,
    uniqueness_probe,
)
from .io import curve_summary, trajectory_csv, trajectory_header, write_trajectory_csv

__all__ = [
    "BUDGET", "EXIT_LIMIT_EXHAUSTED", "EXIT_NO_LIMIT", "FIXED_POINT_CONVERGENCE", "INTERVAL",
    "POINT", "CurveSegment", "DomainEnd", "Extension", "FlowSettings", "IntegralCurve",
    "LiftedCurve", "LocalRun", "UniquenessReport", "curve_distance", "curve_summary",
    "flow_map", "integrate_local", "local_group_residual", "maximal_curve", "ode_residual",
    "point_curve_probe", "probe_blocked", "trajectory_csv", "trajectory_header", "uniqueness_probe",
    "write_trajectory_csv",
]

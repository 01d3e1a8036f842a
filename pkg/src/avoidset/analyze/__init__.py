"""Exact verification and set analysis on finite point clouds."""

from __future__ import annotations

from .cloud import PointCloud, load_cloud, read_cloud_csv
from .falconer import IntervalCovering, falconer_A, falconer_angle_check, falconer_C_cover
from .geometry import angle_inventory, chord_length, direction_report, distance_report, radial_projection
from .verify import Violation, naive_violations, verify_exclusion

__all__ = [
    "PointCloud",
    "load_cloud",
    "read_cloud_csv",
    "IntervalCovering",
    "falconer_A",
    "falconer_C_cover",
    "falconer_angle_check",
    "angle_inventory",
    "chord_length",
    "direction_report",
    "distance_report",
    "radial_projection",
    "Violation",
    "naive_violations",
    "verify_exclusion",
]

"""Collaborative aquatic positioning: geometry, estimators, simulator and metrics."""

from ._core import (
    CapError,
    Intrinsics,
    RigidTransform,
    TiltFilter,
    accel_to_tilt,
    back_project,
    calibrate_depth,
    compose,
    estimate,
    euler_zyx_to_rotation,
    evaluate,
    intersect_with_zplane,
    invert,
    line_from_points,
    med,
    project_point,
    simulate,
    solve_pnp_planar,
    tag_center_pixel,
    tilt_error_regression,
    transform_point,
)

__all__ = [
    "CapError",
    "Intrinsics",
    "RigidTransform",
    "TiltFilter",
    "accel_to_tilt",
    "back_project",
    "calibrate_depth",
    "compose",
    "estimate",
    "euler_zyx_to_rotation",
    "evaluate",
    "intersect_with_zplane",
    "invert",
    "line_from_points",
    "med",
    "project_point",
    "simulate",
    "solve_pnp_planar",
    "tag_center_pixel",
    "tilt_error_regression",
    "transform_point",
]

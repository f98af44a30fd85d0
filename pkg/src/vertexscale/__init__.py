"""Vertex-scaled discrete conformal structures on closed triangulated surfaces.

Scaled metrics in flat and hyperbolic background geometry, classification of
degenerate conformal factors, the extended convex curvature energy, and a
prescribed-curvature Newton solver backed by global rigidity.
"""
from .common import Geometry
from .mesh import (
    DegenerateBaseMetricError,
    MeshError,
    MeshFormat,
    MetricMesh,
    MissingEdgeLengthError,
    NotClosedError,
    NotOrientedError,
    ParseError,
    TriMesh,
    ValidationIssue,
    ValidationReport,
    euler_characteristic,
    load_mesh,
    parse_mesh,
    to_metric_json,
    validate,
)
from .triangle import (
    DegenerateTriangleError,
    RegionClass,
    TriangleConformalState,
    TriangleInput,
    WrongGeometryError,
    angle_jacobian,
    angles,
    area,
    area_derivative_check,
    circumcenter_signed_distance,
    classify,
    conformal_state,
    extended_angles,
    h_values,
    q_value,
    scaled_lengths,
    v_region_threshold,
)
from .energy import (
    QuadratureConfig,
    QuadratureFailure,
    curvature,
    curvature_jacobian,
    degenerate_faces,
    face_regions,
    global_energy,
    triangle_energy,
)
from .solver import (
    DegenerateFaceError,
    GaussBonnetResult,
    RigidityVerdict,
    SolverConfig,
    SolveResult,
    TargetSumMismatch,
    gauss_bonnet_check,
    rigidity_check,
    solve_prescribed_curvature,
)

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "TriMesh",
    "MetricMesh",
    "MeshFormat",
    "MeshError",
    "ParseError",
    "NotClosedError",
    "NotOrientedError",
    "DegenerateBaseMetricError",
    "MissingEdgeLengthError",
    "ValidationIssue",
    "ValidationReport",
    "euler_characteristic",
    "load_mesh",
    "parse_mesh",
    "to_metric_json",
    "validate",
    "TriangleInput",
    "RegionClass",
    "TriangleConformalState",
    "DegenerateTriangleError",
    "WrongGeometryError",
    "scaled_lengths",
    "q_value",
    "h_values",
    "classify",
    "v_region_threshold",
    "angles",
    "extended_angles",
    "angle_jacobian",
    "area",
    "area_derivative_check",
    "circumcenter_signed_distance",
    "conformal_state",
    "QuadratureConfig",
    "QuadratureFailure",
    "triangle_energy",
    "curvature",
    "global_energy",
    "curvature_jacobian",
    "degenerate_faces",
    "face_regions",
    "SolverConfig",
    "SolveResult",
    "RigidityVerdict",
    "GaussBonnetResult",
    "TargetSumMismatch",
    "DegenerateFaceError",
    "solve_prescribed_curvature",
    "rigidity_check",
    "gauss_bonnet_check",
]

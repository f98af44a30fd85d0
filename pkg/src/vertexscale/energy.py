"""Curvature energy: per-face line integrals, mesh curvature, sparse Hessian.

The per-face action is the line integral of the extended-angle 1-form
``sum_a ext_angle_a du_a`` along a straight segment; the 1-form is closed,
so the value is path independent. The global functional

    F(u) = -sum_faces F_face(u) + 2 pi sum_v u_v

is C^1 and convex with gradient equal to the extended curvature
``K_v = 2 pi - sum of incident extended angles``.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.optimize import brentq

from .common import Geometry
from .mesh import MetricMesh
from .triangle import (
    MAX_ABS_FACTOR,
    TriangleInput,
    angle_jacobian_array,
    extended_angles_array,
    q_values_array,
    region_array,
)

__all__ = [
    "QuadratureConfig",
    "QuadratureFailure",
    "triangle_energy",
    "curvature",
    "global_energy",
    "curvature_jacobian",
    "degenerate_faces",
    "face_regions",
    "check_factors",
]


class QuadratureFailure(Exception):
    """Requested tolerance unreachable within the subdivision depth limit."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Absolute tolerance and subdivision-depth cap for the line integrals."""

    tolerance: float = 1e-10
    max_depth: int = 40

    def __post_init__(self):
        if not (self.tolerance > 0.0 and math.isfinite(self.tolerance)):
            raise ValueError("tolerance must be a positive finite number")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


_DEFAULT_QUAD = QuadratureConfig()

# 15-point Kronrod extension of 7-point Gauss-Legendre (QUADPACK dqk15 nodes)
_GK_ABSC = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_GK_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])


def _gk_panel(f, a: float, b: float) -> tuple:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = f(mid + half * _GK_ABSC)
    kron = half * float(y @ _GK_WEIGHTS)
    gauss = half * float(y[1::2] @ _G7_WEIGHTS)
    return kron, abs(kron - gauss)


def _integrate(f, a: float, b: float, tol: float, max_depth: int) -> float:
    """Globally adaptive Gauss-Kronrod bisection on [a, b]."""
    if a == b:
        return 0.0
    val, err = _gk_panel(f, a, b)
    # heap of (-error, tiebreak, lo, hi, value, depth)
    counter = 0
    panels = [(-err, counter, a, b, val, 0)]
    while sum(-p[0] for p in panels) > tol:
        neg_err, _, lo, hi, _, depth = heapq.heappop(panels)
        if depth >= max_depth:
            raise QuadratureFailure(
                f"tolerance {tol:g} unreachable: panel [{lo:g}, {hi:g}] still has "
                f"error {-neg_err:g} at depth {max_depth}"
            )
        mid = 0.5 * (lo + hi)
        for seg in ((lo, mid), (mid, hi)):
            v, e = _gk_panel(f, *seg)
            counter += 1
            heapq.heappush(panels, (-e, counter, seg[0], seg[1], v, depth + 1))
    # sum panels in interval order for a reproducible reduction
    return float(sum(p[4] for p in sorted(panels, key=lambda p: p[2])))


def _region_crossings(geometry: Geometry, base: np.ndarray, start: np.ndarray,
                      direction: np.ndarray) -> list:
    """Parameters in (0, 1) where Q vanishes along start + t * direction.

    The extended angles are smooth except on {Q = 0}, so splitting the
    segment there keeps every quadrature panel smooth. Crossings are
    bracketed on a fixed grid and polished by bisection (brentq).
    """
    ts = np.linspace(0.0, 1.0, 65)
    pts = start[None, :] + ts[:, None] * direction[None, :]
    qs = q_values_array(geometry, base[None, :], pts)
    if not np.all(np.isfinite(qs)):
        raise OverflowError("degeneracy polynomial overflowed along the integration path")

    def q_at(t):
        return float(q_values_array(geometry, base, start + t * direction))

    roots = []
    for s in range(len(ts) - 1):
        qa, qb = qs[s], qs[s + 1]
        if qa == 0.0:
            if 0.0 < ts[s] < 1.0:
                roots.append(float(ts[s]))
        elif qa * qb < 0.0:
            roots.append(float(brentq(q_at, ts[s], ts[s + 1], xtol=1e-14, rtol=8.9e-16)))
    if qs[-1] == 0.0:
        pass  # endpoint, not an interior split
    out = []
    for t in sorted(roots):
        if 0.0 < t < 1.0 and (not out or t - out[-1] > 1e-13):
            out.append(t)
    return out


def _segment_energy(geometry: Geometry, base: np.ndarray, u_from: np.ndarray,
                    u_to: np.ndarray, quad: QuadratureConfig) -> float:
    direction = u_to - u_from
    if not direction.any():
        return 0.0

    def integrand(ts):
        pts = u_from[None, :] + np.asarray(ts)[:, None] * direction[None, :]
        ext = extended_angles_array(geometry, base[None, :], pts)
        return ext @ direction

    knots = [0.0] + _region_crossings(geometry, base, u_from, direction) + [1.0]
    tol_piece = quad.tolerance / (len(knots) - 1)
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        total += _integrate(integrand, lo, hi, tol_piece, quad.max_depth)
    return total


def triangle_energy(tri: TriangleInput, base_point=(0.0, 0.0, 0.0),
                    quad: QuadratureConfig | None = None) -> float:
    """Extended per-face action at ``tri.factors``, integrated from ``base_point``.

    Computed by adaptive quadrature of the extended-angle 1-form along the
    straight segment; the segment is pre-split where it crosses a region
    boundary so every panel sees a smooth integrand.
    """
    quad = quad or _DEFAULT_QUAD
    u0 = np.asarray([float(x) for x in base_point])
    if u0.shape != (3,):
        raise ValueError("base_point must have three entries")
    if not np.all(np.isfinite(u0)) or np.any(np.abs(u0) > MAX_ABS_FACTOR):
        raise OverflowError("base_point outside supported factor range")
    u1 = np.asarray(tri.factors)
    return _segment_energy(tri.geometry, np.asarray(tri.base), u0, u1, quad)


def check_factors(mesh: MetricMesh, u) -> np.ndarray:
    """Validate a per-vertex factor vector against the mesh."""
    arr = np.asarray(u, dtype=float)
    n = mesh.mesh.vertex_count
    if arr.shape != (n,):
        raise ValueError(f"expected {n} factors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("factors must be finite")
    if np.any(np.abs(arr) > MAX_ABS_FACTOR):
        raise OverflowError(f"|factor| > {MAX_ABS_FACTOR} is not supported")
    return arr


def curvature(mesh: MetricMesh, u) -> np.ndarray:
    """Extended curvature 2*pi - sum of incident extended angles, per vertex.

    Defined for every factor vector; faces are reduced in ascending index
    order so the result is bit-reproducible.
    """
    u = check_factors(mesh, u)
    faces = mesh.mesh.faces_array
    kvec = np.full(mesh.mesh.vertex_count, 2.0 * math.pi)
    if faces.shape[0]:
        ext = extended_angles_array(mesh.geometry, mesh.face_base_lengths(), u[faces])
        np.subtract.at(kvec, faces.reshape(-1), ext.reshape(-1))
    return kvec


def face_regions(mesh: MetricMesh, u) -> np.ndarray:
    """Per-face region code: -1 admissible, else the apex slot."""
    u = check_factors(mesh, u)
    faces = mesh.mesh.faces_array
    if not faces.shape[0]:
        return np.empty(0, dtype=int)
    return region_array(mesh.geometry, mesh.face_base_lengths(), u[faces])


def degenerate_faces(mesh: MetricMesh, u) -> list:
    """Indices of faces whose scaled triangle is degenerate at ``u``."""
    return [int(i) for i in np.nonzero(face_regions(mesh, u) >= 0)[0]]


def global_energy(mesh: MetricMesh, u, quad: QuadratureConfig | None = None) -> float:
    """Convex potential whose gradient is the extended curvature.

    Base point fixed at u = 0, which is admissible for every valid base
    metric. The quadrature tolerance is split evenly over the faces.
    """
    quad = quad or _DEFAULT_QUAD
    u = check_factors(mesh, u)
    faces = mesh.mesh.faces_array
    total = 0.0
    if faces.shape[0]:
        fb = mesh.face_base_lengths()
        per_face = QuadratureConfig(quad.tolerance / faces.shape[0], quad.max_depth)
        zero = np.zeros(3)
        for n in range(faces.shape[0]):
            total += _segment_energy(mesh.geometry, fb[n], zero, u[faces[n]], per_face)
    return -total + 2.0 * math.pi * float(u.sum())


def _hessian_layout(mesh: MetricMesh):
    """Flat accumulation slots for the (vertex, vertex) Hessian entries.

    Slot layout: one slot per vertex (diagonal), then two per edge (both
    orientations). Accumulating per-face contributions into slots with
    ``np.add.at`` is order-deterministic and keeps the assembled matrix
    exactly symmetric, because (a, b) and (b, a) receive identical addends
    in identical order.
    """
    if mesh._hessian_layout is not None:
        return mesh._hessian_layout
    tri_mesh = mesh.mesh
    n = tri_mesh.vertex_count
    faces = tri_mesh.faces_array
    nf = faces.shape[0]
    slots = np.empty((nf, 3, 3), dtype=np.int64)
    edge_index = tri_mesh.edge_index
    for f in range(nf):
        for r in range(3):
            for s in range(3):
                a, b = int(faces[f, r]), int(faces[f, s])
                if a == b:
                    slots[f, r, s] = a
                else:
                    e = edge_index[(a, b) if a < b else (b, a)]
                    slots[f, r, s] = n + 2 * e + (0 if a < b else 1)
    nslots = n + 2 * tri_mesh.edge_count
    rows = np.empty(nslots, dtype=np.int64)
    cols = np.empty(nslots, dtype=np.int64)
    rows[:n] = np.arange(n)
    cols[:n] = np.arange(n)
    for e, (a, b) in enumerate(tri_mesh.edges):
        rows[n + 2 * e], cols[n + 2 * e] = a, b
        rows[n + 2 * e + 1], cols[n + 2 * e + 1] = b, a
    mesh._hessian_layout = (slots, rows, cols, nslots)
    return mesh._hessian_layout


def curvature_jacobian(mesh: MetricMesh, u) -> scipy.sparse.csr_matrix:
    """Sparse d(curvature)/d(factors); symmetric, PSD (flat) or PD (hyperbolic).

    Faces classified degenerate contribute zero blocks: the extended angles
    are locally constant there, so this is the almost-everywhere generalized
    Hessian of the global energy.
    """
    u = check_factors(mesh, u)
    tri_mesh = mesh.mesh
    n = tri_mesh.vertex_count
    faces = tri_mesh.faces_array
    nf = faces.shape[0]
    blocks = np.zeros((nf, 3, 3))
    if nf:
        fb = mesh.face_base_lengths()
        fu = u[faces]
        reg = region_array(mesh.geometry, fb, fu)
        admissible = reg < 0
        if admissible.any():
            blocks[admissible] = -angle_jacobian_array(mesh.geometry, fb[admissible], fu[admissible])
    slots, rows, cols, nslots = _hessian_layout(mesh)
    values = np.zeros(nslots)
    if nf:
        np.add.at(values, slots.reshape(-1), blocks.reshape(-1))
    out = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    return out

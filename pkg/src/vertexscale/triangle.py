"""Single-triangle vertex-scaling math for both geometries.

Scaled edge lengths, the degeneracy polynomial Q and its sign regions,
h-values, inner angles with their continuous extension by constants, and
the 3x3 angle Jacobian.

Conventions: slots 0, 1, 2 address the triangle corners. ``base[a]`` is the
base length of the edge opposite corner ``a``, ``factors[a]`` the
logarithmic scale factor at corner ``a``. Degeneracy decisions are always
made on the sign of Q, never on floating-point triangle-inequality tests of
the scaled lengths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .common import Geometry

__all__ = [
    "MAX_ABS_FACTOR",
    "BASE_LENGTH_RANGE",
    "DegenerateTriangleError",
    "WrongGeometryError",
    "TriangleInput",
    "RegionClass",
    "TriangleConformalState",
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
    "edge_weights",
    "scaled_lengths_array",
    "q_values_array",
    "h_values_array",
    "region_array",
    "angles_from_lengths",
    "extended_angles_array",
    "angle_jacobian_array",
    "areas_array",
]

# factors and base lengths outside these bounds are rejected instead of
# silently saturating in exp/cosh
MAX_ABS_FACTOR = 700.0
BASE_LENGTH_RANGE = (1e-8, 1e3)

# arccos arguments may poke past +/-1 by rounding; anything worse is a bug
_COS_SLACK = 1e-12

_NEXT = (1, 2, 0)
_PREV = (2, 0, 1)


class DegenerateTriangleError(Exception):
    """Operation requires an admissible (nondegenerate) scaled triangle."""


class WrongGeometryError(Exception):
    """Operation is only defined for the other background geometry."""


@dataclass(frozen=True)
class TriangleInput:
    """One triangle's base metric and conformal factors.

    ``base`` must satisfy the strict triangle inequality (nondegenerate
    initial metric); entries outside the supported ranges raise
    ``OverflowError`` rather than saturating.
    """

    geometry: Geometry
    base: tuple
    factors: tuple

    def __post_init__(self):
        base = tuple(float(x) for x in self.base)
        factors = tuple(float(x) for x in self.factors)
        if len(base) != 3 or len(factors) != 3:
            raise ValueError("base and factors must each have three entries")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        lo, hi = BASE_LENGTH_RANGE
        for l in base:
            if not math.isfinite(l) or l <= 0.0:
                raise ValueError(f"base lengths must be positive, got {l}")
            if not lo < l < hi:
                raise OverflowError(f"base length {l} outside supported range ({lo}, {hi})")
        for u in factors:
            if not math.isfinite(u):
                raise ValueError(f"factors must be finite, got {u}")
            if abs(u) > MAX_ABS_FACTOR:
                raise OverflowError(f"|factor| > {MAX_ABS_FACTOR} is not supported")
        li, lj, lk = base
        if li + lj <= lk or li + lk <= lj or lj + lk <= li:
            raise ValueError(f"base lengths {base} violate the strict triangle inequality")


@dataclass(frozen=True)
class RegionClass:
    """Admissibility class: admissible, or collapsed with one apex corner."""

    apex: Optional[int] = None

    @property
    def degenerate(self) -> bool:
        return self.apex is not None

    def __str__(self):
        return "NonDegenerate" if self.apex is None else f"Degenerate({'ijk'[self.apex]})"


@dataclass(frozen=True)
class TriangleConformalState:
    """All per-triangle derived quantities for one input."""

    input: TriangleInput
    lengths: tuple
    q: float
    h: tuple
    region: RegionClass
    angles: Optional[tuple]
    extended_angles: tuple


# ---------------------------------------------------------------------------
# array kernels (broadcast over a leading batch axis; last axis = corner slot)

def edge_weights(geometry: Geometry, base) -> np.ndarray:
    """Per-edge weight entering the scaling rule: l itself, or sinh(l/2)."""
    b = np.asarray(base, dtype=float)
    if geometry is Geometry.HYPERBOLIC:
        return np.sinh(0.5 * b)
    return b


def scaled_lengths_array(geometry: Geometry, base, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    base = np.asarray(base, dtype=float)
    half = 0.5 * (u[..., _NEXT] + u[..., _PREV])
    with np.errstate(over="ignore"):
        if geometry is Geometry.EUCLIDEAN:
            return base * np.exp(half)
        # arcsinh = log(x + sqrt(x^2 + 1)) keeps small arguments exact
        return 2.0 * np.arcsinh(np.sinh(0.5 * base) * np.exp(half))


def q_values_array(geometry: Geometry, base, u) -> np.ndarray:
    """Degeneracy polynomial; positive exactly on admissible inputs."""
    w2 = edge_weights(geometry, base) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        a = w2 * np.exp(-np.asarray(u, dtype=float))
        ai, aj, ak = a[..., 0], a[..., 1], a[..., 2]
        q = 2.0 * (ai * aj + ai * ak + aj * ak) - ai * ai - aj * aj - ak * ak
        if geometry is Geometry.HYPERBOLIC:
            q = q + 4.0 * w2[..., 0] * w2[..., 1] * w2[..., 2]
    return q


def h_values_array(geometry: Geometry, base, u) -> np.ndarray:
    w2 = edge_weights(geometry, base) ** 2
    with np.errstate(over="ignore", invalid="ignore"):
        a = w2 * np.exp(-np.asarray(u, dtype=float))
        tot = a.sum(axis=-1, keepdims=True)
        return w2 * (tot - 2.0 * a)


def region_array(geometry: Geometry, base, u) -> np.ndarray:
    """-1 for admissible samples, else the apex slot (0, 1 or 2)."""
    q = q_values_array(geometry, base, u)
    h = h_values_array(geometry, base, u)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(h))):
        raise OverflowError("degeneracy polynomial overflowed; factors too extreme")
    return np.where(q > 0.0, -1, np.argmin(h, axis=-1))


def angles_from_lengths(geometry: Geometry, lengths) -> np.ndarray:
    """Inner angles by the cosine law; caller guarantees admissibility."""
    l = np.asarray(lengths, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        if geometry is Geometry.EUCLIDEAN:
            lb, lc = l[..., _NEXT], l[..., _PREV]
            cos = (lb * lb + lc * lc - l * l) / (2.0 * lb * lc)
        else:
            ch = np.cosh(l)
            sh = np.sinh(l)
            cos = (ch[..., _NEXT] * ch[..., _PREV] - ch) / (sh[..., _NEXT] * sh[..., _PREV])
    if not np.all(np.isfinite(cos)):
        raise OverflowError("cosine law overflowed; scaled lengths too extreme")
    excess = float(np.max(np.abs(cos))) - 1.0
    if excess > _COS_SLACK:
        raise AssertionError(
            f"cosine-law argument exceeds [-1, 1] by {excess:.3e}; admissibility was misclassified"
        )
    return np.arccos(np.clip(cos, -1.0, 1.0))


def extended_angles_array(geometry: Geometry, base, u) -> np.ndarray:
    """Continuous extension of the angles to all factor triples.

    Admissible rows get the cosine-law angles; a row collapsed at apex a
    gets pi in slot a and 0 elsewhere.
    """
    base_b, u_b = np.broadcast_arrays(np.asarray(base, dtype=float), np.asarray(u, dtype=float))
    shape = u_b.shape
    base2 = base_b.reshape(-1, 3)
    u2 = u_b.reshape(-1, 3)
    reg = region_array(geometry, base2, u2)
    out = np.zeros_like(u2)
    nd = reg < 0
    if nd.any():
        out[nd] = angles_from_lengths(geometry, scaled_lengths_array(geometry, base2[nd], u2[nd]))
    deg = ~nd
    if deg.any():
        rows = np.nonzero(deg)[0]
        out[rows, reg[rows]] = math.pi
    return out.reshape(shape)


def angle_jacobian_array(geometry: Geometry, base, u) -> np.ndarray:
    """d(angles)/d(factors), shape (N, 3, 3); rows must be admissible."""
    base_b, u_b = np.broadcast_arrays(np.asarray(base, dtype=float), np.asarray(u, dtype=float))
    base2 = base_b.reshape(-1, 3)
    u2 = u_b.reshape(-1, 3)
    l = scaled_lengths_array(geometry, base2, u2)
    ang = angles_from_lengths(geometry, l)
    n = l.shape[0]
    jac = np.empty((n, 3, 3))
    if geometry is Geometry.EUCLIDEAN:
        s = 0.5 * l.sum(axis=-1)
        area4 = 4.0 * np.sqrt(s * (s - l[:, 0]) * (s - l[:, 1]) * (s - l[:, 2]))
        cos = np.cos(ang)
        for a in range(3):
            b, c = _NEXT[a], _PREV[a]
            jac[:, a, a] = -(l[:, a] * l[:, a]) / area4
            jac[:, a, b] = l[:, a] * l[:, b] * cos[:, c] / area4
            jac[:, a, c] = l[:, a] * l[:, c] * cos[:, b] / area4
    else:
        ch = np.cosh(l)
        amp = np.sinh(l[:, 1]) * np.sinh(l[:, 2]) * np.sin(ang[:, 0])
        for a in range(3):
            b, c = _NEXT[a], _PREV[a]
            jac[:, a, a] = (
                ch[:, b] ** 2 + ch[:, c] ** 2
                - 2.0 * ch[:, a] * ch[:, b] * ch[:, c]
                + (1.0 - ch[:, a]) * (ch[:, b] + ch[:, c])
            ) / (amp * (1.0 + ch[:, b]) * (1.0 + ch[:, c]))
            jac[:, a, b] = (ch[:, a] + ch[:, b] - ch[:, c] - 1.0) / (amp * (ch[:, c] + 1.0))
            jac[:, a, c] = (ch[:, a] + ch[:, c] - ch[:, b] - 1.0) / (amp * (ch[:, b] + 1.0))
    if not np.all(np.isfinite(jac)):
        raise OverflowError("angle Jacobian overflowed")
    return jac


def areas_array(geometry: Geometry, base, u) -> np.ndarray:
    """Triangle areas; rows must be admissible."""
    l = scaled_lengths_array(geometry, np.asarray(base, float), np.asarray(u, float))
    if geometry is Geometry.EUCLIDEAN:
        s = 0.5 * l.sum(axis=-1)
        return np.sqrt(s * (s - l[..., 0]) * (s - l[..., 1]) * (s - l[..., 2]))
    return math.pi - angles_from_lengths(geometry, l).sum(axis=-1)


# ---------------------------------------------------------------------------
# single-triangle operations

def scaled_lengths(tri: TriangleInput) -> tuple:
    """Vertex-scaled edge lengths (l_i, l_j, l_k)."""
    l = scaled_lengths_array(tri.geometry, tri.base, tri.factors)
    if not np.all(np.isfinite(l)):
        raise OverflowError("scaled lengths overflowed")
    return tuple(float(x) for x in l)


def q_value(tri: TriangleInput) -> float:
    """Degeneracy polynomial Q; the scaled triangle is admissible iff Q > 0."""
    q = float(q_values_array(tri.geometry, tri.base, tri.factors))
    if not math.isfinite(q):
        raise OverflowError("degeneracy polynomial overflowed")
    return q


def h_values(tri: TriangleInput) -> tuple:
    """(h_i, h_j, h_k); when Q <= 0 exactly one is negative."""
    h = h_values_array(tri.geometry, tri.base, tri.factors)
    if not np.all(np.isfinite(h)):
        raise OverflowError("h-values overflowed")
    return tuple(float(x) for x in h)


def classify(tri: TriangleInput) -> RegionClass:
    """Region of the factor triple: admissible iff Q > 0.

    On Q <= 0 the apex is the corner with the minimal h-value, which for
    Q < 0 is the unique negative one; the boundary Q = 0 counts as
    degenerate.
    """
    if q_value(tri) > 0.0:
        return RegionClass(None)
    h = h_values(tri)
    return RegionClass(min(range(3), key=lambda a: h[a]))


def v_region_threshold(geometry: Geometry, base, u_rest, apex: int) -> float:
    """Critical factor value at ``apex``: degenerate there iff u_apex <= threshold.

    ``u_rest`` holds the factors of the two remaining corners in slot order.
    The value is the log of the quadratic root (-B + sqrt(D)) / (2A) of the
    degeneracy polynomial viewed in exp(-u_apex).
    """
    if apex not in (0, 1, 2):
        raise ValueError(f"apex must be a corner slot 0, 1 or 2, got {apex}")
    up, uq = (float(x) for x in u_rest)
    # reuse the range/validity checks
    probe = [0.0, 0.0, 0.0]
    probe[[s for s in range(3) if s != apex][0]] = up
    probe[[s for s in range(3) if s != apex][1]] = uq
    tri = TriangleInput(geometry, base, tuple(probe))
    w = edge_weights(tri.geometry, tri.base)
    wb = float(w[apex])
    p, q = (s for s in range(3) if s != apex)
    wp, wq = float(w[p]), float(w[q])
    xp, xq = math.exp(-up), math.exp(-uq)
    if tri.geometry is Geometry.EUCLIDEAN:
        root = (wp * math.sqrt(xp) + wq * math.sqrt(xq)) ** 2 / (wb * wb)
    else:
        root = (wp * wp * xp + wq * wq * xq + 2.0 * wp * wq * math.sqrt(xp * xq + wb * wb)) / (wb * wb)
    if not math.isfinite(root) or root <= 0.0:
        raise OverflowError("degeneracy threshold overflowed")
    return -math.log(root)


def angles(tri: TriangleInput) -> tuple:
    """Inner angles; requires an admissible scaled triangle."""
    if classify(tri).degenerate:
        raise DegenerateTriangleError(f"factors {tri.factors} are degenerate for base {tri.base}")
    a = angles_from_lengths(tri.geometry, scaled_lengths_array(tri.geometry, tri.base, tri.factors))
    return tuple(float(x) for x in a)


def extended_angles(tri: TriangleInput) -> tuple:
    """Angles extended by constants: pi at the apex, 0 elsewhere, on V regions."""
    region = classify(tri)
    if not region.degenerate:
        return angles(tri)
    out = [0.0, 0.0, 0.0]
    out[region.apex] = math.pi
    return tuple(out)


def angle_jacobian(tri: TriangleInput) -> np.ndarray:
    """3x3 matrix d(angle_r)/d(factor_s); symmetric, definite per geometry."""
    if classify(tri).degenerate:
        raise DegenerateTriangleError(f"factors {tri.factors} are degenerate for base {tri.base}")
    return angle_jacobian_array(tri.geometry, tri.base, tri.factors)[0]


def area(tri: TriangleInput) -> float:
    """Triangle area: Heron (flat) or the angle defect pi - sum (hyperbolic)."""
    if classify(tri).degenerate:
        raise DegenerateTriangleError(f"factors {tri.factors} are degenerate for base {tri.base}")
    return float(areas_array(tri.geometry, tri.base, tri.factors))


def area_derivative_check(tri: TriangleInput, vertex: int, step: float = 1e-6) -> tuple:
    """Hyperbolic area derivative two ways: finite differences of the area,
    and the Jacobian combination dS/du_a = da_b/du_a (cosh l_c - 1) +
    da_c/du_a (cosh l_b - 1). Returns (finite_difference, jacobian_rhs).
    """
    if tri.geometry is not Geometry.HYPERBOLIC:
        raise WrongGeometryError("area_derivative_check is defined for hyperbolic inputs")
    if vertex not in (0, 1, 2):
        raise ValueError(f"vertex must be a corner slot 0, 1 or 2, got {vertex}")
    jac = angle_jacobian(tri)
    l = scaled_lengths(tri)
    p, q = (s for s in range(3) if s != vertex)
    rhs = jac[p][vertex] * (math.cosh(l[q]) - 1.0) + jac[q][vertex] * (math.cosh(l[p]) - 1.0)

    def shifted(delta):
        f = list(tri.factors)
        f[vertex] += delta
        return area(replace(tri, factors=tuple(f)))

    fd = (shifted(step) - shifted(-step)) / (2.0 * step)
    return fd, float(rhs)


def circumcenter_signed_distance(tri: TriangleInput, edge_apex: int) -> float:
    """Signed distance from the circumcenter to the edge opposite ``edge_apex``.

    Euclidean only. Positive when the circumcenter lies on the triangle's
    side of that edge; the sign equals the sign of the matching h-value.
    """
    if tri.geometry is not Geometry.EUCLIDEAN:
        raise WrongGeometryError("circumcenter distances are defined for Euclidean inputs")
    if edge_apex not in (0, 1, 2):
        raise ValueError(f"edge_apex must be a corner slot 0, 1 or 2, got {edge_apex}")
    surf = area(tri)
    h = h_values(tri)[edge_apex]
    ua = tri.factors[edge_apex]
    up, uq = (tri.factors[s] for s in range(3) if s != edge_apex)
    prefactor = math.exp(ua + 1.5 * (up + uq)) / (8.0 * surf * tri.base[edge_apex])
    return prefactor * h


def conformal_state(tri: TriangleInput) -> TriangleConformalState:
    """Bundle lengths, Q, h-values, region and (extended) angles for one input."""
    region = classify(tri)
    lengths = scaled_lengths(tri)
    q = q_value(tri)
    h = h_values(tri)
    if region.degenerate:
        ext = [0.0, 0.0, 0.0]
        ext[region.apex] = math.pi
        return TriangleConformalState(tri, lengths, q, h, region, None, tuple(ext))
    ang = angles(tri)
    return TriangleConformalState(tri, lengths, q, h, region, ang, ang)

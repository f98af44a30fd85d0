"""Prescribed-curvature solving by convex minimization, plus rigidity checks.

The target curvature K* is realized by minimizing the convex functional
F(u) - <K*, u>, whose gradient is K(u) - K*. The damped Newton iteration
uses the assembled curvature Jacobian; in the flat case the all-ones kernel
is handled by projecting gradient and step onto the sum-zero subspace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .common import Geometry
from .energy import check_factors, curvature, curvature_jacobian, degenerate_faces, face_regions
from .mesh import MetricMesh, euler_characteristic
from .triangle import areas_array

__all__ = [
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


class TargetSumMismatch(Exception):
    """Euclidean target curvature does not satisfy Gauss-Bonnet."""


class DegenerateFaceError(Exception):
    """Hyperbolic Gauss-Bonnet needs every face nondegenerate."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10          # on the sup-norm of K(u) - K*
    max_iterations: int = 100
    mu0: float = 1e-8                 # initial Newton damping
    shrink: float = 0.5               # line-search backtracking factor

    def __post_init__(self):
        if not (self.tolerance > 0 and math.isfinite(self.tolerance)):
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if not (self.mu0 > 0 and math.isfinite(self.mu0)):
            raise ValueError("mu0 must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")


@dataclass
class SolveResult:
    u: np.ndarray
    converged: bool
    iterations: int
    residual_history: list = field(default_factory=list)
    degenerate_faces_at_solution: list = field(default_factory=list)
    normalization: str = "none"       # "none" or "sum_zero"


@dataclass(frozen=True)
class RigidityVerdict:
    consistent: bool
    details: Optional[dict] = None


class GaussBonnetResult(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


_GAUSS7_NODES, _GAUSS7_WEIGHTS = np.polynomial.legendre.leggauss(7)


def _objective_delta(mesh, u, direction, step, k_star):
    """Objective change along u + t*direction for t in [0, step].

    Equals the line integral of <K(u + t d) - K*, d>; a fixed 7-point Gauss
    rule is plenty for a line-search acceptance test.
    """
    taus = 0.5 * step * (_GAUSS7_NODES + 1.0)
    acc = 0.0
    for w, t in zip(_GAUSS7_WEIGHTS, taus):
        acc += w * float((curvature(mesh, u + t * direction) - k_star) @ direction)
    return 0.5 * step * acc


def _newton_direction(hess, grad, mu, euclidean):
    n = hess.shape[0]
    # the flat-case Hessian has the all-ones kernel; a tiny floor keeps the
    # factorization well posed, and the step is re-projected afterwards
    mu_eff = max(mu, 1e-12) if euclidean else mu
    system = hess + mu_eff * scipy.sparse.identity(n, format="csr")
    try:
        if n <= 600:
            d = scipy.linalg.solve(system.toarray(), -grad, assume_a="sym")
        else:
            d = scipy.sparse.linalg.spsolve(system.tocsc(), -grad)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, RuntimeError):
        return None
    if not np.all(np.isfinite(d)):
        return None
    if euclidean:
        d = d - d.mean()
    return d


def solve_prescribed_curvature(mesh: MetricMesh, target, config: SolverConfig | None = None,
                               start=None) -> SolveResult:
    """Find factors u with extended curvature equal to ``target``.

    Damped Newton with a backtracking line search on the objective
    F(u) - <K*, u>; the damping grows when a step is rejected and shrinks on
    success. Euclidean iterates are kept on the sum-zero subspace. When the
    minimizer has degenerate faces, the target is realized only for the
    extended curvature; those faces are reported, not hidden.
    """
    cfg = config or SolverConfig()
    n = mesh.mesh.vertex_count
    k_star = np.asarray(target, dtype=float)
    if k_star.shape != (n,):
        raise ValueError(f"expected {n} target curvatures, got shape {k_star.shape}")
    if not np.all(np.isfinite(k_star)):
        raise ValueError("target curvature must be finite")
    if np.any(k_star >= 2.0 * math.pi):
        raise ValueError("target curvatures must be < 2*pi")
    euclidean = mesh.geometry is Geometry.EUCLIDEAN
    if euclidean:
        expected = 2.0 * math.pi * euler_characteristic(mesh)
        gap = float(k_star.sum() - expected)
        if abs(gap) > 1e-9:
            raise TargetSumMismatch(
                f"Euclidean targets must sum to 2*pi*chi = {expected:.12g}; off by {gap:.3g}"
            )

    if start is None:
        u = np.zeros(n)
    else:
        u = check_factors(mesh, start).copy()
    if euclidean:
        u = u - u.mean()

    residual = curvature(mesh, u) - k_star
    history = [float(np.max(np.abs(residual)))]
    mu = cfg.mu0
    iterations = 0
    stalled = False

    while history[-1] > cfg.tolerance and iterations < cfg.max_iterations and not stalled:
        iterations += 1
        hess = curvature_jacobian(mesh, u)
        grad = residual - residual.mean() if euclidean else residual
        accepted = False
        for _ in range(25):  # damping growth attempts
            d = _newton_direction(hess, grad, mu, euclidean)
            if d is not None:
                slope0 = float(grad @ d)
                if slope0 < 0.0:
                    step = 1.0
                    for _ in range(40):
                        u_try = u + step * d
                        if euclidean:
                            u_try = u_try - u_try.mean()
                        delta = _objective_delta(mesh, u, d, step, k_star)
                        if delta <= 1e-4 * step * slope0:
                            accepted = True
                            break
                        step *= cfg.shrink
                    if accepted:
                        u = u_try
                        residual = curvature(mesh, u) - k_star
                        history.append(float(np.max(np.abs(residual))))
                        mu *= 0.1
                        break
            mu = max(mu * 10.0, cfg.mu0)
            if mu > 1e12:
                stalled = True
                break
        if not accepted:
            stalled = True

    converged = history[-1] <= cfg.tolerance
    return SolveResult(
        u=u,
        converged=bool(converged),
        iterations=iterations,
        residual_history=history,
        degenerate_faces_at_solution=degenerate_faces(mesh, u),
        normalization="sum_zero" if euclidean else "none",
    )


def rigidity_check(mesh: MetricMesh, u1, u2, tol: float = 1e-10) -> RigidityVerdict:
    """Verify global rigidity on a pair of factor vectors.

    If the extended curvatures agree within ``tol``, the factors must agree
    (hyperbolic) or differ by a constant vector (Euclidean) within 10*tol
    componentwise; otherwise a Violation carrying the offending data is
    returned. Pairs with different curvatures are vacuously consistent.
    """
    u1 = check_factors(mesh, u1)
    u2 = check_factors(mesh, u2)
    k1 = curvature(mesh, u1)
    k2 = curvature(mesh, u2)
    if float(np.max(np.abs(k1 - k2), initial=0.0)) > tol:
        return RigidityVerdict(True, None)
    diff = u1 - u2
    if mesh.geometry is Geometry.EUCLIDEAN:
        diff = diff - diff.mean()
    gap = float(np.max(np.abs(diff), initial=0.0))
    if gap <= 10.0 * tol:
        return RigidityVerdict(True, None)
    return RigidityVerdict(False, {
        "u1": u1.tolist(),
        "u2": u2.tolist(),
        "curvature_gap": float(np.max(np.abs(k1 - k2), initial=0.0)),
        "factor_gap": gap,
    })


def gauss_bonnet_check(mesh: MetricMesh, u) -> GaussBonnetResult:
    """Total-curvature identity for the geometry at hand.

    Euclidean: sum K = 2*pi*chi (holds for every u thanks to the extension).
    Hyperbolic: sum K - 2*pi*chi = total area, only defined when every face
    is nondegenerate.
    """
    u = check_factors(mesh, u)
    kvec = curvature(mesh, u)
    chi = euler_characteristic(mesh)
    if mesh.geometry is Geometry.EUCLIDEAN:
        lhs = float(kvec.sum())
        rhs = 2.0 * math.pi * chi
    else:
        regions = face_regions(mesh, u)
        bad = np.nonzero(regions >= 0)[0]
        if bad.size:
            raise DegenerateFaceError(f"faces {bad.tolist()} are degenerate at u")
        faces = mesh.mesh.faces_array
        areas = areas_array(mesh.geometry, mesh.face_base_lengths(), u[faces])
        lhs = float(kvec.sum()) - 2.0 * math.pi * chi
        rhs = float(areas.sum())
    return GaussBonnetResult(lhs, rhs, bool(abs(lhs - rhs) < 1e-9))

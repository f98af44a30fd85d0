"""Command-line front end.

Subcommands: check, angles, curvature, jacobian, energy, solve,
rigidity-test. Reports are JSON on stdout (deterministic, 17-digit floats);
human-readable diagnostics go to stderr. Exit codes: 0 success/pass, 1
validation or data failure, 2 not converged, 3 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .common import Geometry, dumps
from .energy import (
    QuadratureConfig,
    QuadratureFailure,
    curvature,
    curvature_jacobian,
    face_regions,
    global_energy,
)
from .mesh import MeshError, MeshFormat, MetricMesh, euler_characteristic, parse_mesh, validate
from .solver import (
    DegenerateFaceError,
    SolverConfig,
    TargetSumMismatch,
    gauss_bonnet_check,
    rigidity_check,
    solve_prescribed_curvature,
)
from .triangle import angle_jacobian_array, extended_angles_array, h_values_array, q_values_array

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_USAGE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad arguments; the contract wants 3
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vertexscale",
                     description="Vertex-scaled discrete conformal structures on closed surfaces")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_mesh_arg(p):
        p.add_argument("mesh", help="mesh file (MetricJson, or OBJ by extension / --format obj)")
        p.add_argument("--format", choices=["json", "obj"], default=None,
                       help="input format override (default: by file extension)")

    def add_factors_arg(p):
        p.add_argument("--factors", default=None, help='factors file {"u": [...]}; default all zeros')

    def add_quad_args(p):
        p.add_argument("--quad-tol", type=float, default=1e-10, help="quadrature absolute tolerance")
        p.add_argument("--quad-depth", type=int, default=40, help="quadrature max subdivision depth")

    p = sub.add_parser("check", help="validate the mesh and classify every face")
    add_mesh_arg(p)
    add_factors_arg(p)

    p = sub.add_parser("angles", help="per-face angles and extended angles")
    add_mesh_arg(p)
    add_factors_arg(p)

    p = sub.add_parser("curvature", help="per-vertex curvature and the Gauss-Bonnet line")
    add_mesh_arg(p)
    add_factors_arg(p)

    p = sub.add_parser("jacobian", help="per-face angle Jacobians, or the assembled Hessian")
    add_mesh_arg(p)
    add_factors_arg(p)
    p.add_argument("--global", dest="global_matrix", action="store_true",
                   help="emit the assembled sparse curvature Jacobian")

    p = sub.add_parser("energy", help="global curvature energy at the given factors")
    add_mesh_arg(p)
    add_factors_arg(p)
    add_quad_args(p)

    p = sub.add_parser("solve", help="solve the prescribed-curvature problem")
    add_mesh_arg(p)
    p.add_argument("--target", required=True, help='target curvature file {"K": [...]}')
    p.add_argument("--start", default=None, help="starting factors file (default zeros)")
    p.add_argument("--tol", type=float, default=1e-10, help="residual tolerance (sup norm)")
    p.add_argument("--max-iter", type=int, default=100, help="Newton iteration cap")
    p.add_argument("--mu0", type=float, default=1e-8, help="initial damping")
    p.add_argument("--shrink", type=float, default=0.5, help="line-search shrink factor")

    p = sub.add_parser("rigidity-test", help="randomized curvature round-trip harness")
    add_mesh_arg(p)
    p.add_argument("--trials", type=int, default=10, help="number of random factor draws")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--amplitude", type=float, default=0.5, help="uniform draw half-width for u*")
    p.add_argument("--tol", type=float, default=1e-10, help="solver residual tolerance")
    p.add_argument("--max-iter", type=int, default=100, help="Newton iteration cap")
    return parser


def _read_bytes(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise _UsageError(f"no such file: {path}")
    return p.read_bytes()


def _load_metric(args) -> MetricMesh:
    data = _read_bytes(args.mesh)
    if args.format == "obj" or (args.format is None and args.mesh.lower().endswith(".obj")):
        fmt = MeshFormat.OBJ
    else:
        fmt = MeshFormat.METRIC_JSON
    return parse_mesh(data, fmt)


def _require_valid(metric: MetricMesh):
    report = validate(metric)
    if not report.ok:
        raise MeshError(str(report))


def _load_vector(path: str, key: str, n: int) -> np.ndarray:
    raw = _read_bytes(path)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise MeshError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(doc, dict) or key not in doc or not isinstance(doc[key], list):
        raise MeshError(f'{path}: expected an object with a "{key}" list')
    values = doc[key]
    if len(values) != n:
        raise MeshError(f'{path}: "{key}" must have {n} entries, got {len(values)}')
    arr = np.asarray([float(v) for v in values])
    if not np.all(np.isfinite(arr)):
        raise MeshError(f'{path}: "{key}" entries must be finite')
    return arr


def _factors(args, metric: MetricMesh) -> np.ndarray:
    n = metric.mesh.vertex_count
    if getattr(args, "factors", None):
        return _load_vector(args.factors, "u", n)
    return np.zeros(n)


def _emit(doc) -> None:
    sys.stdout.write(dumps(doc) + "\n")


def _face_classification(metric: MetricMesh, u: np.ndarray) -> list:
    faces = metric.mesh.faces_array
    fb = metric.face_base_lengths()
    fu = u[faces] if faces.shape[0] else np.empty((0, 3))
    out = []
    if faces.shape[0]:
        q = q_values_array(metric.geometry, fb, fu)
        h = h_values_array(metric.geometry, fb, fu)
        reg = face_regions(metric, u)
        for n in range(faces.shape[0]):
            apex = int(reg[n]) if reg[n] >= 0 else None
            out.append({
                "index": n,
                "vertices": [int(v) for v in faces[n]],
                "q": float(q[n]),
                "h": [float(x) for x in h[n]],
                "degenerate": apex is not None,
                "apex": apex,
            })
    return out


def _cmd_check(args) -> int:
    metric = _load_metric(args)
    report = validate(metric)
    doc = {
        "command": "check",
        "valid": report.ok,
        "issues": [{"code": i.code, "where": list(i.where) if isinstance(i.where, tuple) else i.where,
                    "message": i.message} for i in report.issues],
    }
    if report.ok:
        u = _factors(args, metric)
        doc.update({
            "geometry": metric.geometry.value,
            "num_vertices": metric.mesh.vertex_count,
            "num_edges": metric.mesh.edge_count,
            "num_faces": metric.mesh.face_count,
            "euler_characteristic": euler_characteristic(metric),
            "faces": _face_classification(metric, u),
        })
    _emit(doc)
    if not report.ok:
        print(str(report), file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def _cmd_angles(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    u = _factors(args, metric)
    faces = metric.mesh.faces_array
    fb = metric.face_base_lengths()
    entries = []
    if faces.shape[0]:
        fu = u[faces]
        ext = extended_angles_array(metric.geometry, fb, fu)
        reg = face_regions(metric, u)
        for n in range(faces.shape[0]):
            degenerate = bool(reg[n] >= 0)
            entries.append({
                "index": n,
                "vertices": [int(v) for v in faces[n]],
                "degenerate": degenerate,
                "apex": int(reg[n]) if degenerate else None,
                "angles": None if degenerate else [float(x) for x in ext[n]],
                "extended_angles": [float(x) for x in ext[n]],
            })
    _emit({"command": "angles", "faces": entries})
    return EXIT_OK


def _cmd_curvature(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    u = _factors(args, metric)
    kvec = curvature(metric, u)
    doc = {
        "command": "curvature",
        "K": [float(x) for x in kvec],
        "euler_characteristic": euler_characteristic(metric),
    }
    try:
        gb = gauss_bonnet_check(metric, u)
        doc["gauss_bonnet"] = {"lhs": gb.lhs, "rhs": gb.rhs, "pass": gb.passed}
    except DegenerateFaceError as e:
        doc["gauss_bonnet"] = {"error": str(e)}
    _emit(doc)
    return EXIT_OK


def _cmd_jacobian(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    u = _factors(args, metric)
    if args.global_matrix:
        hess = curvature_jacobian(metric, u).tocoo()
        order = np.lexsort((hess.col, hess.row))
        entries = [
            {"row": int(hess.row[i]), "col": int(hess.col[i]), "value": float(hess.data[i])}
            for i in order
        ]
        _emit({
            "command": "jacobian",
            "global": True,
            "shape": [int(hess.shape[0]), int(hess.shape[1])],
            "entries": entries,
        })
        return EXIT_OK
    faces = metric.mesh.faces_array
    fb = metric.face_base_lengths()
    out = []
    if faces.shape[0]:
        fu = u[faces]
        reg = face_regions(metric, u)
        for n in range(faces.shape[0]):
            degenerate = bool(reg[n] >= 0)
            if degenerate:
                matrix = [[0.0] * 3 for _ in range(3)]
            else:
                matrix = angle_jacobian_array(metric.geometry, fb[n][None, :], fu[n][None, :])[0].tolist()
            out.append({
                "index": n,
                "vertices": [int(v) for v in faces[n]],
                "degenerate": degenerate,
                "matrix": matrix,
            })
    _emit({"command": "jacobian", "global": False, "faces": out})
    return EXIT_OK


def _cmd_energy(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    u = _factors(args, metric)
    quad = QuadratureConfig(tolerance=args.quad_tol, max_depth=args.quad_depth)
    value = global_energy(metric, u, quad)
    _emit({"command": "energy", "value": value, "quad_tolerance": args.quad_tol})
    return EXIT_OK


def _cmd_solve(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    n = metric.mesh.vertex_count
    target = _load_vector(args.target, "K", n)
    start = _load_vector(args.start, "u", n) if args.start else None
    cfg = SolverConfig(tolerance=args.tol, max_iterations=args.max_iter,
                       mu0=args.mu0, shrink=args.shrink)
    result = solve_prescribed_curvature(metric, target, cfg, start=start)
    _emit({
        "command": "solve",
        "converged": result.converged,
        "u": [float(x) for x in result.u],
        "iterations": result.iterations,
        "residual_history": [float(r) for r in result.residual_history],
        "degenerate_faces_at_solution": result.degenerate_faces_at_solution,
        "normalization": result.normalization,
    })
    if not result.converged:
        print(f"not converged after {result.iterations} iterations; "
              f"residual {result.residual_history[-1]:.3e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _cmd_rigidity_test(args) -> int:
    metric = _load_metric(args)
    _require_valid(metric)
    n = metric.mesh.vertex_count
    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig(tolerance=args.tol, max_iterations=args.max_iter)
    euclidean = metric.geometry is Geometry.EUCLIDEAN
    trials = []
    max_err = 0.0
    violations = 0
    failures = 0
    for t in range(args.trials):
        u_star = rng.uniform(-args.amplitude, args.amplitude, size=n)
        if euclidean:
            u_star = u_star - u_star.mean()
        target = curvature(metric, u_star)
        result = solve_prescribed_curvature(metric, target, cfg)
        if not result.converged:
            failures += 1
            trials.append({"trial": t, "converged": False})
            continue
        verdict = rigidity_check(metric, result.u, u_star, tol=10 * args.tol)
        recovered = result.u - result.u.mean() if euclidean else result.u
        reference = u_star - u_star.mean() if euclidean else u_star
        err = float(np.max(np.abs(recovered - reference)))
        max_err = max(max_err, err)
        if not verdict.consistent:
            violations += 1
        trials.append({
            "trial": t,
            "converged": True,
            "iterations": result.iterations,
            "recovery_error": err,
            "consistent": verdict.consistent,
        })
    doc = {
        "command": "rigidity-test",
        "trials": args.trials,
        "seed": args.seed,
        "violations": violations,
        "not_converged": failures,
        "max_recovery_error": max_err,
        "pass": violations == 0 and failures == 0,
        "results": trials,
    }
    _emit(doc)
    if failures:
        return EXIT_NOT_CONVERGED
    if violations:
        return EXIT_INVALID
    return EXIT_OK


_HANDLERS = {
    "check": _cmd_check,
    "angles": _cmd_angles,
    "curvature": _cmd_curvature,
    "jacobian": _cmd_jacobian,
    "energy": _cmd_energy,
    "solve": _cmd_solve,
    "rigidity-test": _cmd_rigidity_test,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TargetSumMismatch) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (MeshError, OverflowError, QuadratureFailure) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

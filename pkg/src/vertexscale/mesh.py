"""Triangulation and metric data model, validation, and file ingestion.

A :class:`TriMesh` is a closed oriented triangulation given purely
combinatorially (vertex count plus oriented vertex triples); a
:class:`MetricMesh` attaches a geometry tag and one positive base length per
edge. Constructors are lenient so that :func:`validate` can report every
broken invariant; :func:`load_mesh` parses, validates and raises on the
first violation.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .common import Geometry, dumps

__all__ = [
    "MeshError",
    "ParseError",
    "NotClosedError",
    "NotOrientedError",
    "DegenerateBaseMetricError",
    "MissingEdgeLengthError",
    "MeshFormat",
    "TriMesh",
    "MetricMesh",
    "ValidationIssue",
    "ValidationReport",
    "euler_characteristic",
    "validate",
    "parse_mesh",
    "load_mesh",
    "to_metric_json",
]


class MeshError(Exception):
    """Base class for mesh ingestion and invariant failures."""


class ParseError(MeshError):
    """Input bytes do not conform to the declared format."""


class NotClosedError(MeshError):
    """An edge is contained in a number of faces different from two."""


class NotOrientedError(MeshError):
    """A directed edge occurs in more than one face."""


class DegenerateBaseMetricError(MeshError):
    """A face's base lengths violate the strict triangle inequality."""


class MissingEdgeLengthError(MeshError):
    """A mesh edge has no base length."""


class MeshFormat(enum.Enum):
    METRIC_JSON = "metric_json"
    OBJ = "obj"


class TriMesh:
    """Immutable triangulation: a vertex count and oriented triangles.

    Vertex indices are 0-based. Edge keys are canonical sorted pairs
    ``(a, b)`` with ``a < b``; orientation lives only in the face triples.
    """

    def __init__(self, vertex_count: int, faces: Iterable[Sequence[int]]):
        self._vertex_count = int(vertex_count)
        if self._vertex_count < 0:
            raise ValueError("vertex_count must be nonnegative")
        face_list = []
        for f in faces:
            triple = tuple(int(v) for v in f)
            if len(triple) != 3:
                raise ValueError(f"faces must be vertex triples, got {triple}")
            face_list.append(triple)
        self._faces = tuple(face_list)

        edge_set = set()
        for i, j, k in self._faces:
            for a, b in ((i, j), (j, k), (k, i)):
                if a != b:
                    edge_set.add((a, b) if a < b else (b, a))
        self._edges = tuple(sorted(edge_set))
        self._edge_index = {e: n for n, e in enumerate(self._edges)}

        arr = np.array(self._faces, dtype=np.int64) if self._faces else np.empty((0, 3), dtype=np.int64)
        arr.setflags(write=False)
        self._faces_array = arr

    @property
    def vertex_count(self) -> int:
        return self._vertex_count

    @property
    def faces(self) -> tuple:
        return self._faces

    @property
    def face_count(self) -> int:
        return len(self._faces)

    @property
    def edges(self) -> tuple:
        """Canonical (a, b) pairs with a < b, sorted."""
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def edge_index(self) -> Mapping:
        return MappingProxyType(self._edge_index)

    @property
    def faces_array(self) -> np.ndarray:
        """Faces as a read-only (F, 3) int array."""
        return self._faces_array

    def __repr__(self):
        return f"TriMesh(vertices={self._vertex_count}, edges={self.edge_count}, faces={self.face_count})"


def _canonical_edge(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


class MetricMesh:
    """A triangulation together with a geometry tag and base edge lengths."""

    def __init__(self, mesh: TriMesh, geometry: Geometry, base_lengths: Mapping):
        self._mesh = mesh
        self._geometry = Geometry(geometry)
        lengths = {}
        for key, value in base_lengths.items():
            a, b = key
            lengths[_canonical_edge(int(a), int(b))] = float(value)
        self._lengths = lengths
        self._face_base_cache = None
        self._hessian_layout = None

    @property
    def mesh(self) -> TriMesh:
        return self._mesh

    @property
    def geometry(self) -> Geometry:
        return self._geometry

    @property
    def base_lengths(self) -> Mapping:
        return MappingProxyType(self._lengths)

    def edge_length_array(self) -> np.ndarray:
        """Base lengths ordered like ``mesh.edges``."""
        out = np.empty(self._mesh.edge_count)
        for n, e in enumerate(self._mesh.edges):
            try:
                out[n] = self._lengths[e]
            except KeyError:
                raise MissingEdgeLengthError(f"edge {e} has no base length") from None
        return out

    def face_base_lengths(self) -> np.ndarray:
        """Per-face base lengths, slot a = edge opposite vertex a. Shape (F, 3)."""
        if self._face_base_cache is None:
            fb = np.empty((self._mesh.face_count, 3))
            for n, (i, j, k) in enumerate(self._mesh.faces):
                for slot, (a, b) in enumerate(((j, k), (i, k), (i, j))):
                    try:
                        fb[n, slot] = self._lengths[_canonical_edge(a, b)]
                    except KeyError:
                        raise MissingEdgeLengthError(
                            f"edge ({min(a, b)}, {max(a, b)}) of face {n} has no base length"
                        ) from None
            fb.setflags(write=False)
            self._face_base_cache = fb
        return self._face_base_cache

    def __repr__(self):
        return f"MetricMesh({self._geometry.value}, {self._mesh!r})"


def euler_characteristic(mesh) -> int:
    """|V| - |E| + |F| for a TriMesh or MetricMesh."""
    if isinstance(mesh, MetricMesh):
        mesh = mesh.mesh
    return mesh.vertex_count - mesh.edge_count + mesh.face_count


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    where: object
    message: str

    def __str__(self):
        return f"{self.code} at {self.where}: {self.message}"


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, where, message: str) -> None:
        self.issues.append(ValidationIssue(code, where, message))

    def codes(self) -> set:
        return {issue.code for issue in self.issues}

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(issue) for issue in self.issues)


def validate(metric: MetricMesh) -> ValidationReport:
    """Check every mesh and metric invariant; never raises.

    The report is empty exactly when ``metric`` is a closed, consistently
    oriented triangulation whose base lengths exist, are positive, and
    satisfy the strict triangle inequality on every face.
    """
    report = ValidationReport()
    mesh = metric.mesh
    n = mesh.vertex_count

    seen_triples = {}
    directed = {}
    undirected = {}
    for fidx, (i, j, k) in enumerate(mesh.faces):
        bad = False
        if len({i, j, k}) != 3:
            report.add("BadFace", fidx, f"face {(i, j, k)} repeats a vertex")
            bad = True
        if any(v < 0 or v >= n for v in (i, j, k)):
            report.add("BadFace", fidx, f"face {(i, j, k)} has a vertex index outside [0, {n})")
            bad = True
        if bad:
            continue
        key = frozenset((i, j, k))
        if key in seen_triples:
            report.add("DuplicateFace", fidx, f"faces {seen_triples[key]} and {fidx} share the vertex triple {sorted(key)}")
        else:
            seen_triples[key] = fidx
        for a, b in ((i, j), (j, k), (k, i)):
            directed[(a, b)] = directed.get((a, b), 0) + 1
            e = _canonical_edge(a, b)
            undirected[e] = undirected.get(e, 0) + 1

    for e, count in sorted(undirected.items()):
        if count != 2:
            report.add("NotClosed", e, f"edge {e} lies in {count} faces, expected 2")
    for de, count in sorted(directed.items()):
        if count > 1:
            report.add("NotOriented", de, f"directed edge {de} occurs in {count} faces")

    lengths = metric.base_lengths
    edge_set = set(mesh.edges)
    for e in mesh.edges:
        if e not in lengths:
            report.add("MissingEdgeLength", e, f"edge {e} has no base length")
    for e in sorted(lengths):
        if e not in edge_set:
            report.add("UnknownEdgeLength", e, f"length given for {e}, which is not a mesh edge")
    for e in sorted(lengths):
        l = lengths[e]
        if not math.isfinite(l) or l <= 0.0:
            report.add("NonPositiveLength", e, f"edge {e} has non-positive length {l}")

    for fidx, (i, j, k) in enumerate(mesh.faces):
        if len({i, j, k}) != 3:
            continue
        try:
            ls = [lengths[_canonical_edge(a, b)] for a, b in ((j, k), (i, k), (i, j))]
        except KeyError:
            continue
        if any(not math.isfinite(l) or l <= 0 for l in ls):
            continue
        li, lj, lk = ls
        if li + lj <= lk or li + lk <= lj or lj + lk <= li:
            report.add("DegenerateBaseMetric", fidx,
                       f"face {fidx} base lengths {tuple(ls)} violate the strict triangle inequality")
    return report


# load-time exception per report code, in raise priority order
_ISSUE_EXCEPTIONS = (
    ("BadFace", ParseError),
    ("DuplicateFace", ParseError),
    ("UnknownEdgeLength", ParseError),
    ("NonPositiveLength", ParseError),
    ("NotClosed", NotClosedError),
    ("NotOriented", NotOrientedError),
    ("MissingEdgeLength", MissingEdgeLengthError),
    ("DegenerateBaseMetric", DegenerateBaseMetricError),
)


def parse_mesh(data: bytes, fmt: MeshFormat) -> MetricMesh:
    """Parse bytes into a MetricMesh without validating invariants."""
    fmt = MeshFormat(fmt)
    if isinstance(data, str):
        data = data.encode("utf-8")
    if fmt is MeshFormat.METRIC_JSON:
        return _parse_metric_json(data)
    return _parse_obj(data)


def load_mesh(data: bytes, fmt: MeshFormat) -> MetricMesh:
    """Parse and validate; raises a :class:`MeshError` on any violation."""
    metric = parse_mesh(data, fmt)
    report = validate(metric)
    if not report.ok:
        codes = report.codes()
        for code, exc in _ISSUE_EXCEPTIONS:
            if code in codes:
                first = next(i for i in report.issues if i.code == code)
                raise exc(str(first))
        raise MeshError(str(report.issues[0]))
    return metric


def _parse_metric_json(data: bytes) -> MetricMesh:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"not valid UTF-8 JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object")

    for key in ("geometry", "num_vertices", "faces", "edge_lengths"):
        if key not in doc:
            raise ParseError(f"missing required key {key!r}")

    try:
        geometry = Geometry.from_name(doc["geometry"])
    except ValueError as e:
        raise ParseError(str(e)) from None

    nv = doc["num_vertices"]
    if not isinstance(nv, int) or isinstance(nv, bool) or nv < 0:
        raise ParseError(f"num_vertices must be a nonnegative integer, got {nv!r}")

    faces = doc["faces"]
    if not isinstance(faces, list):
        raise ParseError("faces must be a list of vertex triples")
    face_list = []
    for n, f in enumerate(faces):
        if (not isinstance(f, list) or len(f) != 3
                or any(not isinstance(v, int) or isinstance(v, bool) for v in f)):
            raise ParseError(f"face {n} must be a triple of integers, got {f!r}")
        face_list.append(tuple(f))

    entries = doc["edge_lengths"]
    if not isinstance(entries, list):
        raise ParseError("edge_lengths must be a list")
    lengths = {}
    for n, entry in enumerate(entries):
        if not isinstance(entry, dict) or "v" not in entry or "l" not in entry:
            raise ParseError(f"edge_lengths[{n}] must be an object with keys 'v' and 'l'")
        v = entry["v"]
        if (not isinstance(v, list) or len(v) != 2
                or any(not isinstance(x, int) or isinstance(x, bool) for x in v)):
            raise ParseError(f"edge_lengths[{n}].v must be a pair of integers, got {v!r}")
        a, b = v
        if not a < b:
            raise ParseError(f"edge_lengths[{n}].v must satisfy a < b, got {v!r}")
        l = entry["l"]
        if isinstance(l, bool) or not isinstance(l, (int, float)):
            raise ParseError(f"edge_lengths[{n}].l must be a number, got {l!r}")
        l = float(l)
        if not math.isfinite(l) or l <= 0.0:
            raise ParseError(f"edge_lengths[{n}].l must be a positive finite number, got {l!r}")
        if (a, b) in lengths:
            raise ParseError(f"edge ({a}, {b}) listed more than once")
        lengths[(a, b)] = l

    return MetricMesh(TriMesh(nv, face_list), geometry, lengths)


def _parse_obj(data: bytes) -> MetricMesh:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"OBJ input is not UTF-8: {e}") from None

    vertices = []
    faces = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        if tag == "v":
            if len(tokens) < 4:
                raise ParseError(f"line {lineno}: vertex record needs 3 coordinates")
            try:
                vertices.append(tuple(float(t) for t in tokens[1:4]))
            except ValueError:
                raise ParseError(f"line {lineno}: bad vertex coordinate in {raw!r}") from None
        elif tag == "f":
            refs = tokens[1:]
            if len(refs) != 3:
                raise ParseError(f"line {lineno}: only triangular faces are supported, got {len(refs)} vertices")
            idx = []
            for ref in refs:
                head = ref.split("/", 1)[0]
                try:
                    v = int(head)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad face vertex reference {ref!r}") from None
                if v < 1:
                    raise ParseError(f"line {lineno}: face indices must be positive 1-based, got {v}")
                idx.append(v - 1)
            faces.append(tuple(idx))
        # vn / vt / o / g / s / usemtl / mtllib carry no metric data

    for n, f in enumerate(faces):
        for v in f:
            if v >= len(vertices):
                raise ParseError(f"face {n} references vertex {v + 1}, but only {len(vertices)} vertices are defined")

    coords = np.asarray(vertices, dtype=float) if vertices else np.empty((0, 3))
    lengths = {}
    for i, j, k in faces:
        for a, b in ((i, j), (j, k), (k, i)):
            e = _canonical_edge(a, b)
            if e not in lengths:
                lengths[e] = float(np.linalg.norm(coords[a] - coords[b]))

    return MetricMesh(TriMesh(len(vertices), faces), Geometry.EUCLIDEAN, lengths)


def to_metric_json(metric: MetricMesh) -> bytes:
    """Serialize to the MetricJson interchange format (17-digit floats)."""
    doc = {
        "geometry": metric.geometry.value,
        "num_vertices": metric.mesh.vertex_count,
        "faces": [list(f) for f in metric.mesh.faces],
        "edge_lengths": [
            {"v": [a, b], "l": metric.base_lengths[(a, b)]}
            for a, b in sorted(metric.base_lengths)
        ],
    }
    return (dumps(doc) + "\n").encode("utf-8")

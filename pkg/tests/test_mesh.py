import json
import math

import numpy as np
import pytest

from vertexscale import (
    DegenerateBaseMetricError,
    Geometry,
    MeshFormat,
    MetricMesh,
    MissingEdgeLengthError,
    NotClosedError,
    NotOrientedError,
    ParseError,
    TriMesh,
    euler_characteristic,
    load_mesh,
    to_metric_json,
    validate,
)

import meshes


def metric_json_bytes(metric):
    return to_metric_json(metric)


def test_tetrahedron_loads_and_validates():
    data = metric_json_bytes(meshes.tetra())
    metric = load_mesh(data, MeshFormat.METRIC_JSON)
    assert metric.geometry is Geometry.EUCLIDEAN
    assert metric.mesh.vertex_count == 4
    assert metric.mesh.edge_count == 6
    assert metric.mesh.face_count == 4
    assert euler_characteristic(metric) == 2
    assert validate(metric).ok


def test_euler_characteristic_examples():
    assert euler_characteristic(meshes.tetra()) == 2
    assert euler_characteristic(meshes.icosa()) == 2
    torus = meshes.torus7()
    assert torus.mesh.vertex_count == 7
    assert torus.mesh.edge_count == 21
    assert torus.mesh.face_count == 14
    assert euler_characteristic(torus) == 0


def test_reference_complexes_are_closed_and_oriented():
    for metric in (meshes.tetra(), meshes.torus7(), meshes.icosa()):
        report = validate(metric)
        assert report.ok, str(report)
        # 3|F| = 2|E| on any closed triangulation
        assert 3 * metric.mesh.face_count == 2 * metric.mesh.edge_count


def test_degenerate_base_metric_reports_face_index():
    mesh = TriMesh(4, meshes.TETRA_FACES)
    lengths = {e: 1.0 for e in mesh.edges}
    # face 3 = (1, 3, 2): stretch one of its edges far past the others
    lengths[(1, 2)] = 2.5
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, lengths)
    report = validate(metric)
    assert not report.ok
    codes = {(i.code, i.where) for i in report.issues}
    assert any(code == "DegenerateBaseMetric" for code, _ in codes)
    with pytest.raises(DegenerateBaseMetricError) as err:
        load_mesh(metric_json_bytes(metric), MeshFormat.METRIC_JSON)
    assert "face" in str(err.value)


def test_boundary_edge_reports_not_closed():
    mesh = TriMesh(4, meshes.TETRA_FACES[:-1])
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, {e: 1.0 for e in mesh.edges})
    report = validate(metric)
    assert "NotClosed" in report.codes()
    with pytest.raises(NotClosedError):
        load_mesh(metric_json_bytes(metric), MeshFormat.METRIC_JSON)


def test_flipped_face_reports_not_oriented():
    faces = list(meshes.TETRA_FACES)
    faces[3] = tuple(reversed(faces[3]))
    mesh = TriMesh(4, faces)
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, {e: 1.0 for e in mesh.edges})
    report = validate(metric)
    assert "NotOriented" in report.codes()
    with pytest.raises(NotOrientedError):
        load_mesh(metric_json_bytes(metric), MeshFormat.METRIC_JSON)


def test_negative_length_reported():
    mesh = TriMesh(4, meshes.TETRA_FACES)
    lengths = {e: 1.0 for e in mesh.edges}
    lengths[(0, 1)] = -0.25
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, lengths)
    assert "NonPositiveLength" in validate(metric).codes()


def test_missing_edge_length():
    mesh = TriMesh(4, meshes.TETRA_FACES)
    lengths = {e: 1.0 for e in mesh.edges}
    del lengths[(0, 1)]
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, lengths)
    assert "MissingEdgeLength" in validate(metric).codes()
    doc = json.loads(metric_json_bytes(meshes.tetra()))
    doc["edge_lengths"] = doc["edge_lengths"][1:]
    with pytest.raises(MissingEdgeLengthError):
        load_mesh(json.dumps(doc).encode(), MeshFormat.METRIC_JSON)


def test_metric_json_roundtrip_is_bit_exact():
    mesh = TriMesh(4, meshes.TETRA_FACES)
    lengths = {}
    # awkward binary expansions, all close enough to 1 for the triangle inequality
    values = [1.1, 1 / 3 + 0.8, math.sqrt(2) - 0.4, 0.7 + 0.35, 1.25, 5 / 7 + 0.45]
    for e, val in zip(mesh.edges, values):
        lengths[e] = val
    metric = MetricMesh(mesh, Geometry.HYPERBOLIC, lengths)
    # the base must be admissible for load_mesh to accept it
    assert validate(metric).ok
    blob = metric_json_bytes(metric)
    again = load_mesh(blob, MeshFormat.METRIC_JSON)
    assert again.geometry is metric.geometry
    assert again.mesh.faces == metric.mesh.faces
    assert dict(again.base_lengths) == dict(metric.base_lengths)
    assert metric_json_bytes(again) == blob


def test_validate_iff_load_succeeds():
    good = meshes.tetra()
    assert validate(good).ok
    load_mesh(metric_json_bytes(good), MeshFormat.METRIC_JSON)

    bad = MetricMesh(TriMesh(4, meshes.TETRA_FACES[:-1]), Geometry.EUCLIDEAN,
                     {e: 1.0 for e in TriMesh(4, meshes.TETRA_FACES[:-1]).edges})
    assert not validate(bad).ok
    with pytest.raises(NotClosedError):
        load_mesh(metric_json_bytes(bad), MeshFormat.METRIC_JSON)


def test_obj_cube():
    metric = load_mesh(meshes.CUBE_OBJ, MeshFormat.OBJ)
    assert metric.geometry is Geometry.EUCLIDEAN
    assert metric.mesh.vertex_count == 8
    assert metric.mesh.edge_count == 18
    assert metric.mesh.face_count == 12
    assert euler_characteristic(metric) == 2
    lengths = np.array(sorted(metric.base_lengths.values()))
    assert np.allclose(lengths[:12], 1.0)
    assert np.allclose(lengths[12:], math.sqrt(2))


def test_obj_face_with_slashes_and_comments():
    obj = meshes.CUBE_OBJ.replace(b"f 1 4 3", b"f 1//1 4//2 3//3")
    metric = load_mesh(obj, MeshFormat.OBJ)
    assert metric.mesh.face_count == 12


def test_obj_quad_face_rejected():
    obj = b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    with pytest.raises(ParseError):
        load_mesh(obj, MeshFormat.OBJ)


@pytest.mark.parametrize("mutate,message", [
    (lambda d: d.pop("geometry"), "missing"),
    (lambda d: d.update(geometry="spherical"), "geometry"),
    (lambda d: d.update(num_vertices=-1), "num_vertices"),
    (lambda d: d["faces"].append([0, 1]), "triple"),
    (lambda d: d["edge_lengths"].append({"v": [1, 0], "l": 1.0}), "a < b"),
    (lambda d: d["edge_lengths"].append({"v": [0, 1], "l": 1.0}), "more than once"),
    (lambda d: d["edge_lengths"][0].update(l=0.0), "positive"),
    (lambda d: d["edge_lengths"][0].update(v=[0, 9]), "not a mesh edge"),
])
def test_metric_json_schema_errors(mutate, message):
    doc = json.loads(metric_json_bytes(meshes.tetra()))
    mutate(doc)
    with pytest.raises(ParseError) as err:
        load_mesh(json.dumps(doc).encode(), MeshFormat.METRIC_JSON)
    assert message in str(err.value)


def test_not_json_at_all():
    with pytest.raises(ParseError):
        load_mesh(b"v 0 0 0", MeshFormat.METRIC_JSON)


def test_duplicate_face_rejected():
    faces = list(meshes.TETRA_FACES) + [(2, 1, 0)]
    mesh = TriMesh(4, faces)
    metric = MetricMesh(mesh, Geometry.EUCLIDEAN, {e: 1.0 for e in mesh.edges})
    assert "DuplicateFace" in validate(metric).codes()

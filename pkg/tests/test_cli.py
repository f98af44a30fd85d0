import json
import math

import numpy as np
import pytest

from vertexscale import Geometry, curvature, to_metric_json
from vertexscale.cli import main
from vertexscale.common import dumps

import meshes


@pytest.fixture
def tetra_path(tmp_path):
    p = tmp_path / "tetra.json"
    p.write_bytes(to_metric_json(meshes.tetra()))
    return str(p)


@pytest.fixture
def hyp_tetra_path(tmp_path):
    p = tmp_path / "tetra_h.json"
    p.write_bytes(to_metric_json(meshes.tetra(Geometry.HYPERBOLIC)))
    return str(p)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_valid_tetrahedron(capsys, tetra_path):
    code, out, _ = run(capsys, ["check", tetra_path])
    assert code == 0
    doc = json.loads(out)
    assert doc["valid"] is True
    assert doc["euler_characteristic"] == 2
    assert len(doc["faces"]) == 4
    assert all(not f["degenerate"] for f in doc["faces"])
    assert all(f["q"] == 3.0 for f in doc["faces"])


def test_check_invalid_mesh_exits_one(capsys, tmp_path):
    bad = meshes.unit_metric(meshes.TETRA_FACES[:-1], vertex_count=4)
    p = tmp_path / "open.json"
    p.write_bytes(to_metric_json(bad))
    code, out, err = run(capsys, ["check", str(p)])
    assert code == 1
    doc = json.loads(out)
    assert doc["valid"] is False
    assert any(i["code"] == "NotClosed" for i in doc["issues"])
    assert "NotClosed" in err


def test_check_with_degenerate_factors(capsys, tetra_path, tmp_path):
    f = tmp_path / "u.json"
    f.write_text(json.dumps({"u": [-6.0, 0.0, 0.0, 0.0]}))
    code, out, _ = run(capsys, ["check", tetra_path, "--factors", str(f)])
    assert code == 0
    doc = json.loads(out)
    degenerate = [face for face in doc["faces"] if face["degenerate"]]
    assert len(degenerate) == 3
    assert all(face["apex"] is not None for face in degenerate)


def test_angles_output(capsys, tetra_path):
    code, out, _ = run(capsys, ["angles", tetra_path])
    assert code == 0
    doc = json.loads(out)
    for face in doc["faces"]:
        assert face["angles"] == pytest.approx([math.pi / 3] * 3)
        assert face["extended_angles"] == face["angles"]


def test_curvature_output(capsys, tetra_path):
    code, out, _ = run(capsys, ["curvature", tetra_path])
    assert code == 0
    doc = json.loads(out)
    assert doc["K"] == pytest.approx([math.pi] * 4)
    assert doc["gauss_bonnet"]["pass"] is True
    assert doc["gauss_bonnet"]["lhs"] == pytest.approx(4 * math.pi)


def test_jacobian_per_face_and_global(capsys, tetra_path):
    code, out, _ = run(capsys, ["jacobian", tetra_path])
    assert code == 0
    doc = json.loads(out)
    want = (-math.sqrt(3) / 6) * np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])
    for face in doc["faces"]:
        assert np.allclose(face["matrix"], want, atol=1e-12)

    code, out, _ = run(capsys, ["jacobian", tetra_path, "--global"])
    assert code == 0
    doc = json.loads(out)
    assert doc["shape"] == [4, 4]
    dense = np.zeros((4, 4))
    for entry in doc["entries"]:
        dense[entry["row"], entry["col"]] = entry["value"]
    assert np.allclose(np.diag(dense), math.sqrt(3))
    assert np.allclose(dense, dense.T)


def test_energy_output(capsys, tetra_path, tmp_path):
    f = tmp_path / "u.json"
    f.write_text(json.dumps({"u": [0.25, -0.25, 0.1, -0.1]}))
    code, out, _ = run(capsys, ["energy", tetra_path, "--factors", str(f)])
    assert code == 0
    doc = json.loads(out)
    assert math.isfinite(doc["value"])


def test_solve_fixed_point(capsys, tetra_path, tmp_path):
    t = tmp_path / "target.json"
    t.write_text(json.dumps({"K": [math.pi] * 4}))
    code, out, _ = run(capsys, ["solve", tetra_path, "--target", str(t), "--tol", "1e-10"])
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"] is True
    assert doc["u"] == pytest.approx([0.0] * 4, abs=1e-10)
    assert doc["iterations"] <= 1
    assert doc["normalization"] == "sum_zero"


def test_solve_roundtrip_target(capsys, hyp_tetra_path, tmp_path):
    mm = meshes.tetra(Geometry.HYPERBOLIC)
    rng = np.random.default_rng(5)
    u_star = rng.uniform(-0.4, 0.4, 4)
    target = curvature(mm, u_star)
    t = tmp_path / "target.json"
    t.write_text(dumps({"K": list(target)}))
    code, out, _ = run(capsys, ["solve", hyp_tetra_path, "--target", str(t)])
    assert code == 0
    doc = json.loads(out)
    assert doc["converged"]
    assert doc["u"] == pytest.approx(list(u_star), abs=1e-8)


def test_solve_not_converged_exit_two(capsys, hyp_tetra_path, tmp_path):
    mm = meshes.tetra(Geometry.HYPERBOLIC)
    u_star = np.array([0.4, -0.2, 0.3, -0.5])
    t = tmp_path / "target.json"
    t.write_text(dumps({"K": list(curvature(mm, u_star))}))
    code, out, err = run(capsys, ["solve", hyp_tetra_path, "--target", str(t), "--max-iter", "1"])
    assert code == 2
    assert json.loads(out)["converged"] is False
    assert "not converged" in err


def test_solve_target_sum_mismatch_exit_one(capsys, tetra_path, tmp_path):
    t = tmp_path / "target.json"
    t.write_text(json.dumps({"K": [math.pi + 0.1, math.pi, math.pi, math.pi]}))
    code, _, err = run(capsys, ["solve", tetra_path, "--target", str(t)])
    assert code == 1
    assert "sum" in err


def test_rigidity_test_harness(capsys, hyp_tetra_path):
    code, out, _ = run(capsys, ["rigidity-test", hyp_tetra_path, "--trials", "4", "--seed", "3"])
    assert code == 0
    doc = json.loads(out)
    assert doc["pass"] is True
    assert doc["violations"] == 0
    assert doc["max_recovery_error"] < 1e-8


def test_obj_input(capsys, tmp_path):
    p = tmp_path / "cube.obj"
    p.write_bytes(meshes.CUBE_OBJ)
    code, out, _ = run(capsys, ["check", str(p)])
    assert code == 0
    doc = json.loads(out)
    assert doc["geometry"] == "euclidean"
    assert doc["num_vertices"] == 8
    assert doc["num_edges"] == 18


def test_missing_file_exit_three(capsys):
    code, _, err = run(capsys, ["curvature", "/nonexistent/mesh.json"])
    assert code == 3
    assert "no such file" in err


def test_bad_arguments_exit_three(capsys):
    code, _, _ = run(capsys, ["frobnicate"])
    assert code == 3


def test_reports_are_byte_identical(capsys, hyp_tetra_path, tmp_path):
    f = tmp_path / "u.json"
    f.write_text(json.dumps({"u": [0.3, -0.1, 0.2, -0.4]}))
    outputs = []
    for _ in range(2):
        code, out, _ = run(capsys, ["curvature", hyp_tetra_path, "--factors", str(f)])
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]

    # 17-significant-digit floats round-trip exactly
    doc = json.loads(outputs[0])
    mm = meshes.tetra(Geometry.HYPERBOLIC)
    exact = curvature(mm, np.array([0.3, -0.1, 0.2, -0.4]))
    assert list(exact) == doc["K"]
